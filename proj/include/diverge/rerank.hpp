// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Diverge Authors

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "diverge/embedding.hpp"
#include "diverge/index.hpp"

namespace diverge {

struct RerankParams {
    double alpha = 0.7;  // relevance weight; (1 - alpha) weighs intra-iteration redundancy
    double beta = 0.2;   // weight of the penalty against earlier iterations' chunks
    int k = 5;

    void validate() const;
};

/// Iteration-aware MMR. Greedily picks min(k, n) candidates, each step taking
///
///   argmax_d  alpha * rel(d) - beta * max_{h in memory} sim(d, h)
///                           - (1 - alpha) * max_{s in selected} sim(d, s)
///
/// over the remaining candidates. A max over an empty set is 0 and ties go to
/// the lowest index. Vectors must be unit-norm; returns candidate indices in
/// selection order.
std::vector<std::size_t> rerank_indices(std::span<const Embedding> candidates,
                                        std::span<const double> relevance,
                                        std::span<const Embedding> memory, double alpha,
                                        double beta, int k);

/// rerank_indices over scored chunks, using each chunk's stored relevance.
/// `query` only fixes the expected dimension.
std::vector<ScoredChunk> div_rerank(const std::vector<ScoredChunk>& candidates,
                                    const Embedding& query, std::span<const Embedding> memory,
                                    const RerankParams& params);

/// Classical MMR: div_rerank without the memory term (beta ignored).
std::vector<ScoredChunk> mmr_select(const std::vector<ScoredChunk>& candidates,
                                    const Embedding& query, const RerankParams& params);

}  // namespace diverge
