// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Diverge Authors

#include "diverge/rerank.hpp"

#include <algorithm>
#include <limits>

#include "diverge/errors.hpp"

namespace diverge {

void RerankParams::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ContractError("alpha must be in [0,1]");
    if (!(beta >= 0.0)) throw ContractError("beta must be >= 0");
    if (k < 1) throw ContractError("rerank k must be >= 1");
}

std::vector<std::size_t> rerank_indices(std::span<const Embedding> candidates,
                                        std::span<const double> relevance,
                                        std::span<const Embedding> memory, double alpha,
                                        double beta, int k) {
    RerankParams{alpha, beta, k}.validate();
    if (candidates.empty()) throw ContractError("rerank needs at least one candidate");
    if (relevance.size() != candidates.size()) {
        throw ContractError("rerank: one relevance score per candidate required");
    }
    const auto dim = candidates.front().dimension();
    for (const auto& c : candidates) {
        if (c.dimension() != dim) throw ContractError("rerank: candidate dimension mismatch");
    }
    for (const auto& m : memory) {
        if (m.dimension() != dim) throw ContractError("rerank: memory dimension mismatch");
    }

    // The memory term does not change within an iteration.
    std::vector<double> memory_penalty(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        memory_penalty[i] = max_similarity(candidates[i], memory);
    }

    const auto want = std::min(candidates.size(), static_cast<std::size_t>(k));
    std::vector<std::size_t> selected;
    std::vector<Embedding> selected_vecs;
    std::vector<bool> taken(candidates.size(), false);
    while (selected.size() < want) {
        std::size_t best = candidates.size();
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (taken[i]) continue;
            const double score = alpha * relevance[i] - beta * memory_penalty[i] -
                                 (1.0 - alpha) * max_similarity(candidates[i], selected_vecs);
            if (best == candidates.size() || score > best_score) {
                best = i;
                best_score = score;
            }
        }
        taken[best] = true;
        selected.push_back(best);
        selected_vecs.push_back(candidates[best]);
    }
    return selected;
}

namespace {

std::vector<ScoredChunk> select(const std::vector<ScoredChunk>& candidates, const Embedding& query,
                                std::span<const Embedding> memory, double alpha, double beta, int k) {
    if (candidates.empty()) throw ContractError("rerank needs at least one candidate");
    std::vector<Embedding> vecs;
    std::vector<double> rel;
    vecs.reserve(candidates.size());
    rel.reserve(candidates.size());
    for (const auto& c : candidates) {
        if (c.chunk.embedding.dimension() != query.dimension()) {
            throw ContractError("rerank: candidate and query dimensions differ");
        }
        vecs.push_back(c.chunk.embedding);
        rel.push_back(c.relevance);
    }
    std::vector<ScoredChunk> out;
    for (auto i : rerank_indices(vecs, rel, memory, alpha, beta, k)) out.push_back(candidates[i]);
    return out;
}

}  // namespace

std::vector<ScoredChunk> div_rerank(const std::vector<ScoredChunk>& candidates, const Embedding& query,
                                    std::span<const Embedding> memory, const RerankParams& params) {
    return select(candidates, query, memory, params.alpha, params.beta, params.k);
}

std::vector<ScoredChunk> mmr_select(const std::vector<ScoredChunk>& candidates, const Embedding& query,
                                    const RerankParams& params) {
    return select(candidates, query, {}, params.alpha, 0.0, params.k);
}

}  // namespace diverge
