// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Diverge Authors

#include "diverge/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "diverge/errors.hpp"

namespace diverge {

Embedding Embedding::normalized(std::vector<double> values) {
    const double n = std::sqrt(std::inner_product(values.begin(), values.end(), values.begin(), 0.0));
    if (n == 0.0 || !std::isfinite(n)) {
        throw ContractError("cannot normalize a zero or non-finite vector");
    }
    for (auto& v : values) v /= n;
    return Embedding(std::move(values));
}

double Embedding::norm() const noexcept {
    return std::sqrt(std::inner_product(values_.begin(), values_.end(), values_.begin(), 0.0));
}

double dot(const Embedding& a, const Embedding& b) {
    if (a.dimension() != b.dimension()) {
        throw ContractError("embedding dimension mismatch: " + std::to_string(a.dimension()) +
                            " vs " + std::to_string(b.dimension()));
    }
    const auto av = a.values();
    const auto bv = b.values();
    return std::inner_product(av.begin(), av.end(), bv.begin(), 0.0);
}

double cosine_similarity(const Embedding& a, const Embedding& b) {
    const double d = dot(a, b);
    const double denom = a.norm() * b.norm();
    if (denom == 0.0) throw ContractError("cosine similarity of a zero vector");
    return std::clamp(d / denom, -1.0, 1.0);
}

double max_similarity(const Embedding& v, std::span<const Embedding> others) {
    if (others.empty()) return 0.0;
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& o : others) best = std::max(best, dot(v, o));
    return best;
}

}  // namespace diverge
