// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Diverge Authors

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace diverge {

/// Dense embedding vector. Vectors produced by embedders and stored in
/// indexes or memory are unit-norm, so cosine similarity is a dot product.
class Embedding {
public:
    Embedding() = default;
    explicit Embedding(std::vector<double> values) : values_(std::move(values)) {}

    /// L2-normalized copy of `values`. Throws ContractError on a zero vector.
    static Embedding normalized(std::vector<double> values);

    std::size_t dimension() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    double norm() const noexcept;
    bool empty() const noexcept { return values_.empty(); }

    friend bool operator==(const Embedding&, const Embedding&) = default;

private:
    std::vector<double> values_;
};

double dot(const Embedding& a, const Embedding& b);

/// dot(a,b) / (|a||b|), clamped to [-1, 1]. Throws ContractError on a
/// dimension mismatch or a zero vector.
double cosine_similarity(const Embedding& a, const Embedding& b);

/// Max similarity of `v` to any vector in `others`; 0 when `others` is empty.
/// Assumes unit-norm inputs.
double max_similarity(const Embedding& v, std::span<const Embedding> others);

}  // namespace diverge
