// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Diverge Authors

#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "diverge/core.hpp"
#include "diverge/prompts.hpp"
#include "diverge/providers.hpp"
#include "diverge/structured.hpp"

namespace diverge {

inline constexpr const char* kReportSchemaVersion = "1.0";
inline constexpr double kDefaultTau = 0.75;

/// Mean over unordered pairs of (1 - cos) / 2. Needs at least two vectors.
double semantic_diversity(std::span<const Embedding> embeddings);
double semantic_diversity(const ResponseSet& answers, Embedder& embedder);

/// Indices kept by the sequential greedy filter: the first vector is always
/// kept, every later one only if its similarity to all kept ones is < tau.
std::vector<std::size_t> unique_indices(std::span<const Embedding> vectors, double tau = kDefaultTau);
std::size_t count_unique(std::span<const Embedding> vectors, double tau = kDefaultTau);

struct Claim {
    std::string text;
    std::string answer_id;
    Embedding embedding;
};

struct ClaimSet {
    std::string query_id;
    std::vector<Claim> claims;

    std::size_t total() const noexcept { return claims.size(); }
};

std::vector<std::string> extract_claims(ChatModel& model, const Query& q, const Answer& a,
                                        const PromptLibrary& prompts = PromptLibrary::defaults());

/// Claims of every answer, in answer order then claim order, embedded.
ClaimSet collect_claims(ChatModel& model, const ResponseSet& answers, Embedder& embedder,
                        const PromptLibrary& prompts = PromptLibrary::defaults());

/// unique / total, or nullopt when no claim was extracted.
std::optional<double> viewpoint_diversity(const ClaimSet& claims, double tau = kDefaultTau);
std::optional<double> viewpoint_diversity(ChatModel& model, const ResponseSet& answers, Embedder& embedder,
                                          double tau = kDefaultTau,
                                          const PromptLibrary& prompts = PromptLibrary::defaults());

struct QualityVerdict {
    Verdict verdict = Verdict::Irrelevant;
    std::string reason;
    int score = 1;
};

QualityVerdict judge_quality(ChatModel& judge, const Query& q, const Answer& a,
                             const PromptLibrary& prompts = PromptLibrary::defaults());

/// Mean judge score over the answers.
double quality_score(ChatModel& judge, const ResponseSet& answers,
                     const PromptLibrary& prompts = PromptLibrary::defaults());

/// (x - min) / (max - min) across configurations; 1.0 everywhere when all
/// values coincide. Needs at least two entries.
std::map<std::string, double> minmax_normalize(const std::map<std::string, double>& values);

/// Harmonic mean 2qd / (q + d), 0 when both are 0.
double unified_score(double q_norm, double d_norm);

struct EvalOptions {
    double tau = kDefaultTau;
    /// Skip claim extraction entirely.
    bool viewpoint = true;
};

struct EvalRow {
    std::string query_id;
    std::string config;
    double d_sem = 0.0;
    std::optional<double> d_view;
    double quality_mean = 0.0;
    double q_norm = 0.0;
    double d_sem_norm = 0.0;
    std::optional<double> d_view_norm;
    double unified_sem = 0.0;
    std::optional<double> unified_view;
};

struct EvalAggregate {
    std::string config;
    std::size_t queries = 0;
    double d_sem = 0.0;
    std::optional<double> d_view;
    double quality_mean = 0.0;
    double unified_sem = 0.0;
    std::optional<double> unified_view;
    /// Queries that contributed a d_view value.
    std::size_t d_view_coverage = 0;
};

struct EvalReport {
    double tau = kDefaultTau;
    std::vector<std::string> configs;
    std::vector<EvalRow> rows;  // query order, then config order
    std::vector<EvalAggregate> aggregates;
    /// Query/config pairs with no extracted claims.
    std::size_t d_view_missing = 0;

    const EvalAggregate& aggregate(const std::string& config) const;
    nlohmann::json to_json() const;
    /// One row per query x config followed by one "__aggregate__" row per config.
    std::string to_csv() const;
};

/// Scores every response set, normalizes per query across configurations and
/// averages over queries. Every configuration must cover the same query ids.
EvalReport evaluate(const std::map<std::string, std::vector<ResponseSet>>& response_sets, ChatModel& judge,
                    Embedder& embedder, const EvalOptions& options = {},
                    const PromptLibrary& prompts = PromptLibrary::defaults());

}  // namespace diverge
