// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Diverge Authors

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "diverge/embedding.hpp"

namespace diverge {

using json = nlohmann::json;

enum class QueryOrigin { user, viewpoint_derived, rewrite };

struct Query {
    std::string id;
    std::string text;
    QueryOrigin origin = QueryOrigin::user;
    std::optional<std::string> parent_viewpoint;

    /// Builds a user query whose id is a content hash of the trimmed text.
    static Query from_user(std::string_view text);

    /// Throws ContractError if the text is blank or a viewpoint-derived
    /// query has no parent viewpoint.
    void validate() const;
};

/// A labeled perspective used to steer retrieval and generation.
struct Viewpoint {
    std::string id;
    std::string label;
    std::string description;
    int source_iteration = 0;

    /// Label word count in [2,5] and a non-empty description. Model output
    /// drifts, so callers log a violation instead of failing.
    bool well_formed() const;

    /// "label: description", the form used when a viewpoint fills a prompt slot.
    std::string as_text() const;
};

struct Evidence {
    std::string url;
    int token_start = 0;
    int token_end = 0;

    friend bool operator==(const Evidence&, const Evidence&) = default;
};

struct Answer {
    std::string id;
    std::string text;
    int iteration = 0;
    std::optional<std::string> viewpoint;
    std::vector<Evidence> evidence;
    bool refined = false;
};

struct MemoryEntry {
    int iteration = 0;
    Query query;
    std::optional<Viewpoint> viewpoint;
    Answer answer;
    std::vector<Embedding> chunk_embeddings;
};

/// Per-query history of issued queries, retrieved chunk embeddings,
/// viewpoints and answers across iterations.
class DiversityMemory {
public:
    /// Appends `entry`, whose iteration must equal size(). Chunk embeddings are
    /// L2-normalized on insertion and must share one dimension across the memory.
    void append(MemoryEntry entry);

    /// Adds viewpoints not yet present (matched by id).
    void add_views(const std::vector<Viewpoint>& views);

    /// Chunk embeddings of every entry with iteration < before_iteration,
    /// in insertion order.
    std::vector<Embedding> embeddings_before(int before_iteration) const;

    const std::vector<MemoryEntry>& entries() const noexcept { return entries_; }
    const std::vector<Viewpoint>& views() const noexcept { return views_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }

private:
    bool has_view(const std::string& id) const;

    std::vector<MemoryEntry> entries_;
    std::vector<Viewpoint> views_;
    std::size_t dimension_ = 0;
};

enum class Strategy {
    diverge,
    independent_sampling,
    list_generation,
    iterative_generation,
    verbalized_sampling,
    vanilla_rag,
    rag_div_rerank,
    rag_shuffle,
    rag_multi_query,
    rag_all,
};

std::string_view to_string(Strategy s);
Strategy strategy_from_string(std::string_view name);
const std::vector<Strategy>& all_strategies();
bool uses_retrieval(Strategy s);

/// The K answers produced for one query under one configuration.
struct ResponseSet {
    Query query;
    std::string config_name;
    std::vector<Answer> answers;
    std::string created_at;

    /// Throws ContractError unless there are exactly `k` answers with
    /// distinct ids.
    void validate(int k) const;
};

struct RunConfig {
    int k = 10;
    int final_top_k = 5;
    int candidate_pool = 20;
    double alpha = 0.7;
    double beta = 0.2;
    int chunk_size_tokens = 512;
    int chunk_overlap_tokens = 50;
    int min_doc_chars = 128;
    int web_docs_per_query = 10;
    double tau = 0.75;
    Strategy strategy = Strategy::diverge;

    /// Throws ConfigError on any out-of-range field.
    void validate() const;
};

std::string trim(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);

/// UTC wall-clock time as ISO-8601 with a trailing 'Z'.
std::string now_iso8601();

void to_json(json& j, const Query& q);
void from_json(const json& j, Query& q);
void to_json(json& j, const Viewpoint& v);
void from_json(const json& j, Viewpoint& v);
void to_json(json& j, const Evidence& e);
void from_json(const json& j, Evidence& e);
void to_json(json& j, const Answer& a);
void from_json(const json& j, Answer& a);
void to_json(json& j, const Embedding& e);
void from_json(const json& j, Embedding& e);
void to_json(json& j, const MemoryEntry& m);
void from_json(const json& j, MemoryEntry& m);
void to_json(json& j, const DiversityMemory& m);
void from_json(const json& j, DiversityMemory& m);
void to_json(json& j, const ResponseSet& r);
void from_json(const json& j, ResponseSet& r);
void to_json(json& j, const RunConfig& c);
void from_json(const json& j, RunConfig& c);

}  // namespace diverge
