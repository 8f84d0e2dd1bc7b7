// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Diverge Authors

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "diverge/core.hpp"
#include "diverge/index.hpp"
#include "diverge/prompts.hpp"
#include "diverge/providers.hpp"
#include "diverge/rerank.hpp"
#include "diverge/websearch.hpp"

namespace diverge {

inline constexpr const char* kTraceSchemaVersion = "1.0";

struct EngineOptions {
    /// Ablation: skip retrieval and generate from the question/viewpoint alone.
    bool no_search = false;
    /// Ablation: keep answers unrefined.
    bool no_refine = false;
    /// Seeds the context shuffles of the shuffle baselines.
    std::uint64_t seed = 0;
    /// Name recorded on response sets; defaults to the strategy name.
    std::string config_name;
    std::function<std::string()> clock = now_iso8601;
    std::shared_ptr<const Tokenizer> tokenizer;
};

/// Everything recorded about one produced answer.
struct AnswerTrace {
    std::string answer_id;
    int iteration = 0;
    std::optional<Viewpoint> viewpoint;
    Query query;  // query used for retrieval (the user question, q_t or a rewrite)
    std::vector<Evidence> evidence;
    std::string text;
    bool refined = false;
    std::string started_at;
    std::string finished_at;
};

struct RunResult {
    Strategy strategy = Strategy::diverge;
    std::uint64_t seed = 0;
    ResponseSet responses;
    std::vector<AnswerTrace> trace;
    /// Viewpoints accumulated by the iterative strategy (empty for baselines).
    std::vector<Viewpoint> views;
    std::optional<DiversityMemory> memory;
};

/// Runs one query under one strategy. A single run is sequential; an Engine
/// is not meant to be shared across threads.
class Engine {
public:
    /// `retriever` may be null for strategies that do not retrieve.
    Engine(ChatModel& chat, Embedder& embedder, DocumentRetriever* retriever, RunConfig config,
           EngineOptions options = {}, const PromptLibrary& prompts = PromptLibrary::defaults());

    /// Dispatches on config.strategy.
    RunResult run(const Query& q);

    /// Iterative viewpoint reflection with memory-aware retrieval; exactly K answers.
    RunResult run_diverge(const Query& q);
    RunResult run_baseline(Strategy strategy, const Query& q);

    std::vector<Viewpoint> summarize_views(const Query& q, const std::vector<Answer>& answers);
    Viewpoint reflect_new_view(const Query& q, const std::vector<Viewpoint>& existing, int iteration);
    Query view_query(const Viewpoint& view);
    Answer generate_answer(const Query& q, const std::vector<Chunk>& chunks,
                           const std::optional<Viewpoint>& view, int iteration);
    /// Returns `a` unchanged when no_refine is set.
    Answer refine_answer(const Query& q, const Answer& a, const std::optional<Viewpoint>& view);
    std::vector<Query> multi_query_expand(const Query& q, int k);

    /// Retrieval round: fetch documents, index them, and score the top
    /// candidate_pool chunks against `query_text`. Empty when nothing was found.
    struct Pool {
        Embedding query_vec;
        std::vector<ScoredChunk> candidates;
    };
    std::optional<Pool> retrieve_pool(const std::string& query_text);

    const RunConfig& config() const noexcept { return config_; }

private:
    RunResult start(Strategy strategy, const Query& q) const;
    void record(RunResult& run, Answer answer, const Query& used, std::optional<Viewpoint> view,
                std::string started_at) const;
    std::vector<std::string> closed_book_answers(const Query& q, int k, std::vector<ChatMessage> history,
                                                 std::string* raw_reply);
    DocumentRetriever& retriever();
    RerankParams rerank_params() const;

    ChatModel& chat_;
    Embedder& embedder_;
    DocumentRetriever* retriever_;
    RunConfig config_;
    EngineOptions options_;
    const PromptLibrary& prompts_;
};

/// Context block handed to the generation prompt: chunks in the given order,
/// each under a "[source: url]" header, separated by blank lines.
std::string assemble_context(const std::vector<Chunk>& chunks);

/// Serialized run trace (schema_version 1.x).
nlohmann::json trace_to_json(const RunResult& run, const RunConfig& config,
                             const EngineOptions& options);

/// Response set from a trace file's JSON. Rejects unknown major versions.
ResponseSet response_set_from_trace(const nlohmann::json& trace);

/// Throws ContractError unless `version` has major version `major`.
void check_schema_version(const nlohmann::json& doc, int major, const std::string& what);

}  // namespace diverge
