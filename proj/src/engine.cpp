// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Diverge Authors

#include "diverge/engine.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <map>
#include <set>

#include "diverge/errors.hpp"
#include "diverge/structured.hpp"

namespace diverge {

namespace {

std::vector<Chunk> chunks_of(const std::vector<ScoredChunk>& scored) {
    std::vector<Chunk> out;
    out.reserve(scored.size());
    for (const auto& s : scored) out.push_back(s.chunk);
    return out;
}

std::vector<Chunk> head(const std::vector<ScoredChunk>& scored, int n) {
    auto out = chunks_of(scored);
    if (static_cast<int>(out.size()) > n) out.resize(static_cast<std::size_t>(n));
    return out;
}

/// Parser wrapper enforcing an exact item count so a miscount takes the
/// same single retry path as malformed JSON.
template <typename Parse>
auto exactly(std::size_t n, Parse parse, const char* what) {
    return [n, parse, what](std::string_view raw) {
        auto items = parse(raw);
        if (items.size() != n) {
            throw ParseError(std::string("expected exactly ") + std::to_string(n) + " " + what + ", got " +
                                 std::to_string(items.size()),
                             std::string(raw));
        }
        return items;
    };
}

std::string render_answers(const std::vector<Answer>& answers) {
    std::string out;
    for (std::size_t i = 0; i < answers.size(); ++i) {
        if (i) out += "\n\n";
        out += "Answer " + std::to_string(i + 1) + ":\n" + answers[i].text;
    }
    return out;
}

std::string render_views(const std::vector<Viewpoint>& views) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& v : views) arr.push_back({{"label", v.label}, {"description", v.description}});
    return arr.dump(2);
}

}  // namespace

std::string assemble_context(const std::vector<Chunk>& chunks) {
    std::string out;
    for (const auto& c : chunks) {
        if (!out.empty()) out += "\n\n";
        out += "[source: " + c.doc_url + "]\n" + c.text;
    }
    return out;
}

Engine::Engine(ChatModel& chat, Embedder& embedder, DocumentRetriever* retriever, RunConfig config,
               EngineOptions options, const PromptLibrary& prompts)
    : chat_(chat),
      embedder_(embedder),
      retriever_(retriever),
      config_(config),
      options_(std::move(options)),
      prompts_(prompts) {
    config_.validate();
    if (!options_.clock) options_.clock = now_iso8601;
}

DocumentRetriever& Engine::retriever() {
    if (retriever_ == nullptr) throw ContractError("this strategy needs a document retriever");
    return *retriever_;
}

RerankParams Engine::rerank_params() const {
    return RerankParams{config_.alpha, config_.beta, config_.final_top_k};
}

RunResult Engine::start(Strategy strategy, const Query& q) const {
    q.validate();
    RunResult run;
    run.strategy = strategy;
    run.seed = options_.seed;
    run.responses.query = q;
    run.responses.config_name =
        options_.config_name.empty() ? std::string(to_string(strategy)) : options_.config_name;
    run.responses.created_at = options_.clock();
    return run;
}

void Engine::record(RunResult& run, Answer answer, const Query& used, std::optional<Viewpoint> view,
                    std::string started_at) const {
    AnswerTrace t;
    t.answer_id = answer.id;
    t.iteration = answer.iteration;
    t.viewpoint = std::move(view);
    t.query = used;
    t.evidence = answer.evidence;
    t.text = answer.text;
    t.refined = answer.refined;
    t.started_at = std::move(started_at);
    t.finished_at = options_.clock();
    run.trace.push_back(std::move(t));
    run.responses.answers.push_back(std::move(answer));
}

RunResult Engine::run(const Query& q) {
    return config_.strategy == Strategy::diverge ? run_diverge(q) : run_baseline(config_.strategy, q);
}

// ---- retrieval ------------------------------------------------------------------

std::optional<Engine::Pool> Engine::retrieve_pool(const std::string& query_text) {
    auto result = retriever().retrieve(query_text, config_.web_docs_per_query);
    if (result.retrieval_empty()) return std::nullopt;
    ChunkingOptions chunking{config_.chunk_size_tokens, config_.chunk_overlap_tokens, options_.tokenizer};
    const auto index = VectorIndex::build(result.documents, embedder_, chunking);
    Pool pool;
    pool.query_vec = embedder_.embed_one(query_text);
    pool.candidates = index.top_candidates(pool.query_vec, config_.candidate_pool);
    if (pool.candidates.empty()) return std::nullopt;
    return pool;
}

// ---- building blocks --------------------------------------------------------------

std::vector<Viewpoint> Engine::summarize_views(const Query& q, const std::vector<Answer>& answers) {
    if (answers.empty()) throw ContractError("summarize_views needs at least one answer");
    ChatRequest req;
    req.tag = "summary";
    req.prompt = prompts_.get(PromptName::summary)
                     .render({{"QUESTION", q.text}, {"ANSWERS", render_answers(answers)}});
    const auto parsed = ask_structured(chat_, req, parse_views);
    std::vector<Viewpoint> out;
    for (std::size_t i = 0; i < parsed.size(); ++i) {
        Viewpoint v{q.id + "-v0." + std::to_string(i + 1), parsed[i].label, parsed[i].description, 0};
        if (!v.well_formed()) spdlog::warn("summary view '{}' does not have a 2-5 word label", v.label);
        out.push_back(std::move(v));
    }
    return out;
}

Viewpoint Engine::reflect_new_view(const Query& q, const std::vector<Viewpoint>& existing, int iteration) {
    ChatRequest req;
    req.tag = "reflection";
    req.prompt = prompts_.get(PromptName::reflection)
                     .render({{"QUESTION", q.text}, {"VIEWS", render_views(existing)}});
    const auto parsed = ask_structured(chat_, req, parse_view);
    Viewpoint v{q.id + "-v" + std::to_string(iteration), parsed.label, parsed.description, iteration};
    if (!v.well_formed()) spdlog::warn("reflected view '{}' does not have a 2-5 word label", v.label);
    for (const auto& e : existing) {
        if (e.label == v.label) spdlog::info("reflected view '{}' repeats an existing label", v.label);
    }
    return v;
}

Query Engine::view_query(const Viewpoint& view) {
    ChatRequest req;
    req.tag = "query_gen";
    req.prompt = prompts_.get(PromptName::query_gen).render({{"ANSWER", view.as_text()}});
    Query out;
    out.text = ask_structured(chat_, req, parse_single_question);
    out.id = view.id + "-q";
    out.origin = QueryOrigin::viewpoint_derived;
    out.parent_viewpoint = view.id;
    out.validate();
    return out;
}

Answer Engine::generate_answer(const Query& q, const std::vector<Chunk>& chunks,
                               const std::optional<Viewpoint>& view, int iteration) {
    std::string view_block;
    if (view) {
        view_block = "\nPerspective to prioritize:\n" + view->as_text() +
                     "\nFrame the answer from this perspective while still answering the Question.\n";
    }
    ChatRequest req;
    req.tag = "rag_answer";
    req.prompt = prompts_.get(PromptName::rag_answer)
                     .render({{"QUESTION", q.text},
                              {"VIEW_BLOCK", view_block},
                              {"CONTEXT", chunks.empty() ? "(no retrieved context)" : assemble_context(chunks)}});
    Answer a;
    a.text = trim(chat_.chat(req));
    if (a.text.empty()) throw ProviderError("model returned an empty answer", false);
    a.id = q.id + "-a" + std::to_string(iteration);
    a.iteration = iteration;
    if (view) a.viewpoint = view->id;
    for (const auto& c : chunks) a.evidence.push_back({c.doc_url, c.token_start, c.token_end});
    return a;
}

Answer Engine::refine_answer(const Query& q, const Answer& a, const std::optional<Viewpoint>& view) {
    if (a.refined) throw ContractError("answer '" + a.id + "' is already refined");
    if (options_.no_refine) return a;
    ChatRequest req;
    if (view) {
        req.tag = "refine_with_view";
        req.prompt = prompts_.get(PromptName::refine_with_view)
                         .render({{"QUESTION", q.text}, {"VIEW", view->as_text()}, {"ANSWER", a.text}});
    } else {
        req.tag = "refine_without_view";
        req.prompt = prompts_.get(PromptName::refine_without_view)
                         .render({{"QUESTION", q.text}, {"ANSWER", a.text}});
    }
    Answer out = a;
    out.text = trim(chat_.chat(req));
    if (out.text.empty()) throw ProviderError("model returned an empty refinement", false);
    out.refined = true;
    return out;
}

std::vector<Query> Engine::multi_query_expand(const Query& q, int k) {
    if (k < 1) throw ContractError("multi_query_expand: k must be >= 1");
    ChatRequest req;
    req.tag = "multi_query";
    req.prompt = prompts_.get(PromptName::multi_query).render({{"QUERY", q.text}, {"k", std::to_string(k)}});
    const auto texts = ask_structured(chat_, req, exactly(static_cast<std::size_t>(k), parse_queries, "queries"));
    std::vector<Query> out;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        Query r;
        r.id = q.id + "-r" + std::to_string(i);
        r.text = texts[i];
        r.origin = QueryOrigin::rewrite;
        out.push_back(std::move(r));
    }
    return out;
}

// ---- iterative strategy -------------------------------------------------------------

RunResult Engine::run_diverge(const Query& q) {
    RunResult run = start(Strategy::diverge, q);
    DiversityMemory memory;
    const auto params = rerank_params();

    for (int t = 0; t < config_.k; ++t) {
        const auto started = options_.clock();
        std::optional<Viewpoint> view;
        Query query_t = q;
        if (t > 0) {
            view = reflect_new_view(q, memory.views(), t);
            query_t = view_query(*view);
        }

        std::vector<ScoredChunk> selected;
        if (!options_.no_search) {
            if (auto pool = retrieve_pool(query_t.text)) {
                const auto history = memory.embeddings_before(t);
                selected = div_rerank(pool->candidates, pool->query_vec, history, params);
            } else if (t == 0) {
                throw RetrievalEmptyError("no documents retrieved for '" + q.text + "'");
            } else {
                spdlog::warn("iteration {}: nothing retrieved for '{}', generating without evidence", t,
                             query_t.text);
            }
        }

        Answer answer = generate_answer(q, chunks_of(selected), view, t);
        answer = refine_answer(q, answer, view);

        MemoryEntry entry;
        entry.iteration = t;
        entry.query = query_t;
        entry.viewpoint = view;
        entry.answer = answer;
        for (const auto& s : selected) entry.chunk_embeddings.push_back(s.chunk.embedding);
        memory.append(std::move(entry));

        if (t == 0) memory.add_views(summarize_views(q, {answer}));
        record(run, std::move(answer), query_t, view, started);
    }

    run.views = memory.views();
    run.memory = std::move(memory);
    run.responses.validate(config_.k);
    return run;
}

// ---- baselines ------------------------------------------------------------------

std::vector<std::string> Engine::closed_book_answers(const Query& q, int k, std::vector<ChatMessage> history,
                                                     std::string* raw_reply) {
    ChatRequest req;
    req.tag = "baseline_list";
    req.history = std::move(history);
    req.prompt = prompts_.get(PromptName::baseline_list)
                     .render({{"QUESTION", q.text}, {"K", std::to_string(k)}});
    auto answers = ask_structured(chat_, req, exactly(static_cast<std::size_t>(k), parse_answers, "answers"));
    if (raw_reply != nullptr) *raw_reply = req.prompt;
    return answers;
}

RunResult Engine::run_baseline(Strategy strategy, const Query& q) {
    if (strategy == Strategy::diverge) throw ContractError("run_baseline called with the diverge strategy");
    RunResult run = start(strategy, q);
    const int k = config_.k;
    std::mt19937_64 rng(options_.seed);

    auto make_answer = [&](int i, std::string text) {
        Answer a;
        a.id = q.id + "-a" + std::to_string(i);
        a.iteration = i;
        a.text = std::move(text);
        return a;
    };
    auto shuffled = [&](std::vector<Chunk> ctx) {
        std::shuffle(ctx.begin(), ctx.end(), rng);
        return ctx;
    };
    auto require_pool = [&](const std::string& text) {
        auto pool = options_.no_search ? std::nullopt : retrieve_pool(text);
        if (!pool && !options_.no_search) throw RetrievalEmptyError("no documents retrieved for '" + text + "'");
        return pool;
    };

    switch (strategy) {
        case Strategy::independent_sampling:
            for (int i = 0; i < k; ++i) {
                const auto started = options_.clock();
                auto texts = closed_book_answers(q, 1, {}, nullptr);
                record(run, make_answer(i, texts.front()), q, std::nullopt, started);
            }
            break;

        case Strategy::iterative_generation: {
            std::vector<ChatMessage> history;
            for (int i = 0; i < k; ++i) {
                const auto started = options_.clock();
                std::string prompt;
                auto texts = closed_book_answers(q, 1, history, &prompt);
                history.push_back({"user", prompt});
                history.push_back({"assistant", nlohmann::json{{"answers", texts}}.dump()});
                record(run, make_answer(i, texts.front()), q, std::nullopt, started);
            }
            break;
        }

        case Strategy::list_generation: {
            const auto started = options_.clock();
            auto texts = closed_book_answers(q, k, {}, nullptr);
            for (int i = 0; i < k; ++i) record(run, make_answer(i, texts[static_cast<std::size_t>(i)]), q, std::nullopt, started);
            break;
        }

        case Strategy::verbalized_sampling: {
            const auto started = options_.clock();
            ChatRequest req;
            req.tag = "verbalized";
            req.prompt = prompts_.get(PromptName::verbalized)
                             .render({{"QUESTION", q.text}, {"K", std::to_string(k)}});
            const auto parsed = ask_structured(
                chat_, req, exactly(static_cast<std::size_t>(k), parse_answers_with_prob, "answers"));
            for (int i = 0; i < k; ++i) {
                record(run, make_answer(i, parsed[static_cast<std::size_t>(i)].text), q, std::nullopt, started);
            }
            break;
        }

        case Strategy::vanilla_rag:
        case Strategy::rag_div_rerank:
        case Strategy::rag_shuffle: {
            const auto pool = require_pool(q.text);
            std::vector<Chunk> ctx;
            if (pool) {
                ctx = strategy == Strategy::rag_div_rerank
                          ? chunks_of(mmr_select(pool->candidates, pool->query_vec, rerank_params()))
                          : head(pool->candidates, config_.final_top_k);
            }
            for (int i = 0; i < k; ++i) {
                const auto started = options_.clock();
                const auto used = strategy == Strategy::rag_shuffle ? shuffled(ctx) : ctx;
                record(run, generate_answer(q, used, std::nullopt, i), q, std::nullopt, started);
            }
            break;
        }

        case Strategy::rag_multi_query: {
            const auto rewrites = multi_query_expand(q, k);
            for (int i = 0; i < k; ++i) {
                const auto started = options_.clock();
                const auto& rq = rewrites[static_cast<std::size_t>(i)];
                std::vector<Chunk> ctx;
                if (!options_.no_search) {
                    if (auto pool = retrieve_pool(rq.text)) {
                        ctx = head(pool->candidates, config_.final_top_k);
                    } else {
                        spdlog::warn("rewrite '{}' retrieved nothing, generating without evidence", rq.text);
                    }
                }
                record(run, generate_answer(q, ctx, std::nullopt, i), rq, std::nullopt, started);
            }
            break;
        }

        case Strategy::rag_all: {
            // expand -> per-rewrite retrieval -> merged pool -> MMR -> shuffle per generation
            const auto rewrites = multi_query_expand(q, k);
            std::vector<Chunk> ctx;
            if (!options_.no_search) {
                const auto query_vec = embedder_.embed_one(q.text);
                std::vector<ScoredChunk> merged;
                std::set<std::pair<std::string, int>> seen;
                for (const auto& rq : rewrites) {
                    auto pool = retrieve_pool(rq.text);
                    if (!pool) continue;
                    for (auto& c : pool->candidates) {
                        if (!seen.insert({c.chunk.doc_url, c.chunk.token_start}).second) continue;
                        c.relevance = cosine_similarity(c.chunk.embedding, query_vec);
                        merged.push_back(std::move(c));
                    }
                }
                if (merged.empty()) throw RetrievalEmptyError("no documents retrieved for any rewrite of '" + q.text + "'");
                std::stable_sort(merged.begin(), merged.end(),
                                 [](const ScoredChunk& a, const ScoredChunk& b) { return a.relevance > b.relevance; });
                ctx = chunks_of(mmr_select(merged, query_vec, rerank_params()));
            }
            for (int i = 0; i < k; ++i) {
                const auto started = options_.clock();
                record(run, generate_answer(q, shuffled(ctx), std::nullopt, i),
                       rewrites[static_cast<std::size_t>(i)], std::nullopt, started);
            }
            break;
        }

        case Strategy::diverge:
            break;
    }

    run.responses.validate(k);
    return run;
}

// ---- traces ---------------------------------------------------------------------

void check_schema_version(const nlohmann::json& doc, int major, const std::string& what) {
    const auto v = doc.value("schema_version", std::string{});
    const auto dot = v.find('.');
    int got = -1;
    try {
        got = std::stoi(v.substr(0, dot));
    } catch (const std::exception&) {
        throw ContractError(what + ": missing or malformed schema_version '" + v + "'");
    }
    if (got != major) {
        throw ContractError(what + ": unsupported schema_version " + v + " (expected " +
                            std::to_string(major) + ".x)");
    }
}

nlohmann::json trace_to_json(const RunResult& run, const RunConfig& config, const EngineOptions& options) {
    nlohmann::json answers = nlohmann::json::array();
    for (const auto& t : run.trace) {
        std::vector<std::string> urls;
        for (const auto& e : t.evidence) {
            if (std::find(urls.begin(), urls.end(), e.url) == urls.end()) urls.push_back(e.url);
        }
        answers.push_back({{"id", t.answer_id},
                           {"iteration", t.iteration},
                           {"viewpoint", t.viewpoint ? nlohmann::json(*t.viewpoint) : nlohmann::json(nullptr)},
                           {"query", t.query},
                           {"evidence_urls", urls},
                           {"evidence", t.evidence},
                           {"text", t.text},
                           {"refined", t.refined},
                           {"started_at", t.started_at},
                           {"finished_at", t.finished_at}});
    }
    return {{"schema_version", kTraceSchemaVersion},
            {"strategy", std::string(to_string(run.strategy))},
            {"config_name", run.responses.config_name},
            {"seed", run.seed},
            {"query", run.responses.query},
            {"created_at", run.responses.created_at},
            {"run_config", config},
            {"flags", {{"no_search", options.no_search}, {"no_refine", options.no_refine}}},
            {"views", run.views},
            {"answers", std::move(answers)}};
}

ResponseSet response_set_from_trace(const nlohmann::json& trace) {
    check_schema_version(trace, 1, "trace");
    ResponseSet rs;
    trace.at("query").get_to(rs.query);
    rs.config_name = trace.value("config_name", std::string{});
    rs.created_at = trace.value("created_at", std::string{});
    for (const auto& a : trace.at("answers")) {
        Answer ans;
        a.at("id").get_to(ans.id);
        a.at("text").get_to(ans.text);
        ans.iteration = a.value("iteration", 0);
        ans.refined = a.value("refined", false);
        ans.evidence = a.value("evidence", std::vector<Evidence>{});
        if (auto v = a.find("viewpoint"); v != a.end() && v->is_object()) ans.viewpoint = v->at("id").get<std::string>();
        rs.answers.push_back(std::move(ans));
    }
    return rs;
}

}  // namespace diverge
