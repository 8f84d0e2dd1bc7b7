// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Diverge Authors

#include "diverge/core.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <ctime>
#include <set>
#include <sstream>

#include "diverge/errors.hpp"
#include "diverge/hashing.hpp"

namespace diverge {

std::string trim(std::string_view s) {
    auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    auto b = std::find_if_not(s.begin(), s.end(), is_space);
    auto e = std::find_if_not(s.rbegin(), s.rend(), is_space).base();
    return b < e ? std::string(b, e) : std::string();
}

std::vector<std::string> split_whitespace(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        std::size_t j = i;
        while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
        if (j > i) out.emplace_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

std::string now_iso8601() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// ---- Query / Viewpoint -----------------------------------------------------

Query Query::from_user(std::string_view text) {
    Query q;
    q.text = trim(text);
    q.id = "q" + sha256_hex(q.text).substr(0, 12);
    q.origin = QueryOrigin::user;
    q.validate();
    return q;
}

void Query::validate() const {
    if (trim(text).empty()) throw ContractError("query text is empty");
    if (origin == QueryOrigin::viewpoint_derived && !parent_viewpoint) {
        throw ContractError("viewpoint-derived query '" + id + "' has no parent viewpoint");
    }
}

bool Viewpoint::well_formed() const {
    const auto words = split_whitespace(label).size();
    return words >= 2 && words <= 5 && !trim(description).empty();
}

std::string Viewpoint::as_text() const { return label + ": " + description; }

// ---- DiversityMemory --------------------------------------------------------

bool DiversityMemory::has_view(const std::string& id) const {
    return std::any_of(views_.begin(), views_.end(), [&](const Viewpoint& v) { return v.id == id; });
}

void DiversityMemory::append(MemoryEntry entry) {
    if (entry.iteration != static_cast<int>(entries_.size())) {
        throw ContractError("memory append out of order: expected iteration " +
                            std::to_string(entries_.size()) + ", got " +
                            std::to_string(entry.iteration));
    }
    if (entry.iteration > 0 && !entry.answer.viewpoint) {
        throw ContractError("answer at iteration " + std::to_string(entry.iteration) +
                            " carries no viewpoint");
    }
    std::size_t dim = dimension_;
    for (auto& e : entry.chunk_embeddings) {
        if (dim == 0) dim = e.dimension();
        if (e.dimension() != dim) throw ContractError("memory chunk embeddings differ in dimension");
        e = Embedding::normalized(std::vector<double>(e.values().begin(), e.values().end()));
    }
    dimension_ = dim;
    if (entry.viewpoint && !has_view(entry.viewpoint->id)) views_.push_back(*entry.viewpoint);
    entries_.push_back(std::move(entry));
}

void DiversityMemory::add_views(const std::vector<Viewpoint>& views) {
    for (const auto& v : views) {
        if (!has_view(v.id)) views_.push_back(v);
    }
}

std::vector<Embedding> DiversityMemory::embeddings_before(int before_iteration) const {
    if (before_iteration < 0) throw ContractError("before_iteration must be >= 0");
    std::vector<Embedding> out;
    for (const auto& e : entries_) {
        if (e.iteration >= before_iteration) break;
        out.insert(out.end(), e.chunk_embeddings.begin(), e.chunk_embeddings.end());
    }
    return out;
}

// ---- Strategy ---------------------------------------------------------------

namespace {

struct StrategyName {
    Strategy strategy;
    std::string_view name;
};

constexpr StrategyName kStrategyNames[] = {
    {Strategy::diverge, "diverge"},
    {Strategy::independent_sampling, "independent_sampling"},
    {Strategy::list_generation, "list_generation"},
    {Strategy::iterative_generation, "iterative_generation"},
    {Strategy::verbalized_sampling, "verbalized_sampling"},
    {Strategy::vanilla_rag, "vanilla_rag"},
    {Strategy::rag_div_rerank, "rag_div_rerank"},
    {Strategy::rag_shuffle, "rag_shuffle"},
    {Strategy::rag_multi_query, "rag_multi_query"},
    {Strategy::rag_all, "rag_all"},
};

}  // namespace

std::string_view to_string(Strategy s) {
    for (const auto& [strategy, name] : kStrategyNames) {
        if (strategy == s) return name;
    }
    return "unknown";
}

Strategy strategy_from_string(std::string_view name) {
    for (const auto& [strategy, n] : kStrategyNames) {
        if (n == name) return strategy;
    }
    throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

const std::vector<Strategy>& all_strategies() {
    static const std::vector<Strategy> all = [] {
        std::vector<Strategy> v;
        for (const auto& sn : kStrategyNames) v.push_back(sn.strategy);
        return v;
    }();
    return all;
}

bool uses_retrieval(Strategy s) {
    switch (s) {
        case Strategy::diverge:
        case Strategy::vanilla_rag:
        case Strategy::rag_div_rerank:
        case Strategy::rag_shuffle:
        case Strategy::rag_multi_query:
        case Strategy::rag_all:
            return true;
        default:
            return false;
    }
}

// ---- ResponseSet / RunConfig -------------------------------------------------

void ResponseSet::validate(int k) const {
    if (static_cast<int>(answers.size()) != k) {
        throw ContractError("response set for '" + query.id + "' has " +
                            std::to_string(answers.size()) + " answers, expected " +
                            std::to_string(k));
    }
    std::set<std::string> ids;
    for (const auto& a : answers) {
        if (!ids.insert(a.id).second) throw ContractError("duplicate answer id '" + a.id + "'");
    }
}

void RunConfig::validate() const {
    auto fail = [](const std::string& m) { throw ConfigError(m); };
    if (k < 1) fail("k must be >= 1");
    if (final_top_k < 1) fail("final_top_k must be >= 1");
    if (candidate_pool < 1) fail("candidate_pool must be >= 1");
    if (final_top_k > candidate_pool) fail("final_top_k must not exceed candidate_pool");
    if (!(alpha >= 0.0 && alpha <= 1.0)) fail("alpha must be in [0,1]");
    if (!(beta >= 0.0)) fail("beta must be >= 0");
    if (chunk_size_tokens < 1) fail("chunk_size_tokens must be >= 1");
    if (chunk_overlap_tokens < 0 || chunk_overlap_tokens >= chunk_size_tokens) {
        fail("chunk_overlap_tokens must be in [0, chunk_size_tokens)");
    }
    if (min_doc_chars < 0) fail("min_doc_chars must be >= 0");
    if (web_docs_per_query < 5 || web_docs_per_query > 10) fail("web_docs_per_query must be in [5,10]");
    if (!(tau > 0.0 && tau < 1.0)) fail("tau must be in (0,1)");
}

// ---- JSON -------------------------------------------------------------------

NLOHMANN_JSON_SERIALIZE_ENUM(QueryOrigin, {
    {QueryOrigin::user, "user"},
    {QueryOrigin::viewpoint_derived, "viewpoint_derived"},
    {QueryOrigin::rewrite, "rewrite"},
})

namespace {

template <typename T>
void put_optional(json& j, const char* key, const std::optional<T>& v) {
    j[key] = v ? json(*v) : json(nullptr);
}

template <typename T>
void get_optional(const json& j, const char* key, std::optional<T>& v) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        v.reset();
    } else {
        v = it->template get<T>();
    }
}

}  // namespace

void to_json(json& j, const Query& q) {
    j = json{{"id", q.id}, {"text", q.text}, {"origin", q.origin}};
    put_optional(j, "parent_viewpoint", q.parent_viewpoint);
}

void from_json(const json& j, Query& q) {
    j.at("id").get_to(q.id);
    j.at("text").get_to(q.text);
    q.origin = j.value("origin", QueryOrigin::user);
    get_optional(j, "parent_viewpoint", q.parent_viewpoint);
}

void to_json(json& j, const Viewpoint& v) {
    j = json{{"id", v.id},
             {"label", v.label},
             {"description", v.description},
             {"source_iteration", v.source_iteration}};
}

void from_json(const json& j, Viewpoint& v) {
    j.at("id").get_to(v.id);
    j.at("label").get_to(v.label);
    j.at("description").get_to(v.description);
    v.source_iteration = j.value("source_iteration", 0);
}

void to_json(json& j, const Evidence& e) {
    j = json{{"url", e.url}, {"token_start", e.token_start}, {"token_end", e.token_end}};
}

void from_json(const json& j, Evidence& e) {
    j.at("url").get_to(e.url);
    e.token_start = j.value("token_start", 0);
    e.token_end = j.value("token_end", 0);
}

void to_json(json& j, const Answer& a) {
    j = json{{"id", a.id},
             {"text", a.text},
             {"iteration", a.iteration},
             {"evidence", a.evidence},
             {"refined", a.refined}};
    put_optional(j, "viewpoint", a.viewpoint);
}

void from_json(const json& j, Answer& a) {
    j.at("id").get_to(a.id);
    j.at("text").get_to(a.text);
    a.iteration = j.value("iteration", 0);
    a.evidence = j.value("evidence", std::vector<Evidence>{});
    a.refined = j.value("refined", false);
    get_optional(j, "viewpoint", a.viewpoint);
}

void to_json(json& j, const Embedding& e) {
    j = std::vector<double>(e.values().begin(), e.values().end());
}

void from_json(const json& j, Embedding& e) { e = Embedding(j.get<std::vector<double>>()); }

void to_json(json& j, const MemoryEntry& m) {
    j = json{{"iteration", m.iteration},
             {"query", m.query},
             {"answer", m.answer},
             {"chunk_embeddings", m.chunk_embeddings}};
    put_optional(j, "viewpoint", m.viewpoint);
}

void from_json(const json& j, MemoryEntry& m) {
    j.at("iteration").get_to(m.iteration);
    j.at("query").get_to(m.query);
    j.at("answer").get_to(m.answer);
    m.chunk_embeddings = j.value("chunk_embeddings", std::vector<Embedding>{});
    get_optional(j, "viewpoint", m.viewpoint);
}

void to_json(json& j, const DiversityMemory& m) {
    j = json{{"entries", m.entries()}, {"views", m.views()}};
}

void from_json(const json& j, DiversityMemory& m) {
    DiversityMemory out;
    for (const auto& e : j.at("entries")) out.append(e.get<MemoryEntry>());
    out.add_views(j.value("views", std::vector<Viewpoint>{}));
    m = std::move(out);
}

void to_json(json& j, const ResponseSet& r) {
    j = json{{"query", r.query},
             {"config_name", r.config_name},
             {"answers", r.answers},
             {"created_at", r.created_at}};
}

void from_json(const json& j, ResponseSet& r) {
    j.at("query").get_to(r.query);
    r.config_name = j.value("config_name", std::string{});
    j.at("answers").get_to(r.answers);
    r.created_at = j.value("created_at", std::string{});
}

void to_json(json& j, const RunConfig& c) {
    j = json{{"k", c.k},
             {"final_top_k", c.final_top_k},
             {"candidate_pool", c.candidate_pool},
             {"alpha", c.alpha},
             {"beta", c.beta},
             {"chunk_size_tokens", c.chunk_size_tokens},
             {"chunk_overlap_tokens", c.chunk_overlap_tokens},
             {"min_doc_chars", c.min_doc_chars},
             {"web_docs_per_query", c.web_docs_per_query},
             {"tau", c.tau},
             {"strategy", std::string(to_string(c.strategy))}};
}

void from_json(const json& j, RunConfig& c) {
    RunConfig d;
    c.k = j.value("k", d.k);
    c.final_top_k = j.value("final_top_k", d.final_top_k);
    c.candidate_pool = j.value("candidate_pool", d.candidate_pool);
    c.alpha = j.value("alpha", d.alpha);
    c.beta = j.value("beta", d.beta);
    c.chunk_size_tokens = j.value("chunk_size_tokens", d.chunk_size_tokens);
    c.chunk_overlap_tokens = j.value("chunk_overlap_tokens", d.chunk_overlap_tokens);
    c.min_doc_chars = j.value("min_doc_chars", d.min_doc_chars);
    c.web_docs_per_query = j.value("web_docs_per_query", d.web_docs_per_query);
    c.tau = j.value("tau", d.tau);
    c.strategy = strategy_from_string(j.value("strategy", std::string(to_string(d.strategy))));
}

}  // namespace diverge
