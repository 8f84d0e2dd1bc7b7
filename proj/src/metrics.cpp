// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Diverge Authors

#include "diverge/metrics.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "diverge/errors.hpp"

namespace diverge {

double semantic_diversity(std::span<const Embedding> embeddings) {
    const std::size_t n = embeddings.size();
    if (n < 2) throw ContractError("semantic_diversity needs at least 2 answers, got " + std::to_string(n));
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = j + 1; k < n; ++k) {
            sum += (1.0 - cosine_similarity(embeddings[j], embeddings[k])) / 2.0;
        }
    }
    return sum / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

double semantic_diversity(const ResponseSet& answers, Embedder& embedder) {
    std::vector<std::string> texts;
    for (const auto& a : answers.answers) texts.push_back(a.text);
    if (texts.size() < 2) {
        throw ContractError("semantic_diversity needs at least 2 answers, got " + std::to_string(texts.size()));
    }
    const auto vecs = embedder.embed(texts);
    return semantic_diversity(vecs);
}

std::vector<std::size_t> unique_indices(std::span<const Embedding> vectors, double tau) {
    std::vector<std::size_t> kept;
    std::vector<Embedding> kept_vecs;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        if (!kept_vecs.empty() && kept_vecs.front().dimension() != vectors[i].dimension()) {
            throw ContractError("count_unique: mixed embedding dimensions");
        }
        double best = -1.0;
        for (const auto& k : kept_vecs) best = std::max(best, cosine_similarity(vectors[i], k));
        if (kept_vecs.empty() || best < tau) {
            kept.push_back(i);
            kept_vecs.push_back(vectors[i]);
        }
    }
    return kept;
}

std::size_t count_unique(std::span<const Embedding> vectors, double tau) {
    return unique_indices(vectors, tau).size();
}

std::vector<std::string> extract_claims(ChatModel& model, const Query& q, const Answer& a,
                                        const PromptLibrary& prompts) {
    if (trim(a.text).empty()) throw ContractError("extract_claims: answer '" + a.id + "' is empty");
    ChatRequest req;
    req.tag = "claim_extraction";
    req.prompt = prompts.get(PromptName::claim_extraction).render({{"QUESTION", q.text}, {"ANSWER", a.text}});
    return ask_structured(model, req, parse_claims);
}

ClaimSet collect_claims(ChatModel& model, const ResponseSet& answers, Embedder& embedder,
                        const PromptLibrary& prompts) {
    ClaimSet set;
    set.query_id = answers.query.id;
    std::vector<std::string> texts;
    for (const auto& a : answers.answers) {
        for (auto& c : extract_claims(model, answers.query, a, prompts)) {
            texts.push_back(c);
            set.claims.push_back({std::move(c), a.id, {}});
        }
    }
    if (!texts.empty()) {
        auto vecs = embedder.embed(texts);
        for (std::size_t i = 0; i < vecs.size(); ++i) set.claims[i].embedding = std::move(vecs[i]);
    }
    return set;
}

std::optional<double> viewpoint_diversity(const ClaimSet& claims, double tau) {
    if (claims.total() == 0) return std::nullopt;
    std::vector<Embedding> vecs;
    vecs.reserve(claims.total());
    for (const auto& c : claims.claims) vecs.push_back(c.embedding);
    return static_cast<double>(count_unique(vecs, tau)) / static_cast<double>(claims.total());
}

std::optional<double> viewpoint_diversity(ChatModel& model, const ResponseSet& answers, Embedder& embedder,
                                          double tau, const PromptLibrary& prompts) {
    return viewpoint_diversity(collect_claims(model, answers, embedder, prompts), tau);
}

QualityVerdict judge_quality(ChatModel& judge, const Query& q, const Answer& a, const PromptLibrary& prompts) {
    ChatRequest req;
    req.tag = "quality_judge";
    req.prompt = prompts.get(PromptName::quality_judge).render({{"QUESTION", q.text}, {"ANSWER", a.text}});
    const auto parsed = ask_structured(judge, req, parse_verdict);
    if (parsed.verdict == Verdict::Excellent && parsed.reason != "NONE") {
        spdlog::warn("judge gave Excellent to '{}' with reason '{}' instead of NONE", a.id, parsed.reason);
    }
    return {parsed.verdict, parsed.reason, verdict_score(parsed.verdict)};
}

double quality_score(ChatModel& judge, const ResponseSet& answers, const PromptLibrary& prompts) {
    if (answers.answers.empty()) throw ContractError("quality_score needs at least one answer");
    double sum = 0.0;
    for (const auto& a : answers.answers) sum += judge_quality(judge, answers.query, a, prompts).score;
    return sum / static_cast<double>(answers.answers.size());
}

std::map<std::string, double> minmax_normalize(const std::map<std::string, double>& values) {
    if (values.size() < 2) {
        throw ContractError("minmax_normalize needs at least 2 configurations, got " +
                            std::to_string(values.size()));
    }
    auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end(),
                                              [](const auto& a, const auto& b) { return a.second < b.second; });
    const double lo = lo_it->second;
    const double hi = hi_it->second;
    std::map<std::string, double> out;
    for (const auto& [k, v] : values) out[k] = hi == lo ? 1.0 : (v - lo) / (hi - lo);
    return out;
}

double unified_score(double q_norm, double d_norm) {
    const double s = q_norm + d_norm;
    return s == 0.0 ? 0.0 : 2.0 * q_norm * d_norm / s;
}

namespace {

struct Raw {
    double d_sem = 0.0;
    std::optional<double> d_view;
    double quality = 0.0;
};

double mean(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

std::string fmt(const std::optional<double>& x) { return x ? fmt(*x) : std::string{}; }

nlohmann::json opt(const std::optional<double>& x) { return x ? nlohmann::json(*x) : nlohmann::json(nullptr); }

}  // namespace

EvalReport evaluate(const std::map<std::string, std::vector<ResponseSet>>& response_sets, ChatModel& judge,
                    Embedder& embedder, const EvalOptions& options, const PromptLibrary& prompts) {
    if (response_sets.size() < 2) {
        throw ContractError("evaluate needs at least 2 configurations, got " + std::to_string(response_sets.size()));
    }

    // Query order comes from the first configuration.
    std::vector<std::string> query_ids;
    std::map<std::string, std::map<std::string, const ResponseSet*>> by_query;
    for (const auto& [config, sets] : response_sets) {
        for (const auto& rs : sets) {
            auto& slot = by_query[rs.query.id][config];
            if (slot != nullptr) throw ContractError("config '" + config + "' has query '" + rs.query.id + "' twice");
            slot = &rs;
        }
    }
    for (const auto& rs : response_sets.begin()->second) query_ids.push_back(rs.query.id);
    std::vector<std::string> missing;
    for (const auto& [qid, per_config] : by_query) {
        for (const auto& [config, sets] : response_sets) {
            if (!per_config.count(config)) missing.push_back(config + ":" + qid);
        }
    }
    if (!missing.empty()) {
        std::string list;
        for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
        throw ContractError("query coverage differs between configurations; missing " + list);
    }

    EvalReport report;
    report.tau = options.tau;
    for (const auto& [config, sets] : response_sets) report.configs.push_back(config);

    std::map<std::string, std::vector<EvalRow>> rows_by_config;
    for (const auto& qid : query_ids) {
        std::map<std::string, Raw> raw;
        for (const auto& config : report.configs) {
            const ResponseSet& rs = *by_query[qid][config];
            Raw r;
            r.d_sem = semantic_diversity(rs, embedder);
            if (options.viewpoint) {
                r.d_view = viewpoint_diversity(judge, rs, embedder, options.tau, prompts);
                if (!r.d_view) {
                    ++report.d_view_missing;
                    spdlog::warn("no claims extracted for query '{}' under '{}'", qid, config);
                }
            }
            r.quality = quality_score(judge, rs, prompts);
            raw[config] = r;
        }

        std::map<std::string, double> q_vals, sem_vals, view_vals;
        for (const auto& [config, r] : raw) {
            q_vals[config] = r.quality;
            sem_vals[config] = r.d_sem;
            if (r.d_view) view_vals[config] = *r.d_view;
        }
        const auto q_norm = minmax_normalize(q_vals);
        const auto sem_norm = minmax_normalize(sem_vals);
        std::map<std::string, double> view_norm;
        if (view_vals.size() >= 2) view_norm = minmax_normalize(view_vals);

        for (const auto& config : report.configs) {
            const Raw& r = raw[config];
            EvalRow row;
            row.query_id = qid;
            row.config = config;
            row.d_sem = r.d_sem;
            row.d_view = r.d_view;
            row.quality_mean = r.quality;
            row.q_norm = q_norm.at(config);
            row.d_sem_norm = sem_norm.at(config);
            row.unified_sem = unified_score(row.q_norm, row.d_sem_norm);
            if (auto it = view_norm.find(config); it != view_norm.end()) {
                row.d_view_norm = it->second;
                row.unified_view = unified_score(row.q_norm, it->second);
            }
            report.rows.push_back(row);
            rows_by_config[config].push_back(row);
        }
    }

    for (const auto& config : report.configs) {
        const auto& rows = rows_by_config[config];
        EvalAggregate agg;
        agg.config = config;
        agg.queries = rows.size();
        std::vector<double> sem, view, qual, usem, uview;
        for (const auto& r : rows) {
            sem.push_back(r.d_sem);
            qual.push_back(r.quality_mean);
            usem.push_back(r.unified_sem);
            if (r.d_view) view.push_back(*r.d_view);
            if (r.unified_view) uview.push_back(*r.unified_view);
        }
        agg.d_sem = mean(sem);
        agg.quality_mean = mean(qual);
        agg.unified_sem = mean(usem);
        agg.d_view_coverage = view.size();
        if (!view.empty()) agg.d_view = mean(view);
        if (!uview.empty()) agg.unified_view = mean(uview);
        report.aggregates.push_back(agg);
    }
    return report;
}

const EvalAggregate& EvalReport::aggregate(const std::string& config) const {
    for (const auto& a : aggregates) {
        if (a.config == config) return a;
    }
    throw ContractError("no aggregate for configuration '" + config + "'");
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json per_query = nlohmann::json::array();
    for (const auto& r : rows) {
        per_query.push_back({{"query_id", r.query_id},
                             {"config", r.config},
                             {"d_sem", r.d_sem},
                             {"d_view", opt(r.d_view)},
                             {"quality_mean", r.quality_mean},
                             {"q_norm", r.q_norm},
                             {"d_sem_norm", r.d_sem_norm},
                             {"d_view_norm", opt(r.d_view_norm)},
                             {"unified_sem", r.unified_sem},
                             {"unified_view", opt(r.unified_view)}});
    }
    nlohmann::json aggregate = nlohmann::json::array();
    for (const auto& a : aggregates) {
        aggregate.push_back({{"config", a.config},
                             {"queries", a.queries},
                             {"d_sem", a.d_sem},
                             {"d_view", opt(a.d_view)},
                             {"quality_mean", a.quality_mean},
                             {"unified_sem", a.unified_sem},
                             {"unified_view", opt(a.unified_view)},
                             {"d_view_coverage", a.d_view_coverage}});
    }
    return {{"schema_version", kReportSchemaVersion},
            {"tau", tau},
            {"configs", configs},
            {"d_view_missing", d_view_missing},
            {"per_query", std::move(per_query)},
            {"aggregate", std::move(aggregate)}};
}

std::string EvalReport::to_csv() const {
    std::ostringstream out;
    out << "query_id,config,d_sem,d_view,quality_mean,q_norm,d_sem_norm,d_view_norm,unified_sem,unified_view\n";
    auto cell = [](const std::string& s) {
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
        return q + "\"";
    };
    for (const auto& r : rows) {
        out << cell(r.query_id) << ',' << cell(r.config) << ',' << fmt(r.d_sem) << ',' << fmt(r.d_view) << ','
            << fmt(r.quality_mean) << ',' << fmt(r.q_norm) << ',' << fmt(r.d_sem_norm) << ',' << fmt(r.d_view_norm)
            << ',' << fmt(r.unified_sem) << ',' << fmt(r.unified_view) << '\n';
    }
    for (const auto& a : aggregates) {
        out << "__aggregate__," << cell(a.config) << ',' << fmt(a.d_sem) << ',' << fmt(a.d_view) << ','
            << fmt(a.quality_mean) << ",,,," << fmt(a.unified_sem) << ',' << fmt(a.unified_view) << '\n';
    }
    return out.str();
}

}  // namespace diverge
