// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Diverge Authors

#include "diverge/cli.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "diverge/config.hpp"
#include "diverge/dataset.hpp"
#include "diverge/engine.hpp"
#include "diverge/errors.hpp"
#include "diverge/metrics.hpp"

namespace diverge {

namespace fs = std::filesystem;

void write_file_atomic(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << text;
        if (!out) throw Error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

namespace {

void setup_logging(int verbosity) {
    auto logger = spdlog::get("diverge");
    if (!logger) {
        logger = spdlog::stderr_color_mt("diverge");
        logger->set_pattern("[%l] %v");
    }
    spdlog::set_default_logger(logger);
    spdlog::set_level(verbosity < 0 ? spdlog::level::err : verbosity > 0 ? spdlog::level::debug : spdlog::level::info);
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Overrides {
    std::string config_path;
    std::string strategy;
    int k = 0;
    double alpha = -1.0;
    double beta = -1.0;
    double tau = -1.0;
    std::int64_t seed = -1;
    std::string out;
    int parallelism = 0;
};

CliConfig load_config(const Overrides& o) {
    CliConfig c = o.config_path.empty() ? CliConfig{} : CliConfig::load(o.config_path);
    if (!o.strategy.empty()) c.run.strategy = strategy_from_string(o.strategy);
    if (o.k > 0) c.run.k = o.k;
    if (o.alpha >= 0.0) c.run.alpha = o.alpha;
    if (o.beta >= 0.0) c.run.beta = o.beta;
    if (o.tau >= 0.0) c.run.tau = o.tau;
    if (o.seed >= 0) c.seed = static_cast<std::uint64_t>(o.seed);
    if (!o.out.empty()) c.out = o.out;
    if (o.parallelism > 0) c.parallelism = o.parallelism;
    c.validate();
    return c;
}

void add_common(CLI::App& cmd, Overrides& o) {
    cmd.add_option("--config", o.config_path, "JSON configuration file")->check(CLI::ExistingFile);
    cmd.add_option("--out", o.out, "Output directory or file");
}

/// Search and fetch backends plus the retriever built over them.
struct Retrieval {
    std::unique_ptr<FixtureWeb> fixture;
    std::unique_ptr<DuckDuckGoSearch> ddg;
    std::unique_ptr<HttpPageFetcher> fetcher;
    std::unique_ptr<WebRetriever> retriever;
};

Retrieval make_retrieval(const CliConfig& c) {
    Retrieval r;
    WebSearchConfig wc;
    wc.min_doc_chars = c.run.min_doc_chars;
    wc.delay_min_seconds = c.delay_min_seconds;
    wc.delay_max_seconds = c.delay_max_seconds;
    wc.seed = c.seed;
    wc.cache_dir = c.cache_dir;
    if (c.search.kind == "fixture") {
        r.fixture = std::make_unique<FixtureWeb>(FixtureWeb::load(*c.search.fixture));
        r.retriever = std::make_unique<WebRetriever>(*r.fixture, *r.fixture, wc);
    } else {
        r.ddg = std::make_unique<DuckDuckGoSearch>();
        r.fetcher = std::make_unique<HttpPageFetcher>();
        r.retriever = std::make_unique<WebRetriever>(*r.ddg, *r.fetcher, wc);
    }
    return r;
}

std::string error_kind(const std::exception& e) {
    if (dynamic_cast<const RetrievalEmptyError*>(&e)) return "retrieval_empty";
    if (dynamic_cast<const ProviderError*>(&e)) return "provider";
    if (dynamic_cast<const ParseError*>(&e)) return "parse";
    if (dynamic_cast<const SearchError*>(&e)) return "search";
    if (dynamic_cast<const ContractError*>(&e)) return "contract";
    return "internal";
}

// ---- generate ---------------------------------------------------------------

int cmd_generate(const Overrides& o, const std::vector<std::string>& inputs, const std::vector<std::string>& texts,
                 bool no_search, bool no_refine, std::ostream& out) {
    const CliConfig config = load_config(o);

    std::vector<Query> queries;
    std::set<std::string> seen;
    auto add = [&](const std::string& text) {
        auto q = Query::from_user(text);
        if (!seen.insert(q.id).second) {
            spdlog::warn("skipping duplicate query '{}'", q.text);
            return;
        }
        queries.push_back(std::move(q));
    };
    for (const auto& path : inputs) {
        for (const auto& t : read_query_file(path)) add(t);
    }
    for (const auto& t : texts) add(t);
    if (queries.empty()) throw ConfigError("no queries given (use --input or --query)");

    const PromptLibrary prompts = make_prompts(config);
    auto chat = make_chat(config.llm);
    auto embedder = make_embedder(config.embedder);
    Retrieval retrieval;
    if (uses_retrieval(config.run.strategy) && !no_search) retrieval = make_retrieval(config);

    EngineOptions options;
    options.no_search = no_search;
    options.no_refine = no_refine;
    options.seed = config.seed;
    options.config_name = config.config_name;

    fs::create_directories(config.out);
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> failed{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < queries.size(); i = next++) {
            const Query& q = queries[i];
            try {
                Engine engine(*chat, *embedder, retrieval.retriever.get(), config.run, options, prompts);
                const auto run = engine.run(q);
                write_file_atomic(config.out / (q.id + ".json"), trace_to_json(run, config.run, options).dump(2) + "\n");
                spdlog::info("{}: {} answers", q.id, run.responses.answers.size());
            } catch (const std::exception& e) {
                ++failed;
                spdlog::error("{}: {}", q.id, e.what());
                const nlohmann::json record{{"schema_version", kTraceSchemaVersion},
                                            {"query", q},
                                            {"strategy", std::string(to_string(config.run.strategy))},
                                            {"error", e.what()},
                                            {"kind", error_kind(e)}};
                try {
                    write_file_atomic(config.out / "errors" / (q.id + ".json"), record.dump(2) + "\n");
                } catch (const std::exception& w) {
                    spdlog::error("{}: could not write error record: {}", q.id, w.what());
                }
            }
        }
    };
    const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(config.parallelism), queries.size());
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    const std::size_t ok = queries.size() - failed;
    out << "generated " << ok << "/" << queries.size() << " traces in " << config.out.string() << "\n";
    if (failed == 0) return kExitOk;
    return ok == 0 ? kExitFatal : kExitPartial;
}

// ---- evaluate ---------------------------------------------------------------

std::vector<ResponseSet> load_traces(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw ConfigError("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<ResponseSet> sets;
    for (const auto& f : files) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_text(f));
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(f.string() + ": " + e.what());
        }
        sets.push_back(response_set_from_trace(j));
    }
    if (sets.empty()) throw ConfigError("no traces in " + dir.string());
    return sets;
}

std::string cell(const std::optional<double>& v) {
    if (!v) return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", *v);
    return buf;
}

int cmd_evaluate(const Overrides& o, const std::vector<std::string>& dirs, bool no_view, std::ostream& out) {
    const CliConfig config = load_config(o);
    if (dirs.size() < 2) throw ConfigError("evaluate needs trace directories for at least 2 configurations");

    std::map<std::string, std::vector<ResponseSet>> sets;
    for (const auto& spec : dirs) {
        std::string name;
        fs::path dir;
        if (const auto eq = spec.find('='); eq != std::string::npos) {
            name = spec.substr(0, eq);
            dir = spec.substr(eq + 1);
        } else {
            dir = spec;
            name = fs::path(spec).lexically_normal().filename().string();
            if (name.empty()) name = fs::path(spec).lexically_normal().parent_path().filename().string();
        }
        if (sets.count(name)) throw ConfigError("duplicate configuration name '" + name + "'");
        sets[name] = load_traces(dir);
    }

    // Coverage is checked here too so the message lists every missing id.
    std::set<std::string> all_ids;
    for (const auto& [_, v] : sets) {
        for (const auto& rs : v) all_ids.insert(rs.query.id);
    }
    std::string missing;
    for (const auto& [name, v] : sets) {
        std::set<std::string> ids;
        for (const auto& rs : v) ids.insert(rs.query.id);
        for (const auto& id : all_ids) {
            if (!ids.count(id)) missing += (missing.empty() ? "" : ", ") + name + ":" + id;
        }
    }
    if (!missing.empty()) throw ContractError("query coverage mismatch; missing " + missing);

    const PromptLibrary prompts = make_prompts(config);
    auto judge = make_chat(config.judge.value_or(config.llm));
    auto embedder = make_embedder(config.embedder);
    EvalOptions options;
    options.tau = config.run.tau;
    options.viewpoint = !no_view;
    const auto report = evaluate(sets, *judge, *embedder, options, prompts);

    write_file_atomic(config.out / "report.json", report.to_json().dump(2) + "\n");
    write_file_atomic(config.out / "report.csv", report.to_csv());

    char line[160];
    std::snprintf(line, sizeof line, "%-24s %8s %8s %8s %8s %8s\n", "config", "D_sem", "D_view", "Quality", "U_sem",
                  "U_view");
    out << line;
    for (const auto& a : report.aggregates) {
        std::snprintf(line, sizeof line, "%-24s %8s %8s %8s %8s %8s\n", a.config.c_str(), cell(a.d_sem).c_str(),
                      cell(a.d_view).c_str(), cell(a.quality_mean).c_str(), cell(a.unified_sem).c_str(),
                      cell(a.unified_view).c_str());
        out << line;
    }
    if (report.d_view_missing > 0) out << report.d_view_missing << " query/config pairs had no claims\n";
    out << "report written to " << (config.out / "report.json").string() << "\n";
    return kExitOk;
}

// ---- dataset ----------------------------------------------------------------

int cmd_dataset_filter(const std::string& input, const std::string& output, std::size_t budget,
                       const std::string& allowed_spec, std::ostream& out) {
    std::ifstream in(input);
    if (!in) throw ConfigError("cannot read " + input);
    std::set<std::string> allowed = default_allowed_categories();
    if (!allowed_spec.empty()) {
        allowed.clear();
        std::stringstream ss(allowed_spec);
        std::string part;
        while (std::getline(ss, part, ';')) {
            if (auto t = trim(part); !t.empty()) allowed.insert(t);
        }
    }
    std::ostringstream buf;
    const auto stats = filter_dataset(in, buf, allowed, budget);
    write_file_atomic(output, buf.str());
    out << "kept " << stats.kept << " of " << stats.read << " records (" << stats.rejected << " outside the allowed set, "
        << stats.malformed << " malformed)\n";
    return kExitOk;
}

int cmd_sample(const std::string& input, const std::string& output, std::size_t n, std::uint64_t seed,
               std::ostream& out) {
    std::ifstream in(input);
    if (!in) throw ConfigError("cannot read " + input);
    std::vector<std::string> prompts;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            prompts.push_back(parse_dataset_record(line).prompt);
        } catch (const ParseError& e) {
            throw ConfigError(input + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    const auto picked = sample_prompts(prompts, n, seed);
    std::string text;
    for (const auto& p : picked) text += encode_query_line(p) + "\n";
    write_file_atomic(output, text);
    out << "sampled " << picked.size() << " of " << prompts.size() << " prompts\n";
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Diversity-oriented retrieval-augmented generation", "diverge"};
    app.require_subcommand(1);
    int verbose = 0;
    bool quiet = false;
    app.add_flag("-v,--verbose", verbose, "Debug logging");
    app.add_flag("--quiet", quiet, "Only log errors");

    Overrides gen_o;
    std::vector<std::string> inputs, texts;
    bool no_search = false, no_refine = false;
    auto* gen = app.add_subcommand("generate", "Generate K answers per query and write run traces");
    add_common(*gen, gen_o);
    gen->add_option("-i,--input", inputs, "Query file, one query per line")->check(CLI::ExistingFile);
    gen->add_option("-q,--query", texts, "A single query");
    gen->add_option("--strategy", gen_o.strategy, "Generation strategy");
    gen->add_option("--k", gen_o.k, "Answers per query")->check(CLI::PositiveNumber);
    gen->add_option("--alpha", gen_o.alpha, "Relevance weight of the reranker")->check(CLI::Range(0.0, 1.0));
    gen->add_option("--beta", gen_o.beta, "Memory penalty weight of the reranker")->check(CLI::NonNegativeNumber);
    gen->add_option("--tau", gen_o.tau, "Claim similarity threshold")->check(CLI::Range(0.0, 1.0));
    gen->add_option("--seed", gen_o.seed, "Random seed")->check(CLI::NonNegativeNumber);
    gen->add_option("--parallelism", gen_o.parallelism, "Concurrent queries")->check(CLI::PositiveNumber);
    gen->add_flag("--no-search", no_search, "Generate without retrieval");
    gen->add_flag("--no-refine", no_refine, "Skip the refinement step");

    Overrides eval_o;
    std::vector<std::string> dirs;
    bool no_view = false;
    auto* ev = app.add_subcommand("evaluate", "Score trace directories and write a report");
    add_common(*ev, eval_o);
    ev->add_option("dirs", dirs, "Trace directories, optionally as name=dir")->required();
    ev->add_option("--tau", eval_o.tau, "Claim similarity threshold")->check(CLI::Range(0.0, 1.0));
    ev->add_flag("--no-view", no_view, "Skip claim extraction and viewpoint diversity");

    std::string df_in, df_out, df_allowed;
    std::size_t budget = 200;
    auto* df = app.add_subcommand("dataset-filter", "Keep records whose categories are all allowed");
    df->add_option("-i,--input", df_in, "JSONL records")->required()->check(CLI::ExistingFile);
    df->add_option("--out", df_out, "Filtered JSONL")->required();
    df->add_option("--budget", budget, "Maximum records kept");
    df->add_option("--allowed", df_allowed, "';'-separated allowed categories (default: the ten built-in ones)");

    std::string s_in, s_out;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    auto* sm = app.add_subcommand("sample", "Seeded sample of prompts from filtered JSONL");
    sm->add_option("-i,--input", s_in, "Filtered JSONL")->required()->check(CLI::ExistingFile);
    sm->add_option("--out", s_out, "Query file")->required();
    sm->add_option("-n,--n", n, "Number of prompts")->required();
    sm->add_option("--seed", seed, "Random seed")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e, out, err);
        return rc == 0 ? kExitOk : kExitFatal;
    }
    setup_logging(quiet ? -1 : verbose);

    try {
        if (*gen) return cmd_generate(gen_o, inputs, texts, no_search, no_refine, out);
        if (*ev) return cmd_evaluate(eval_o, dirs, no_view, out);
        if (*df) return cmd_dataset_filter(df_in, df_out, budget, df_allowed, out);
        if (*sm) return cmd_sample(s_in, s_out, n, seed, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFatal;
    }
    return kExitFatal;
}

int run_cli(const std::vector<std::string>& args) { return run_cli(args, std::cout, std::cerr); }

}  // namespace diverge
