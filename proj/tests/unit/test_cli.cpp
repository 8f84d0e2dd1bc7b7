// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Diverge Authors

#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "diverge/cli.hpp"
#include "diverge/config.hpp"
#include "diverge/core.hpp"
#include "diverge/dataset.hpp"
#include "diverge/errors.hpp"

using namespace diverge;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kData = DIVERGE_TEST_DATA_DIR;

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("diverge_cli_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    args.insert(args.begin(), "--quiet");
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<fs::path> traces_in(const fs::path& dir) {
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".json") out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string config_arg() { return (kData / "config.json").string(); }

}  // namespace

TEST_CASE("generate writes one trace per query") {
    TempDir tmp("generate");
    const auto r = cli({"generate", "--config", config_arg(), "--input", (kData / "queries.txt").string(), "--out",
                        tmp.path.string()});
    INFO(r.err);
    REQUIRE(r.code == kExitOk);
    const auto files = traces_in(tmp.path);
    REQUIRE(files.size() == 3);
    for (const auto& f : files) {
        const auto j = json::parse(slurp(f));
        CHECK(j.at("schema_version") == "1.0");
        CHECK(j.at("strategy") == "diverge");
        CHECK(j.at("answers").size() == 2);
        CHECK(j.at("answers")[1].at("viewpoint").is_object());
        CHECK(f.stem().string() == j.at("query").at("id").get<std::string>());
        for (const auto& a : j.at("answers")) {
            for (const auto& url : a.at("evidence_urls")) {
                const auto u = url.get<std::string>();
                CHECK(u.find("twitter") == std::string::npos);
                CHECK(u.find(".pdf") == std::string::npos);
                CHECK(u.find("short.example") == std::string::npos);
            }
        }
    }
    CHECK(r.out.find("generated 3/3") != std::string::npos);
}

TEST_CASE("a failing query is recorded and the batch continues") {
    TempDir tmp("partial");
    const auto r = cli({"generate", "--config", config_arg(), "-q", "How should a growing city reduce traffic?", "-q",
                        "Which search always fails?", "-q", "What makes a commute pleasant?", "--out",
                        tmp.path.string()});
    CHECK(r.code == kExitPartial);
    CHECK(traces_in(tmp.path).size() == 2);
    const auto errors = traces_in(tmp.path / "errors");
    REQUIRE(errors.size() == 1);
    const auto rec = json::parse(slurp(errors[0]));
    CHECK(rec.at("kind") == "retrieval_empty");
    CHECK(rec.at("query").at("text") == "Which search always fails?");

    TempDir all("fatal");
    const auto f = cli({"generate", "--config", config_arg(), "-q", "Which search always fails?", "--out",
                        all.path.string()});
    CHECK(f.code == kExitFatal);
}

TEST_CASE("flags override the config file") {
    TempDir tmp("flags");
    const auto r = cli({"generate", "--config", config_arg(), "-q", "What is a good hobby?", "--strategy",
                        "independent_sampling", "--k", "3", "--seed", "11", "--alpha", "0.5", "--beta", "0.1",
                        "--tau", "0.6", "--no-refine", "--out", tmp.path.string()});
    INFO(r.err);
    REQUIRE(r.code == kExitOk);
    const auto j = json::parse(slurp(traces_in(tmp.path).at(0)));
    CHECK(j.at("strategy") == "independent_sampling");
    CHECK(j.at("seed") == 11);
    CHECK(j.at("answers").size() == 3);
    CHECK(j.at("run_config").at("alpha") == 0.5);
    CHECK(j.at("run_config").at("beta") == 0.1);
    CHECK(j.at("run_config").at("tau") == 0.6);
    CHECK(j.at("flags").at("no_refine") == true);
    CHECK(j.at("flags").at("no_search") == false);

    TempDir ns("nosearch");
    const auto n = cli({"generate", "--config", config_arg(), "-q", "Which search always fails?", "--no-search",
                        "--out", ns.path.string()});
    CHECK(n.code == kExitOk);
}

TEST_CASE("startup errors are fatal") {
    CHECK(cli({"generate", "--config", "/nonexistent/config.json", "-q", "x"}).code == kExitFatal);
    CHECK(cli({"generate", "--config", config_arg()}).code == kExitFatal);
    CHECK(cli({"generate", "--config", config_arg(), "-q", "x", "--strategy", "best_of"}).code == kExitFatal);
    CHECK(cli({"generate", "--config", config_arg(), "-q", "x", "--alpha", "2"}).code == kExitFatal);
    CHECK(cli({"bogus"}).code == kExitFatal);
    CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("evaluate compares trace directories") {
    TempDir tmp("evaluate");
    const auto a = tmp.path / "diverge";
    const auto b = tmp.path / "independent";
    REQUIRE(cli({"generate", "--config", config_arg(), "--input", (kData / "queries.txt").string(), "--out",
                 a.string()})
                .code == kExitOk);
    REQUIRE(cli({"generate", "--config", config_arg(), "--input", (kData / "queries.txt").string(), "--strategy",
                 "independent_sampling", "--out", b.string()})
                .code == kExitOk);

    const auto report_dir = tmp.path / "report";
    const auto r = cli({"evaluate", "--config", config_arg(), a.string(), "ind=" + b.string(), "--out",
                        report_dir.string()});
    INFO(r.err);
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.find("D_sem") != std::string::npos);
    CHECK(r.out.find("ind") != std::string::npos);
    const auto report = json::parse(slurp(report_dir / "report.json"));
    CHECK(report.at("per_query").size() == 6);
    CHECK(report.at("aggregate").size() == 2);
    const auto csv = slurp(report_dir / "report.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 6 + 2);

    // rerun is byte-identical
    const auto again_dir = tmp.path / "report2";
    REQUIRE(cli({"evaluate", "--config", config_arg(), a.string(), "ind=" + b.string(), "--out", again_dir.string()})
                .code == kExitOk);
    CHECK(slurp(again_dir / "report.json") == slurp(report_dir / "report.json"));
    CHECK(slurp(again_dir / "report.csv") == csv);

    CHECK(cli({"evaluate", "--config", config_arg(), a.string(), "--out", report_dir.string()}).code == kExitFatal);

    fs::remove(traces_in(b).front());
    const auto missing = cli({"evaluate", "--config", config_arg(), a.string(), b.string(), "--out", report_dir.string()});
    CHECK(missing.code == kExitFatal);
    CHECK(missing.err.find("missing") != std::string::npos);
}

TEST_CASE("dataset filter keeps subsets of the allowed categories up to the budget") {
    TempDir tmp("filter");
    const auto input = tmp.path / "records.jsonl";
    {
        std::ofstream o(input);
        o << R"({"conversation":[{"role":"system","content":"sys"},{"role":"user","content":"Should I switch jobs?"}],"categories":["Problem Solving","Decision Support"]})"
          << "\n";
        o << R"({"prompt":"Fix my code","categories":["Coding"]})" << "\n";
        o << "not json\n";
        o << R"({"prompt":"Plan a trip","categories":"Recommendations;Personal Advice"})" << "\n";
        for (int i = 0; i < 500; ++i) o << json{{"prompt", "q" + std::to_string(i)}, {"categories", {"Ideation and Brainstorming"}}}.dump() << "\n";
    }
    const auto output = tmp.path / "filtered.jsonl";
    const auto r = cli({"dataset-filter", "--input", input.string(), "--out", output.string()});
    REQUIRE(r.code == kExitOk);
    std::ifstream in(output);
    std::vector<json> kept;
    for (std::string line; std::getline(in, line);) kept.push_back(json::parse(line));
    REQUIRE(kept.size() == 200);
    CHECK(kept[0].at("prompt") == "Should I switch jobs?");
    CHECK(kept[1].at("prompt") == "Plan a trip");
    CHECK(kept[2].at("prompt") == "q0");
    CHECK(kept[199].at("prompt") == "q197");
    CHECK(r.out.find("1 malformed") != std::string::npos);

    const auto small = tmp.path / "small.jsonl";
    REQUIRE(cli({"dataset-filter", "--input", input.string(), "--out", small.string(), "--budget", "5", "--allowed",
                 "Coding"})
                .code == kExitOk);
    CHECK(slurp(small).find("Fix my code") != std::string::npos);
}

TEST_CASE("sample is seeded and bounded") {
    TempDir tmp("sample");
    const auto input = tmp.path / "filtered.jsonl";
    {
        std::ofstream o(input);
        for (int i = 0; i < 200; ++i) o << json{{"prompt", "prompt " + std::to_string(i)}, {"categories", json::array()}}.dump() << "\n";
    }
    const auto a = tmp.path / "a.txt";
    const auto b = tmp.path / "b.txt";
    REQUIRE(cli({"sample", "--input", input.string(), "--out", a.string(), "-n", "100", "--seed", "7"}).code == kExitOk);
    REQUIRE(cli({"sample", "--input", input.string(), "--out", b.string(), "-n", "100", "--seed", "7"}).code == kExitOk);
    CHECK(slurp(a) == slurp(b));
    const auto lines = read_query_file(a);
    CHECK(lines.size() == 100);
    CHECK(std::set<std::string>(lines.begin(), lines.end()).size() == 100);

    const auto zero = tmp.path / "zero.txt";
    REQUIRE(cli({"sample", "--input", input.string(), "--out", zero.string(), "-n", "0", "--seed", "7"}).code == kExitOk);
    CHECK(slurp(zero).empty());
    CHECK(cli({"sample", "--input", input.string(), "--out", zero.string(), "-n", "201", "--seed", "7"}).code ==
          kExitFatal);
    CHECK(cli({"sample", "--input", input.string(), "--out", zero.string(), "-n", "5"}).code == kExitFatal);
}

TEST_CASE("config loading rejects unknown keys and resolves paths") {
    const auto c = CliConfig::load(kData / "config.json");
    CHECK(c.run.k == 2);
    CHECK(c.search.kind == "fixture");
    CHECK(c.search.fixture->is_absolute());
    CHECK(fs::exists(*c.search.fixture));
    CHECK(c.delay_max_seconds == 0.0);

    const auto base = kData;
    CHECK_THROWS_AS(CliConfig::from_json(json{{"kk", 3}}, base), ConfigError);
    CHECK_THROWS_AS(CliConfig::from_json(json{{"embedder", {{"kind", "hash"}, {"dims", 3}}}}, base), ConfigError);
    CHECK_THROWS_AS(CliConfig::from_json(json{{"k", "ten"}}, base), ConfigError);
    CHECK_THROWS_AS(CliConfig::from_json(json{{"rate_delay", {{"min", 3}, {"max", 1}}}}, base), ConfigError);
    CHECK_THROWS_AS(CliConfig::from_json(json{{"search", {{"kind", "fixture"}}}}, base), ConfigError);
    CHECK_THROWS_AS(CliConfig::from_json(json{{"llm", {{"kind", "scripted"}, {"script", "missing.json"}}}}, base),
                    ConfigError);
}

TEST_CASE("query file lines round-trip through the encoding") {
    for (const std::string q : {"plain question?", "line one\nline two", "{\"json\": true}", "  padded  ", "\"quoted\""}) {
        CHECK(decode_query_line(encode_query_line(q)) == q);
        CHECK(encode_query_line(q).find('\n') == std::string::npos);
    }
    CHECK(encode_query_line("plain question?") == "plain question?");
}

TEST_CASE("the installed binary runs") {
    const std::string cmd = std::string(DIVERGE_CLI_PATH) + " --help > /dev/null";
    CHECK(std::system(cmd.c_str()) == 0);
    const std::string bad = std::string(DIVERGE_CLI_PATH) + " sample --quiet > /dev/null 2>&1";
    const int rc = std::system(bad.c_str());
    CHECK(WEXITSTATUS(rc) == kExitFatal);
}
