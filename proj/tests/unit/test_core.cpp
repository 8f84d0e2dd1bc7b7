// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Diverge Authors

#include <catch_amalgamated.hpp>

#include "diverge/core.hpp"
#include "diverge/errors.hpp"

using namespace diverge;
using Catch::Approx;

namespace {

MemoryEntry entry(int iteration, std::vector<std::vector<double>> vecs, std::optional<Viewpoint> view = {}) {
    MemoryEntry e;
    e.iteration = iteration;
    e.query = Query::from_user("what now");
    e.answer.id = "a" + std::to_string(iteration);
    e.answer.text = "text";
    e.answer.iteration = iteration;
    if (view) {
        e.viewpoint = view;
        e.answer.viewpoint = view->id;
    }
    for (auto& v : vecs) e.chunk_embeddings.push_back(Embedding::normalized(v));
    return e;
}

Viewpoint view(const std::string& id) { return {id, "some label here", "A description.", 1}; }

}  // namespace

TEST_CASE("query ids are stable content hashes of the trimmed text") {
    const auto a = Query::from_user("  How should I save money?\n");
    const auto b = Query::from_user("How should I save money?");
    CHECK(a.id == b.id);
    CHECK(a.text == "How should I save money?");
    CHECK(a.id.size() == 13);
    CHECK(a.id.front() == 'q');
    CHECK(Query::from_user("other").id != a.id);
    CHECK_THROWS_AS(Query::from_user("   "), ContractError);
}

TEST_CASE("viewpoint-derived queries need a parent") {
    Query q{"x", "text", QueryOrigin::viewpoint_derived, std::nullopt};
    CHECK_THROWS_AS(q.validate(), ContractError);
    q.parent_viewpoint = "v1";
    CHECK_NOTHROW(q.validate());
}

TEST_CASE("viewpoint label length is checked leniently") {
    CHECK(Viewpoint{"v", "long term cost", "d.", 0}.well_formed());
    CHECK_FALSE(Viewpoint{"v", "cost", "d.", 0}.well_formed());
    CHECK_FALSE(Viewpoint{"v", "one two three four five six", "d.", 0}.well_formed());
    CHECK_FALSE(Viewpoint{"v", "two words", " ", 0}.well_formed());
    CHECK(Viewpoint{"v", "budget travel", "Cheap trips.", 0}.as_text() == "budget travel: Cheap trips.");
}

TEST_CASE("memory append enforces gap-free iterations") {
    DiversityMemory m;
    m.append(entry(0, {{1, 0}}));
    CHECK(m.size() == 1);
    m.append(entry(1, {{0, 1}}, view("v1")));
    const auto views_before = m.views();
    m.append(entry(2, {{1, 1}}, view("v2")));
    CHECK(m.size() == 3);
    CHECK(m.views().size() == views_before.size() + 1);
    CHECK_THROWS_AS(m.append(entry(5, {}, view("v5"))), ContractError);
    CHECK_THROWS_AS(m.append(entry(2, {}, view("v5"))), ContractError);
}

TEST_CASE("later iterations must carry a viewpoint") {
    DiversityMemory m;
    m.append(entry(0, {}));
    CHECK_THROWS_AS(m.append(entry(1, {})), ContractError);
}

TEST_CASE("memory embeddings are normalized and share a dimension") {
    DiversityMemory m;
    MemoryEntry e = entry(0, {});
    e.chunk_embeddings.push_back(Embedding::normalized({3, 4}));
    m.append(e);
    CHECK(m.entries()[0].chunk_embeddings[0].norm() == Approx(1.0));
    CHECK_THROWS_AS(m.append(entry(1, {{1, 0, 0}}, view("v1"))), ContractError);
}

TEST_CASE("memory_embeddings concatenates a prefix of entries") {
    DiversityMemory m;
    m.append(entry(0, {{1, 0}, {0, 1}, {1, 1}}));
    m.append(entry(1, {{1, -1}, {-1, 0}}, view("v1")));
    CHECK(m.embeddings_before(0).empty());
    CHECK(m.embeddings_before(1).size() == 3);
    CHECK(m.embeddings_before(2).size() == 5);
    CHECK(m.embeddings_before(9).size() == 5);
    const auto p1 = m.embeddings_before(1);
    const auto p2 = m.embeddings_before(2);
    for (std::size_t i = 0; i < p1.size(); ++i) CHECK(p1[i] == p2[i]);
    CHECK_THROWS_AS(m.embeddings_before(-1), ContractError);
}

TEST_CASE("add_views skips ids already present") {
    DiversityMemory m;
    m.add_views({view("a"), view("b")});
    m.add_views({view("b"), view("c")});
    REQUIRE(m.views().size() == 3);
    CHECK(m.views()[2].id == "c");
}

TEST_CASE("strategy names round-trip") {
    for (auto s : all_strategies()) CHECK(strategy_from_string(to_string(s)) == s);
    CHECK(all_strategies().size() == 10);
    CHECK_THROWS_AS(strategy_from_string("best_of_n"), ConfigError);
    CHECK(uses_retrieval(Strategy::rag_all));
    CHECK_FALSE(uses_retrieval(Strategy::list_generation));
}

TEST_CASE("response sets need exactly K distinct answers") {
    ResponseSet rs;
    rs.query = Query::from_user("q");
    rs.answers = {Answer{"a", "x", 0, {}, {}, false}, Answer{"b", "y", 1, {}, {}, false}};
    CHECK_NOTHROW(rs.validate(2));
    CHECK_THROWS_AS(rs.validate(3), ContractError);
    rs.answers[1].id = "a";
    CHECK_THROWS_AS(rs.validate(2), ContractError);
}

TEST_CASE("run config defaults and validation") {
    RunConfig c;
    CHECK(c.k == 10);
    CHECK(c.final_top_k == 5);
    CHECK(c.candidate_pool == 20);
    CHECK(c.alpha == 0.7);
    CHECK(c.beta == 0.2);
    CHECK(c.chunk_size_tokens == 512);
    CHECK(c.chunk_overlap_tokens == 50);
    CHECK(c.min_doc_chars == 128);
    CHECK(c.tau == 0.75);
    CHECK_NOTHROW(c.validate());

    auto bad = [](auto mutate) {
        RunConfig r;
        mutate(r);
        return r;
    };
    CHECK_THROWS_AS(bad([](RunConfig& r) { r.chunk_overlap_tokens = 512; }).validate(), ConfigError);
    CHECK_THROWS_AS(bad([](RunConfig& r) { r.final_top_k = 21; }).validate(), ConfigError);
    CHECK_THROWS_AS(bad([](RunConfig& r) { r.alpha = 1.5; }).validate(), ConfigError);
    CHECK_THROWS_AS(bad([](RunConfig& r) { r.beta = -0.1; }).validate(), ConfigError);
    CHECK_THROWS_AS(bad([](RunConfig& r) { r.tau = 1.0; }).validate(), ConfigError);
    CHECK_THROWS_AS(bad([](RunConfig& r) { r.k = 0; }).validate(), ConfigError);
    CHECK_THROWS_AS(bad([](RunConfig& r) { r.web_docs_per_query = 4; }).validate(), ConfigError);
    CHECK_NOTHROW(bad([](RunConfig& r) { r.beta = 3.0; }).validate());
}

TEST_CASE("types serialize with snake_case keys and round-trip") {
    Answer a{"q1-a1", "text", 1, std::string("v1"), {{"https://x.org", 0, 512}}, true};
    const json j = a;
    CHECK(j.at("refined") == true);
    CHECK(j.at("evidence")[0].at("token_end") == 512);
    const auto back = j.get<Answer>();
    CHECK(back.id == a.id);
    CHECK(back.viewpoint == a.viewpoint);
    CHECK(back.evidence == a.evidence);

    Query q{"id", "t", QueryOrigin::viewpoint_derived, std::string("v3")};
    const json jq = q;
    CHECK(jq.at("origin") == "viewpoint_derived");
    CHECK(jq.at("parent_viewpoint") == "v3");
    CHECK(jq.get<Query>().parent_viewpoint == q.parent_viewpoint);

    RunConfig c;
    c.strategy = Strategy::rag_shuffle;
    c.alpha = 0.4;
    const auto rc = json(c).get<RunConfig>();
    CHECK(rc.strategy == Strategy::rag_shuffle);
    CHECK(rc.alpha == 0.4);

    DiversityMemory m;
    m.append(entry(0, {{1, 0}}));
    m.add_views({view("v0")});
    const auto m2 = json(m).get<DiversityMemory>();
    CHECK(m2.size() == 1);
    CHECK(m2.views().size() == 1);
}

TEST_CASE("string helpers") {
    CHECK(trim("  a b \n") == "a b");
    CHECK(trim("   ").empty());
    CHECK(split_whitespace(" a  b\tc\n") == std::vector<std::string>{"a", "b", "c"});
    const auto t = now_iso8601();
    CHECK(t.size() == 20);
    CHECK(t.back() == 'Z');
}
