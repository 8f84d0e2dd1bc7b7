// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Diverge Authors

#include <catch_amalgamated.hpp>

#include <cmath>
#include <string>

#include "diverge/errors.hpp"
#include "diverge/index.hpp"
#include "oracles.hpp"

using namespace diverge;
using Catch::Approx;

namespace {

std::string words(int n, const std::string& prefix = "w") {
    std::string s;
    for (int i = 0; i < n; ++i) s += (i ? " " : "") + prefix + std::to_string(i);
    return s;
}

Chunk chunk_at(const std::string& url, std::vector<double> v) {
    Chunk c;
    c.doc_url = url;
    c.text = url;
    c.embedding = Embedding::normalized(std::move(v));
    return c;
}

}  // namespace

TEST_CASE("chunk windows follow the stride arithmetic") {
    // stride = 512 - 50 = 462
    const auto w = chunk_windows(1000, 512, 50);
    REQUIRE(w.size() == 3);
    CHECK(w[0] == TokenWindow{0, 512});
    CHECK(w[1] == TokenWindow{462, 974});
    CHECK(w[2] == TokenWindow{924, 1000});
    CHECK(chunk_windows(400, 512, 50) == std::vector<TokenWindow>{{0, 400}});
    CHECK(chunk_windows(512, 512, 50) == std::vector<TokenWindow>{{0, 512}});
    CHECK(chunk_windows(0, 512, 50).empty());
    CHECK_THROWS_AS(chunk_windows(10, 50, 50), ContractError);
    CHECK_THROWS_AS(chunk_windows(10, 0, 0), ContractError);
}

TEST_CASE("chunk_text keeps token offsets and text") {
    const auto chunks = chunk_text(words(1000), 512, 50, default_tokenizer(), "https://d.org");
    REQUIRE(chunks.size() == 3);
    CHECK(chunks[1].token_start == 462);
    CHECK(chunks[1].token_end == 974);
    CHECK(chunks[1].text.rfind("w462 w463", 0) == 0);
    CHECK(chunks[2].text.substr(chunks[2].text.size() - 4) == "w999");
    CHECK(chunks[0].doc_url == "https://d.org");
    CHECK(chunks[0].embedding.empty());
    CHECK(chunk_text("").empty());
    CHECK(chunk_text("  \n ").empty());
    CHECK(chunk_text(words(400)).size() == 1);
}

TEST_CASE("windows tile every token count") {
    for (int size : {1, 2, 5, 17, 512}) {
        for (int overlap = 0; overlap < std::min(size, 60); overlap += std::max(1, size / 5)) {
            for (int n = 0; n < 1200; n += 37) {
                const auto ws = chunk_windows(n, size, overlap);
                std::vector<oracle::Window> plain;
                for (const auto& w : ws) plain.push_back({w.start, w.end});
                INFO("n=" << n << " size=" << size << " overlap=" << overlap);
                CHECK(std::string(oracle::check_tiling(plain, n, size, overlap)).empty());
            }
        }
    }
}

TEST_CASE("building an index embeds every chunk of every document") {
    HashEmbedder e(32);
    std::vector<WebDocument> docs = {WebDocument::make("https://a.org", words(30, "a"), "t"),
                                     WebDocument::make("https://b.org", words(30, "b"), "t")};
    const auto idx = VectorIndex::build(docs, e);
    CHECK(idx.size() == 2);
    CHECK(idx.dimension() == 32);
    for (const auto& c : idx.chunks()) CHECK(c.embedding.norm() == Approx(1.0));

    const auto again = VectorIndex::build(docs, e);
    CHECK(again.dump() == idx.dump());

    ChunkingOptions small{10, 2, nullptr};
    const auto many = VectorIndex::build(docs, e, small);
    // 30 tokens, stride 8: [0,10) [8,18) [16,26) [24,30)
    CHECK(many.size() == 8);
    CHECK_THROWS_AS(VectorIndex::build({}, e), ContractError);

    const auto dumped = idx.dump();
    CHECK(dumped.at("dimension") == 32);
    CHECK(dumped.at("chunks")[1].at("url") == "https://b.org");
    CHECK(dumped.at("chunks")[0].at("embedding").size() == 32);
}

TEST_CASE("embedder failures propagate out of build") {
    class Broken final : public Embedder {
    public:
        std::vector<Embedding> embed(const std::vector<std::string>&) override {
            throw ProviderError("down", true);
        }
        std::size_t dimension() const override { return 4; }
    } broken;
    CHECK_THROWS_AS(VectorIndex::build({WebDocument::make("u", "some text", "t")}, broken), ProviderError);
}

TEST_CASE("top candidates sort by relevance and break ties by insertion") {
    const auto q = Embedding::normalized({1, 0});
    // cos 0.1, 0.9, 0.5 against q
    auto idx = VectorIndex::from_chunks({chunk_at("c01", {0.1, std::sqrt(1 - 0.01)}),
                                         chunk_at("c09", {0.9, std::sqrt(1 - 0.81)}),
                                         chunk_at("c05", {0.5, std::sqrt(1 - 0.25)})});
    const auto top = idx.top_candidates(q, 2);
    REQUIRE(top.size() == 2);
    CHECK(top[0].chunk.doc_url == "c09");
    CHECK(top[0].relevance == Approx(0.9));
    CHECK(top[1].chunk.doc_url == "c05");
    CHECK(idx.top_candidates(q, 50).size() == 3);
    CHECK_THROWS_AS(idx.top_candidates(q, 0), ContractError);

    auto tied = VectorIndex::from_chunks({chunk_at("first", {1, 1}), chunk_at("second", {1, 1})});
    CHECK(tied.top_candidates(q, 1)[0].chunk.doc_url == "first");

    CHECK(VectorIndex::from_chunks({}).top_candidates(q, 5).empty());
    CHECK_THROWS_AS(VectorIndex::from_chunks({chunk_at("a", {1, 0}), chunk_at("b", {1, 0, 0})}), ContractError);
    Chunk raw;
    raw.embedding = Embedding({3, 4});
    CHECK_THROWS_AS(VectorIndex::from_chunks({raw}), ContractError);
}
