// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Diverge Authors

#include <catch_amalgamated.hpp>
#include <httplib.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <thread>

#include "diverge/errors.hpp"
#include "diverge/hashing.hpp"
#include "diverge/http.hpp"
#include "diverge/websearch.hpp"

using namespace diverge;
namespace fs = std::filesystem;

namespace {

std::string long_page(const std::string& word, int repeats = 40) {
    std::string body = "<html><head><title>t</title></head><body><p>";
    for (int i = 0; i < repeats; ++i) body += word + " ";
    return body + "</p></body></html>";
}

WebSearchConfig quiet_config() {
    WebSearchConfig c;
    c.delay_min_seconds = 0.0;
    c.delay_max_seconds = 0.0;
    return c;
}

}  // namespace

TEST_CASE("url filter blocks social, media and pdf links") {
    const auto p = UrlFilterPolicy::defaults();
    CHECK_FALSE(filter_url("https://twitter.com/u/s", p));
    CHECK_FALSE(filter_url("https://x.com/u/status/1", p));
    CHECK_FALSE(filter_url("https://www.youtube.com/watch?v=1", p));
    CHECK_FALSE(filter_url("https://m.instagram.com/p/abc", p));
    CHECK_FALSE(filter_url("https://example.com/a.pdf", p));
    CHECK_FALSE(filter_url("https://example.com/A.PDF?download=1", p));
    CHECK(filter_url("https://example.org/article", p));
    CHECK(filter_url("https://box.com/notes", p));       // not a suffix match on "x.com"
    CHECK(filter_url("https://example.org/pdf-guide", p));
    CHECK_FALSE(filter_url("not a url", p));
    CHECK_FALSE(filter_url("ftp://example.org/file", p));
    CHECK(p.blocked_extensions.count(".pdf"));
}

TEST_CASE("html text extraction") {
    CHECK(extract_text("<p> hi </p><script>x()</script>") == "hi");
    CHECK(extract_text("<style>a{}</style>").empty());
    CHECK(extract_text("<p>a</p><p>b</p>") == "a\nb");
    CHECK(extract_text("<div>Fish &amp; chips&nbsp;&lt;3</div>") == "Fish & chips <3");
    CHECK(extract_text("<body>one<br>two<!-- hidden --><noscript>no</noscript></body>") == "one\ntwo");
    CHECK(extract_text("<span>a</span>   <span>b</span>") == "a b");
    CHECK(extract_text("<html><head><title>Title</title><body>text") == "Title\ntext");
    CHECK(extract_text("<SCRIPT type='x'>var a = '<p>';</SCRIPT><P>ok</P>") == "ok");
}

TEST_CASE("search requests twice the wanted count") {
    FixtureWeb web;
    web.add_results("q", {"https://a.org/1", "https://a.org/2", "https://a.org/3"});
    CHECK(search(web, "q", 5).size() == 3);
    CHECK(web.last_search_limits().back() == 10);
    web.fail_query("bad");
    CHECK_THROWS_AS(search(web, "bad", 5), SearchError);
    CHECK_THROWS_AS(search(web, "q", 0), ContractError);
}

TEST_CASE("retriever drops blocked, failing and short pages and stops at n") {
    FixtureWeb web;
    std::vector<std::string> urls = {
        "https://twitter.com/a/status/1", "https://example.com/paper.pdf", "https://blocked.org/403",
        "https://short.org/page",         "https://ok.org/json",           "https://ok.org/1",
        "https://ok.org/1",               "https://ok.org/2",              "https://ok.org/3",
    };
    web.add_results("q", urls);
    web.add_page("https://twitter.com/a/status/1", long_page("tweet"));
    web.add_page("https://example.com/paper.pdf", long_page("pdf"));
    web.add_page("https://blocked.org/403", long_page("forbidden"), 403);
    web.add_page("https://short.org/page", "<p>" + std::string(100, 'x') + "</p>");
    web.add_page("https://ok.org/1", long_page("alpha"));
    web.add_page("https://ok.org/2", long_page("beta"));
    web.add_page("https://ok.org/3", long_page("gamma"));
    web.add_page("https://ok.org/json", std::string(300, 'j'), 200, "application/json");

    int sleeps = 0;
    WebRetriever retriever(web, web, quiet_config(), [&](auto) { ++sleeps; });
    // n=5 asks the provider for 10, which covers the whole list
    auto r = retriever.retrieve("q", 5);
    REQUIRE(r.documents.size() == 3);
    CHECK(r.documents[0].url == "https://ok.org/1");
    CHECK(r.documents[1].url == "https://ok.org/2");
    CHECK(r.documents[2].url == "https://ok.org/3");
    for (const auto& d : r.documents) {
        CHECK(d.length >= 128);
        CHECK(d.length == utf8_length(d.text));
        CHECK(filter_url(d.url, UrlFilterPolicy::defaults()));
    }
    CHECK(web.last_search_limits().back() == 10);
    // blocked and duplicate URLs are never fetched
    CHECK(web.fetch_calls() == 6);

    // stops once n documents are in hand
    FixtureWeb many;
    std::vector<std::string> good;
    for (int i = 0; i < 6; ++i) {
        good.push_back("https://ok.org/p" + std::to_string(i));
        many.add_page(good.back(), long_page("page" + std::to_string(i)));
    }
    many.add_results("q", good);
    WebRetriever two(many, many, quiet_config());
    auto r2 = two.retrieve("q", 2);
    REQUIRE(r2.documents.size() == 2);
    CHECK(r2.documents[1].url == "https://ok.org/p1");
    CHECK(many.fetch_calls() == 2);
    CHECK(many.last_search_limits().back() == 4);

    CHECK(sleeps == 0);  // [0,0] interval never sleeps

    // second call is served from the cache
    const auto fetches = web.fetch_calls();
    const auto searches = web.search_calls();
    auto again = retriever.retrieve("q", 5);
    CHECK(again.from_cache);
    CHECK(web.fetch_calls() == fetches);
    CHECK(web.search_calls() == searches);
    REQUIRE(again.documents.size() == r.documents.size());
    for (std::size_t i = 0; i < again.documents.size(); ++i) CHECK(again.documents[i].text == r.documents[i].text);
}

TEST_CASE("retrieval-empty and search failures do not throw") {
    FixtureWeb web;
    web.add_results("short", {"https://s.org/1", "https://s.org/2"});
    web.add_page("https://s.org/1", "<p>tiny</p>");
    web.add_page("https://s.org/2", "<p>also tiny</p>");
    web.fail_query("boom");
    WebRetriever retriever(web, web, quiet_config());
    auto r = retriever.retrieve("short", 5);
    CHECK(r.retrieval_empty());
    CHECK_FALSE(r.search_failed);
    auto f = retriever.retrieve("boom", 5);
    CHECK(f.retrieval_empty());
    CHECK(f.search_failed);
    // empty results are not cached
    retriever.retrieve("short", 5);
    CHECK(web.search_calls() == 3);
}

TEST_CASE("rate limiter draws from the configured interval") {
    RateLimiter zero(0.0, 0.0);
    CHECK(zero.next_delay() == 0.0);
    RateLimiter limiter(1.0, 3.0, 7);
    std::set<double> seen;
    for (int i = 0; i < 100; ++i) {
        const double d = limiter.next_delay();
        CHECK(d >= 1.0);
        CHECK(d <= 3.0);
        seen.insert(d);
    }
    CHECK(seen.size() > 1);
    std::vector<double> slept;
    RateLimiter recorded(1.0, 3.0, 1, [&](std::chrono::duration<double> d) { slept.push_back(d.count()); });
    recorded.wait();
    REQUIRE(slept.size() == 1);
    CHECK(slept[0] >= 1.0);
    CHECK_THROWS_AS(RateLimiter(2.0, 1.0), ContractError);
}

TEST_CASE("rate delay is applied between fetches only") {
    FixtureWeb web;
    web.add_results("q", {"https://ok.org/1", "https://ok.org/2", "https://ok.org/3"});
    for (int i = 1; i <= 3; ++i) web.add_page("https://ok.org/" + std::to_string(i), long_page("words"));
    WebSearchConfig c;
    int sleeps = 0;
    WebRetriever retriever(web, web, c, [&](auto d) {
        CHECK(d.count() >= 1.0);
        ++sleeps;
    });
    CHECK(retriever.retrieve("q", 3).documents.size() == 3);
    CHECK(sleeps == 2);
}

TEST_CASE("cache files live under search/<sha256>.json") {
    const auto root = fs::temp_directory_path() / "diverge_cache_test";
    fs::remove_all(root);
    FixtureWeb web;
    web.add_results("cached query", {"https://ok.org/1"});
    web.add_page("https://ok.org/1", long_page("cached"));
    auto cfg = quiet_config();
    cfg.cache_dir = root;
    {
        WebRetriever retriever(web, web, cfg);
        CHECK(retriever.retrieve("cached query", 5).documents.size() == 1);
    }
    const auto path = root / "search" / (sha256_hex("cached query") + ".json");
    REQUIRE(fs::exists(path));
    std::ifstream in(path);
    const auto j = nlohmann::json::parse(in);
    CHECK(j.at("query") == "cached query");
    CHECK(j.contains("fetched_at"));
    CHECK(j.at("documents")[0].at("url") == "https://ok.org/1");
    CHECK(j.at("documents")[0].at("length").get<int>() >= 128);

    // a fresh retriever with the same directory does no network work
    FixtureWeb empty;
    WebRetriever cold(empty, empty, cfg);
    const auto r = cold.retrieve("cached query", 5);
    CHECK(r.from_cache);
    CHECK(empty.search_calls() == 0);
    fs::remove_all(root);
}

TEST_CASE("returned documents always pass the filters") {
    std::mt19937_64 rng(99);
    const std::vector<std::string> hosts = {"twitter.com", "ok.org", "youtube.com", "news.net", "instagram.com"};
    const std::vector<std::string> paths = {"/a", "/b.pdf", "/c.html", "/d.mp4", "/e"};
    for (int trial = 0; trial < 50; ++trial) {
        FixtureWeb web;
        std::vector<std::string> urls;
        for (int i = 0; i < 12; ++i) {
            const auto url = "https://" + hosts[rng() % hosts.size()] + paths[rng() % paths.size()] + std::to_string(i);
            urls.push_back(url);
            const int len = static_cast<int>(rng() % 300);
            const int status = rng() % 5 == 0 ? 403 : 200;
            web.add_page(url, "<p>" + std::string(static_cast<std::size_t>(len), 'z') + "</p>", status);
        }
        web.add_results("q", urls);
        WebRetriever retriever(web, web, quiet_config());
        const int n = 5 + static_cast<int>(rng() % 6);
        const auto r = retriever.retrieve("q", n);
        CHECK(static_cast<int>(r.documents.size()) <= n);
        for (const auto& d : r.documents) {
            CHECK(d.length >= kDefaultMinDocChars);
            CHECK(filter_url(d.url, UrlFilterPolicy::defaults()));
        }
    }
}

TEST_CASE("duckduckgo result pages are parsed into target urls") {
    const std::string html = R"(
<div class="result"><a rel="nofollow" class="result__a" href="//duckduckgo.com/l/?uddg=https%3A%2F%2Fexample.org%2Fpage%3Fa%3D1&amp;rut=abc">Example</a></div>
<div class="result"><a class="result__a" href="https://direct.net/x">Direct</a></div>
<div class="result"><a class="result__a" href="//duckduckgo.com/l/?uddg=https%3A%2F%2Fexample.org%2Fpage%3Fa%3D1">Dup</a></div>
<a class="result__snippet" href="https://ignored.org">snippet</a>)";
    const auto urls = DuckDuckGoSearch::parse_results(html);
    REQUIRE(urls.size() == 2);
    CHECK(urls[0] == "https://example.org/page?a=1");
    CHECK(urls[1] == "https://direct.net/x");
}

TEST_CASE("url helpers") {
    const auto u = parse_url("https://Example.org:8443/a/b?x=1#f");
    REQUIRE(u);
    CHECK(u->scheme == "https");
    CHECK(u->port == 8443);
    CHECK(u->path_only() == "/a/b");
    CHECK_FALSE(parse_url("mailto:x@y"));
    CHECK(url_decode(url_encode("a b&c=d/é")) == "a b&c=d/é");
    CHECK(url_decode("100%") == "100%");
    CHECK(url_decode("a+b") == "a b");
}

TEST_CASE("http page fetcher against a local server") {
    httplib::Server server;
    server.Get("/page", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(long_page("served"), "text/html; charset=utf-8");
    });
    server.Get("/forbidden", [](const httplib::Request&, httplib::Response& res) { res.status = 403; });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    const std::string base = "http://127.0.0.1:" + std::to_string(port);

    HttpPageFetcher fetcher;
    const auto ok = fetcher.fetch(base + "/page");
    CHECK(ok.status == 200);
    CHECK(ok.content_type.find("text/html") == 0);
    CHECK(fetcher.fetch(base + "/forbidden").status == 403);

    FixtureWeb search;
    search.add_results("live", {base + "/forbidden", base + "/page"});
    WebRetriever retriever(search, fetcher, quiet_config());
    const auto r = retriever.retrieve("live", 5);
    REQUIRE(r.documents.size() == 1);
    CHECK(r.documents[0].url == base + "/page");

    server.stop();
    t.join();
    CHECK_THROWS(fetcher.fetch(base + "/page"));
}
