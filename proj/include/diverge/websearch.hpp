// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Diverge Authors

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "diverge/http.hpp"

namespace diverge {

/// The search step asks the provider for this many candidates per wanted
/// document, leaving room for filtering and extraction failures.
inline constexpr int kSearchOverRequestFactor = 2;
inline constexpr int kDefaultMinDocChars = 128;

struct WebDocument {
    std::string url;
    std::string text;
    int length = 0;  // Unicode code points in `text`
    std::string fetched_at;

    static WebDocument make(std::string url, std::string text, std::string fetched_at);
};

void to_json(nlohmann::json& j, const WebDocument& d);
void from_json(const nlohmann::json& j, WebDocument& d);

/// Number of Unicode code points in UTF-8 `s`.
int utf8_length(std::string_view s);

struct UrlFilterPolicy {
    /// Matched against the host and every parent domain of it.
    std::set<std::string> blocked_domains;
    /// Matched case-insensitively against the end of the URL path.
    std::set<std::string> blocked_extensions;

    /// Social and multimedia platforms plus PDF and other non-HTML formats.
    static UrlFilterPolicy defaults();
};

/// True when the URL may be fetched. Unparseable URLs are rejected.
bool filter_url(std::string_view url, const UrlFilterPolicy& policy);

/// Visible text of an HTML page. Script, style and other non-text subtrees
/// are dropped, block elements break lines, every line is whitespace-stripped
/// and non-empty lines are joined with '\n'.
std::string extract_text(std::string_view html);

class SearchProvider {
public:
    virtual ~SearchProvider() = default;
    /// Up to `max_results` URLs in provider rank order. Throws SearchError.
    virtual std::vector<std::string> search(const std::string& query, int max_results) = 0;
};

struct PageResponse {
    int status = 0;
    std::string body;
    std::string content_type;
};

class PageFetcher {
public:
    virtual ~PageFetcher() = default;
    /// Throws on transport failure; HTTP error statuses are returned.
    virtual PageResponse fetch(const std::string& url) = 0;
};

/// Requests kSearchOverRequestFactor * want candidates. Provider failures of
/// any kind surface as SearchError.
std::vector<std::string> search(SearchProvider& provider, const std::string& query, int want);

/// Canned search results and pages for hermetic runs.
///
/// JSON form:
///   {"search": {"<query>": ["<url>", ...]},
///    "pages":  {"<url>": {"status": 200, "html": "...", "content_type": "text/html"}},
///    "failing_queries": ["<query>"]}
/// Unknown queries fall back to the "*" entry, or return no results without one;
/// unknown URLs answer 404.
class FixtureWeb final : public SearchProvider, public PageFetcher {
public:
    FixtureWeb() = default;
    FixtureWeb(FixtureWeb&& other) noexcept;
    static FixtureWeb from_json(const nlohmann::json& j);
    static FixtureWeb load(const std::filesystem::path& path);

    FixtureWeb& add_results(const std::string& query, std::vector<std::string> urls);
    FixtureWeb& add_page(const std::string& url, std::string html, int status = 200,
                         std::string content_type = "text/html");
    FixtureWeb& fail_query(const std::string& query);

    std::vector<std::string> search(const std::string& query, int max_results) override;
    PageResponse fetch(const std::string& url) override;

    std::size_t search_calls() const;
    std::size_t fetch_calls() const;
    std::vector<int> last_search_limits() const;

private:
    mutable std::mutex mutex_;
    std::map<std::string, std::vector<std::string>> results_;
    std::map<std::string, PageResponse> pages_;
    std::set<std::string> failing_;
    std::size_t search_calls_ = 0;
    std::size_t fetch_calls_ = 0;
    std::vector<int> limits_;
};

/// Scrapes the DuckDuckGo HTML endpoint.
class DuckDuckGoSearch final : public SearchProvider {
public:
    explicit DuckDuckGoSearch(HttpOptions options = {},
                              std::string endpoint = "https://html.duckduckgo.com/html/");
    std::vector<std::string> search(const std::string& query, int max_results) override;

    /// Result URLs from a results page, in page order, without duplicates.
    static std::vector<std::string> parse_results(std::string_view html);

private:
    HttpOptions options_;
    std::string endpoint_;
};

class HttpPageFetcher final : public PageFetcher {
public:
    explicit HttpPageFetcher(HttpOptions options = {}) : options_(std::move(options)) {}
    PageResponse fetch(const std::string& url) override;

private:
    HttpOptions options_;
};

/// Uniformly random pause between consecutive page fetches.
class RateLimiter {
public:
    using Sleeper = std::function<void(std::chrono::duration<double>)>;

    RateLimiter(double min_seconds = 1.0, double max_seconds = 3.0, std::uint64_t seed = 0,
                Sleeper sleeper = {});

    /// Next delay in seconds, drawn from [min, max].
    double next_delay();
    /// Sleeps for next_delay(); a [0,0] interval never sleeps.
    void wait();

private:
    double min_;
    double max_;
    std::mt19937_64 rng_;
    Sleeper sleeper_;
    std::mutex mutex_;
};

struct CachedSearch {
    std::string query;
    std::string fetched_at;
    std::vector<WebDocument> documents;
};

void to_json(nlohmann::json& j, const CachedSearch& c);
void from_json(const nlohmann::json& j, CachedSearch& c);

/// Per-query document cache. Always memoizes in memory; when a root
/// directory is given, also persists to <root>/search/<sha256(query)>.json.
class DocumentCache {
public:
    explicit DocumentCache(std::optional<std::filesystem::path> root = std::nullopt);

    std::optional<CachedSearch> get(const std::string& query);
    void put(const CachedSearch& entry);

    std::filesystem::path path_for(const std::string& query) const;

private:
    std::optional<std::filesystem::path> root_;
    std::mutex mutex_;
    std::map<std::string, CachedSearch> memory_;
};

struct RetrievalResult {
    std::vector<WebDocument> documents;
    bool from_cache = false;
    bool search_failed = false;

    /// No usable document was found.
    bool retrieval_empty() const noexcept { return documents.empty(); }
};

/// Something that turns a query into web documents.
class DocumentRetriever {
public:
    virtual ~DocumentRetriever() = default;
    virtual RetrievalResult retrieve(const std::string& query, int n) = 0;
};

struct WebSearchConfig {
    UrlFilterPolicy policy = UrlFilterPolicy::defaults();
    int min_doc_chars = kDefaultMinDocChars;
    double delay_min_seconds = 1.0;
    double delay_max_seconds = 3.0;
    std::uint64_t seed = 0;
    std::optional<std::filesystem::path> cache_dir;
};

/// search -> filter_url -> fetch (rate limited) -> extract_text -> length
/// filter, stopping at n documents, with per-query caching.
class WebRetriever final : public DocumentRetriever {
public:
    WebRetriever(SearchProvider& provider, PageFetcher& fetcher, WebSearchConfig config = {},
                 RateLimiter::Sleeper sleeper = {});

    /// Never throws for per-URL or search failures; they only shrink the result.
    RetrievalResult retrieve(const std::string& query, int n) override;

private:
    std::optional<WebDocument> try_fetch(const std::string& url);

    SearchProvider& provider_;
    PageFetcher& fetcher_;
    WebSearchConfig config_;
    RateLimiter limiter_;
    DocumentCache cache_;
};

}  // namespace diverge
