// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Diverge Authors

#include "diverge/websearch.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <thread>

#include "diverge/core.hpp"
#include "diverge/errors.hpp"
#include "diverge/hashing.hpp"

namespace diverge {

namespace fs = std::filesystem;

// ---- documents ----------------------------------------------------------------

int utf8_length(std::string_view s) {
    return static_cast<int>(std::count_if(s.begin(), s.end(), [](char c) {
        return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
    }));
}

WebDocument WebDocument::make(std::string url, std::string text, std::string fetched_at) {
    WebDocument d;
    d.url = std::move(url);
    d.length = utf8_length(text);
    d.text = std::move(text);
    d.fetched_at = std::move(fetched_at);
    return d;
}

void to_json(nlohmann::json& j, const WebDocument& d) {
    j = nlohmann::json{{"url", d.url}, {"text", d.text}, {"length", d.length}};
    if (!d.fetched_at.empty()) j["fetched_at"] = d.fetched_at;
}

void from_json(const nlohmann::json& j, WebDocument& d) {
    d = WebDocument::make(j.at("url").get<std::string>(), j.at("text").get<std::string>(),
                          j.value("fetched_at", std::string{}));
}

void to_json(nlohmann::json& j, const CachedSearch& c) {
    j = nlohmann::json{{"query", c.query}, {"fetched_at", c.fetched_at}, {"documents", c.documents}};
}

void from_json(const nlohmann::json& j, CachedSearch& c) {
    j.at("query").get_to(c.query);
    c.fetched_at = j.value("fetched_at", std::string{});
    j.at("documents").get_to(c.documents);
}

// ---- URL filtering ------------------------------------------------------------

UrlFilterPolicy UrlFilterPolicy::defaults() {
    UrlFilterPolicy p;
    p.blocked_domains = {"twitter.com",   "x.com",         "t.co",          "youtube.com",
                         "youtu.be",      "instagram.com", "facebook.com",  "fb.com",
                         "tiktok.com",    "pinterest.com", "linkedin.com",  "snapchat.com",
                         "threads.net",   "vimeo.com",     "dailymotion.com", "twitch.tv",
                         "soundcloud.com", "spotify.com"};
    p.blocked_extensions = {".pdf", ".doc", ".docx", ".ppt", ".pptx", ".xls", ".xlsx",
                            ".zip", ".gz",  ".mp3",  ".mp4", ".avi",  ".mov", ".jpg",
                            ".jpeg", ".png", ".gif", ".webp", ".svg"};
    return p;
}

bool filter_url(std::string_view url, const UrlFilterPolicy& policy) {
    const auto parsed = parse_url(url);
    if (!parsed) return false;
    std::string_view host = parsed->host;
    if (host.starts_with("www.")) host.remove_prefix(4);
    for (std::string_view h = host;;) {
        if (policy.blocked_domains.contains(std::string(h))) return false;
        const auto dot = h.find('.');
        if (dot == std::string_view::npos) break;
        h.remove_prefix(dot + 1);
    }
    std::string path = parsed->path_only();
    std::transform(path.begin(), path.end(), path.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return std::none_of(policy.blocked_extensions.begin(), policy.blocked_extensions.end(),
                        [&](const std::string& ext) { return path.ends_with(ext); });
}

// ---- search -------------------------------------------------------------------

std::vector<std::string> search(SearchProvider& provider, const std::string& query, int want) {
    if (want < 1) throw ContractError("search: want must be >= 1");
    try {
        auto urls = provider.search(query, kSearchOverRequestFactor * want);
        if (static_cast<int>(urls.size()) > kSearchOverRequestFactor * want) {
            urls.resize(static_cast<std::size_t>(kSearchOverRequestFactor * want));
        }
        return urls;
    } catch (const SearchError&) {
        throw;
    } catch (const std::exception& e) {
        throw SearchError("search for '" + query + "' failed: " + e.what());
    }
}

// ---- FixtureWeb ---------------------------------------------------------------

FixtureWeb::FixtureWeb(FixtureWeb&& other) noexcept {
    std::lock_guard lock(other.mutex_);
    results_ = std::move(other.results_);
    pages_ = std::move(other.pages_);
    failing_ = std::move(other.failing_);
    search_calls_ = other.search_calls_;
    fetch_calls_ = other.fetch_calls_;
    limits_ = std::move(other.limits_);
}

FixtureWeb FixtureWeb::from_json(const nlohmann::json& j) {
    FixtureWeb web;
    if (auto it = j.find("search"); it != j.end()) {
        for (const auto& [q, urls] : it->items()) web.add_results(q, urls.get<std::vector<std::string>>());
    }
    if (auto it = j.find("pages"); it != j.end()) {
        for (const auto& [url, page] : it->items()) {
            if (page.is_string()) {
                web.add_page(url, page.get<std::string>());
            } else {
                web.add_page(url, page.value("html", std::string{}), page.value("status", 200),
                             page.value("content_type", std::string("text/html")));
            }
        }
    }
    if (auto it = j.find("failing_queries"); it != j.end()) {
        for (const auto& q : *it) web.fail_query(q.get<std::string>());
    }
    return web;
}

FixtureWeb FixtureWeb::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open search fixture " + path.string());
    try {
        return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed search fixture " + path.string() + ": " + e.what());
    }
}

FixtureWeb& FixtureWeb::add_results(const std::string& query, std::vector<std::string> urls) {
    std::lock_guard lock(mutex_);
    results_[query] = std::move(urls);
    return *this;
}

FixtureWeb& FixtureWeb::add_page(const std::string& url, std::string html, int status,
                                 std::string content_type) {
    std::lock_guard lock(mutex_);
    pages_[url] = PageResponse{status, std::move(html), std::move(content_type)};
    return *this;
}

FixtureWeb& FixtureWeb::fail_query(const std::string& query) {
    std::lock_guard lock(mutex_);
    failing_.insert(query);
    return *this;
}

std::vector<std::string> FixtureWeb::search(const std::string& query, int max_results) {
    std::lock_guard lock(mutex_);
    ++search_calls_;
    limits_.push_back(max_results);
    if (failing_.contains(query)) throw SearchError("fixture search failure for '" + query + "'");
    auto it = results_.find(query);
    if (it == results_.end()) it = results_.find("*");
    if (it == results_.end()) return {};
    auto urls = it->second;
    if (static_cast<int>(urls.size()) > max_results) urls.resize(static_cast<std::size_t>(max_results));
    return urls;
}

PageResponse FixtureWeb::fetch(const std::string& url) {
    std::lock_guard lock(mutex_);
    ++fetch_calls_;
    auto it = pages_.find(url);
    if (it == pages_.end()) return PageResponse{404, "", "text/html"};
    return it->second;
}

std::size_t FixtureWeb::search_calls() const {
    std::lock_guard lock(mutex_);
    return search_calls_;
}

std::size_t FixtureWeb::fetch_calls() const {
    std::lock_guard lock(mutex_);
    return fetch_calls_;
}

std::vector<int> FixtureWeb::last_search_limits() const {
    std::lock_guard lock(mutex_);
    return limits_;
}

// ---- DuckDuckGo -----------------------------------------------------------------

DuckDuckGoSearch::DuckDuckGoSearch(HttpOptions options, std::string endpoint)
    : options_(std::move(options)), endpoint_(std::move(endpoint)) {}

std::vector<std::string> DuckDuckGoSearch::parse_results(std::string_view html) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while ((pos = html.find("result__a", pos)) != std::string_view::npos) {
        const auto tag_start = html.rfind('<', pos);
        const auto tag_close = html.find('>', pos);
        pos += 9;
        if (tag_start == std::string_view::npos || tag_close == std::string_view::npos) continue;
        const auto tag = html.substr(tag_start, tag_close - tag_start);
        const auto href = tag.find("href=\"");
        if (href == std::string_view::npos) continue;
        const auto value_end = tag.find('"', href + 6);
        if (value_end == std::string_view::npos) continue;
        std::string link(tag.substr(href + 6, value_end - href - 6));
        // &amp; inside attribute values
        for (std::size_t a; (a = link.find("&amp;")) != std::string::npos;) link.replace(a, 5, "&");
        if (const auto uddg = link.find("uddg="); uddg != std::string::npos) {
            const auto stop = link.find('&', uddg);
            link = url_decode(link.substr(uddg + 5, stop == std::string::npos ? std::string::npos
                                                                              : stop - uddg - 5));
        } else if (link.starts_with("//")) {
            link = "https:" + link;
        }
        if (!parse_url(link)) continue;
        if (std::find(out.begin(), out.end(), link) == out.end()) out.push_back(std::move(link));
    }
    return out;
}

std::vector<std::string> DuckDuckGoSearch::search(const std::string& query, int max_results) {
    HttpResponse res;
    try {
        res = http_post(endpoint_, "q=" + url_encode(query), "application/x-www-form-urlencoded",
                        options_);
    } catch (const TransportError& e) {
        throw SearchError(e.what());
    }
    if (res.status != 200) {
        throw SearchError("search endpoint returned HTTP " + std::to_string(res.status));
    }
    auto urls = parse_results(res.body);
    if (static_cast<int>(urls.size()) > max_results) urls.resize(static_cast<std::size_t>(max_results));
    return urls;
}

PageResponse HttpPageFetcher::fetch(const std::string& url) {
    const auto res = http_get(url, options_);
    return PageResponse{res.status, res.body, res.content_type};
}

// ---- RateLimiter ----------------------------------------------------------------

RateLimiter::RateLimiter(double min_seconds, double max_seconds, std::uint64_t seed, Sleeper sleeper)
    : min_(min_seconds), max_(max_seconds), rng_(seed), sleeper_(std::move(sleeper)) {
    if (min_ < 0.0 || max_ < min_) throw ContractError("rate delay interval must satisfy 0 <= min <= max");
}

double RateLimiter::next_delay() {
    if (max_ == min_) return min_;
    std::lock_guard lock(mutex_);
    return std::uniform_real_distribution<double>(min_, max_)(rng_);
}

void RateLimiter::wait() {
    const double d = next_delay();
    if (d <= 0.0) return;
    if (sleeper_) {
        sleeper_(std::chrono::duration<double>(d));
    } else {
        std::this_thread::sleep_for(std::chrono::duration<double>(d));
    }
}

// ---- DocumentCache ----------------------------------------------------------------

DocumentCache::DocumentCache(std::optional<fs::path> root) : root_(std::move(root)) {}

fs::path DocumentCache::path_for(const std::string& query) const {
    if (!root_) throw ContractError("document cache has no directory");
    return *root_ / "search" / (sha256_hex(query) + ".json");
}

std::optional<CachedSearch> DocumentCache::get(const std::string& query) {
    std::lock_guard lock(mutex_);
    if (auto it = memory_.find(query); it != memory_.end()) return it->second;
    if (!root_) return std::nullopt;
    const auto path = path_for(query);
    std::ifstream in(path);
    if (!in) return std::nullopt;
    try {
        auto entry = nlohmann::json::parse(in).get<CachedSearch>();
        if (entry.query != query) return std::nullopt;  // hash collision
        memory_[query] = entry;
        return entry;
    } catch (const nlohmann::json::exception& e) {
        spdlog::warn("ignoring unreadable cache file {}: {}", path.string(), e.what());
        return std::nullopt;
    }
}

void DocumentCache::put(const CachedSearch& entry) {
    std::lock_guard lock(mutex_);
    memory_[entry.query] = entry;
    if (!root_) return;
    const auto path = path_for(entry.query);
    fs::create_directories(path.parent_path());
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp);
        out << nlohmann::json(entry).dump(2) << '\n';
    }
    fs::rename(tmp, path);
}

// ---- WebRetriever -----------------------------------------------------------------

WebRetriever::WebRetriever(SearchProvider& provider, PageFetcher& fetcher, WebSearchConfig config,
                           RateLimiter::Sleeper sleeper)
    : provider_(provider),
      fetcher_(fetcher),
      config_(std::move(config)),
      limiter_(config_.delay_min_seconds, config_.delay_max_seconds, config_.seed, std::move(sleeper)),
      cache_(config_.cache_dir) {}

std::optional<WebDocument> WebRetriever::try_fetch(const std::string& url) {
    PageResponse page;
    try {
        page = fetcher_.fetch(url);
    } catch (const std::exception& e) {
        spdlog::info("fetch failed for {}: {}", url, e.what());
        return std::nullopt;
    }
    if (page.status != 200) {
        spdlog::info("skipping {}: HTTP {}", url, page.status);
        return std::nullopt;
    }
    if (!page.content_type.empty() && page.content_type.find("html") == std::string::npos) {
        spdlog::info("skipping {}: content type {}", url, page.content_type);
        return std::nullopt;
    }
    auto doc = WebDocument::make(url, extract_text(page.body), now_iso8601());
    if (doc.length < config_.min_doc_chars) {
        spdlog::info("skipping {}: {} chars < {}", url, doc.length, config_.min_doc_chars);
        return std::nullopt;
    }
    return doc;
}

RetrievalResult WebRetriever::retrieve(const std::string& query, int n) {
    if (n < 1) throw ContractError("retrieve: n must be >= 1");
    RetrievalResult result;
    if (auto cached = cache_.get(query)) {
        result.documents = std::move(cached->documents);
        result.from_cache = true;
        return result;
    }

    std::vector<std::string> candidates;
    try {
        candidates = search(provider_, query, n);
    } catch (const SearchError& e) {
        spdlog::warn("{}", e.what());
        result.search_failed = true;
        return result;
    }

    std::set<std::string> seen;
    bool first = true;
    for (const auto& url : candidates) {
        if (static_cast<int>(result.documents.size()) >= n) break;
        if (!seen.insert(url).second || !filter_url(url, config_.policy)) continue;
        if (!first) limiter_.wait();
        first = false;
        if (auto doc = try_fetch(url)) result.documents.push_back(std::move(*doc));
    }

    if (result.documents.empty()) {
        spdlog::warn("no usable documents for query '{}'", query);
    } else {
        cache_.put(CachedSearch{query, now_iso8601(), result.documents});
    }
    return result;
}

}  // namespace diverge
