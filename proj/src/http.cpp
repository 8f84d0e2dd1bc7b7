// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Diverge Authors

#include "diverge/http.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>

namespace diverge {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

httplib::Client make_client(const ParsedUrl& url, const HttpOptions& options) {
    httplib::Client client(url.origin());
    const auto secs = static_cast<time_t>(options.timeout.count());
    client.set_connection_timeout(secs);
    client.set_read_timeout(secs);
    client.set_write_timeout(secs);
    client.set_follow_location(options.follow_redirects);
    return client;
}

httplib::Headers make_headers(const HttpOptions& options) {
    httplib::Headers headers;
    if (!options.user_agent.empty()) headers.emplace("User-Agent", options.user_agent);
    for (const auto& [k, v] : options.headers) headers.emplace(k, v);
    return headers;
}

HttpResponse convert(const httplib::Result& res, const std::string& url) {
    if (!res) {
        throw TransportError("request to " + url + " failed: " + httplib::to_string(res.error()));
    }
    HttpResponse out;
    out.status = res->status;
    out.body = res->body;
    out.content_type = res->get_header_value("Content-Type");
    return out;
}

ParsedUrl require_url(const std::string& url) {
    auto parsed = parse_url(url);
    if (!parsed) throw TransportError("unsupported url: " + url);
    return *parsed;
}

}  // namespace

std::string ParsedUrl::origin() const { return scheme + "://" + host + ":" + std::to_string(port); }

std::string ParsedUrl::path_only() const {
    const auto cut = path.find_first_of("?#");
    return cut == std::string::npos ? path : path.substr(0, cut);
}

std::optional<ParsedUrl> parse_url(std::string_view url) {
    const auto sep = url.find("://");
    if (sep == std::string_view::npos) return std::nullopt;
    ParsedUrl out;
    out.scheme = lower(std::string(url.substr(0, sep)));
    if (out.scheme != "http" && out.scheme != "https") return std::nullopt;
    auto rest = url.substr(sep + 3);
    const auto path_start = rest.find_first_of("/?#");
    auto authority = rest.substr(0, path_start);
    out.path = path_start == std::string_view::npos ? "/" : std::string(rest.substr(path_start));
    if (out.path.front() != '/') out.path.insert(out.path.begin(), '/');
    if (const auto at = authority.rfind('@'); at != std::string_view::npos) {
        authority = authority.substr(at + 1);
    }
    out.port = out.scheme == "https" ? 443 : 80;
    if (const auto colon = authority.rfind(':'); colon != std::string_view::npos) {
        const auto port_text = authority.substr(colon + 1);
        if (port_text.empty() ||
            !std::all_of(port_text.begin(), port_text.end(),
                         [](unsigned char c) { return std::isdigit(c); }) ||
            port_text.size() > 5) {
            return std::nullopt;
        }
        out.port = std::stoi(std::string(port_text));
        authority = authority.substr(0, colon);
    }
    if (authority.empty()) return std::nullopt;
    for (unsigned char c : authority) {
        if (!(std::isalnum(c) || c == '-' || c == '.' || c == '_')) return std::nullopt;
    }
    out.host = lower(std::string(authority));
    return out;
}

std::string url_encode(std::string_view s) {
    static constexpr char kHex[] = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(kHex[c >> 4]);
            out.push_back(kHex[c & 0xF]);
        }
    }
    return out;
}

std::string url_decode(std::string_view s) {
    auto hex = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '%' && i + 2 < s.size() && hex(s[i + 1]) >= 0 && hex(s[i + 2]) >= 0) {
            out.push_back(static_cast<char>(hex(s[i + 1]) * 16 + hex(s[i + 2])));
            i += 2;
        } else if (s[i] == '+') {
            out.push_back(' ');
        } else {
            out.push_back(s[i]);
        }
    }
    return out;
}

HttpResponse http_get(const std::string& url, const HttpOptions& options) {
    const auto parsed = require_url(url);
    auto client = make_client(parsed, options);
    return convert(client.Get(parsed.path, make_headers(options)), url);
}

HttpResponse http_post(const std::string& url, const std::string& body,
                       const std::string& content_type, const HttpOptions& options) {
    const auto parsed = require_url(url);
    auto client = make_client(parsed, options);
    return convert(client.Post(parsed.path, make_headers(options), body, content_type), url);
}

}  // namespace diverge
