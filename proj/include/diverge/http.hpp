// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Diverge Authors

#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "diverge/errors.hpp"

namespace diverge {

struct ParsedUrl {
    std::string scheme;  // lowercase, "http" or "https"
    std::string host;    // lowercase
    int port = 0;
    std::string path;    // path + query, always starts with '/'

    /// "scheme://host:port"
    std::string origin() const;
    /// Path without the query string or fragment.
    std::string path_only() const;
};

/// Parses absolute http(s) URLs. Anything else yields nullopt.
std::optional<ParsedUrl> parse_url(std::string_view url);

std::string url_encode(std::string_view s);
std::string url_decode(std::string_view s);

/// Connection-level failure (DNS, refused, timeout, TLS).
class TransportError : public Error {
public:
    using Error::Error;
};

struct HttpResponse {
    int status = 0;
    std::string body;
    std::string content_type;
};

struct HttpOptions {
    std::chrono::seconds timeout{15};
    std::string user_agent = "Mozilla/5.0 (X11; Linux x86_64) diverge/1.0";
    std::map<std::string, std::string> headers;
    bool follow_redirects = true;
};

/// Throws TransportError when no response was received; HTTP error statuses
/// are returned, not thrown.
HttpResponse http_get(const std::string& url, const HttpOptions& options = {});
HttpResponse http_post(const std::string& url, const std::string& body,
                       const std::string& content_type, const HttpOptions& options = {});

}  // namespace diverge
