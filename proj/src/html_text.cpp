// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Diverge Authors

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>

#include "diverge/core.hpp"
#include "diverge/websearch.hpp"

namespace diverge {

namespace {

// Subtrees whose content is never visible text.
const std::set<std::string, std::less<>> kSkipped = {
    "script", "style", "noscript", "template", "svg", "canvas",
    "iframe", "object", "video",   "audio",    "math"};

const std::set<std::string, std::less<>> kBlock = {
    "address", "article", "aside", "blockquote", "br", "dd", "div", "dl", "dt",
    "fieldset", "figcaption", "figure", "footer", "form", "h1", "h2", "h3", "h4",
    "h5", "h6", "header", "hr", "li", "main", "nav", "ol", "p", "pre", "section",
    "table", "tbody", "td", "tfoot", "th", "thead", "title", "tr", "ul", "body", "html"};

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

bool iequals_at(std::string_view s, std::size_t pos, std::string_view word) {
    if (pos + word.size() > s.size()) return false;
    for (std::size_t i = 0; i < word.size(); ++i) {
        if (lower(s[pos + i]) != word[i]) return false;
    }
    return true;
}

void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

/// Decodes one entity starting at s[pos] == '&'. Returns consumed length, 0 if
/// not a recognised entity.
std::size_t decode_entity(std::string_view s, std::size_t pos, std::string& out) {
    const auto semi = s.find(';', pos);
    if (semi == std::string_view::npos || semi - pos > 10) return 0;
    const auto name = s.substr(pos + 1, semi - pos - 1);
    if (name.empty()) return 0;
    if (name[0] == '#') {
        std::uint32_t cp = 0;
        const bool hex = name.size() > 1 && (name[1] == 'x' || name[1] == 'X');
        const auto digits = name.substr(hex ? 2 : 1);
        if (digits.empty()) return 0;
        for (char c : digits) {
            const int d = std::isdigit(static_cast<unsigned char>(c)) ? c - '0'
                          : hex && std::isxdigit(static_cast<unsigned char>(c)) ? lower(c) - 'a' + 10
                                                                                 : -1;
            if (d < 0) return 0;
            cp = cp * (hex ? 16 : 10) + static_cast<std::uint32_t>(d);
            if (cp > 0x10FFFF) cp = 0x110000;
        }
        append_utf8(out, cp);
        return semi - pos + 1;
    }
    static const std::pair<std::string_view, std::uint32_t> kNamed[] = {
        {"amp", '&'},     {"lt", '<'},      {"gt", '>'},      {"quot", '"'},
        {"apos", '\''},   {"nbsp", ' '},    {"ndash", 0x2013}, {"mdash", 0x2014},
        {"hellip", 0x2026}, {"rsquo", 0x2019}, {"lsquo", 0x2018}, {"rdquo", 0x201D},
        {"ldquo", 0x201C}, {"copy", 0xA9},  {"reg", 0xAE},     {"trade", 0x2122}};
    for (const auto& [n, cp] : kNamed) {
        if (n == name) {
            append_utf8(out, cp);
            return semi - pos + 1;
        }
    }
    return 0;
}

/// Index one past the '>' closing the tag that starts at `lt`, honouring
/// quoted attribute values.
std::size_t tag_end(std::string_view s, std::size_t lt) {
    char quote = 0;
    for (std::size_t i = lt + 1; i < s.size(); ++i) {
        const char c = s[i];
        if (quote) {
            if (c == quote) quote = 0;
        } else if (c == '"' || c == '\'') {
            quote = c;
        } else if (c == '>') {
            return i + 1;
        }
    }
    return s.size();
}

std::string finish_lines(const std::string& raw) {
    std::string out;
    std::size_t start = 0;
    while (start <= raw.size()) {
        auto end = raw.find('\n', start);
        if (end == std::string::npos) end = raw.size();
        std::string line;
        bool pending_space = false;
        for (std::size_t i = start; i < end; ++i) {
            const unsigned char c = static_cast<unsigned char>(raw[i]);
            if (c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v') {
                pending_space = !line.empty();
            } else {
                if (pending_space) line.push_back(' ');
                pending_space = false;
                line.push_back(static_cast<char>(c));
            }
        }
        if (!line.empty()) {
            if (!out.empty()) out.push_back('\n');
            out += line;
        }
        start = end + 1;
    }
    return out;
}

}  // namespace

std::string extract_text(std::string_view html) {
    std::string raw;
    raw.reserve(html.size() / 2);
    std::size_t i = 0;
    while (i < html.size()) {
        const char c = html[i];
        if (c == '&') {
            if (const auto used = decode_entity(html, i, raw)) {
                i += used;
            } else {
                raw.push_back(c);
                ++i;
            }
            continue;
        }
        if (c != '<') {
            raw.push_back(c);
            ++i;
            continue;
        }
        if (html.compare(i, 4, "<!--") == 0) {
            const auto close = html.find("-->", i + 4);
            i = close == std::string_view::npos ? html.size() : close + 3;
            continue;
        }
        const bool closing = i + 1 < html.size() && html[i + 1] == '/';
        std::size_t name_start = i + (closing ? 2 : 1);
        std::size_t name_end = name_start;
        while (name_end < html.size() &&
               (std::isalnum(static_cast<unsigned char>(html[name_end])) || html[name_end] == '-')) {
            ++name_end;
        }
        if (name_end == name_start) {
            if (html[name_start] == '!' || html[name_start] == '?') {
                i = tag_end(html, i);  // doctype or processing instruction
            } else {
                raw.push_back(c);  // a stray '<' in text
                ++i;
            }
            continue;
        }
        std::string name(html.substr(name_start, name_end - name_start));
        std::transform(name.begin(), name.end(), name.begin(), lower);
        const auto end = tag_end(html, i);
        const bool self_closing = end >= 2 && html[end - 2] == '/';
        i = end;
        if (!closing && !self_closing && kSkipped.contains(name)) {
            // skip to the matching close tag
            const std::string close = "</" + name;
            std::size_t j = i;
            while (j < html.size() && !(html[j] == '<' && iequals_at(html, j, close))) ++j;
            i = j < html.size() ? tag_end(html, j) : html.size();
            continue;
        }
        if (kBlock.contains(name)) raw.push_back('\n');
    }
    return finish_lines(raw);
}

}  // namespace diverge
