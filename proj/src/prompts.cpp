// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Diverge Authors

#include "diverge/prompts.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "diverge/errors.hpp"

namespace diverge {

// Generated from templates/*.txt at configure time.
std::string_view embedded_prompt(std::string_view name);

std::string_view to_string(PromptName name) {
    switch (name) {
        case PromptName::summary: return "summary";
        case PromptName::reflection: return "reflection";
        case PromptName::query_gen: return "query_gen";
        case PromptName::rag_answer: return "rag_answer";
        case PromptName::refine_with_view: return "refine_with_view";
        case PromptName::refine_without_view: return "refine_without_view";
        case PromptName::baseline_list: return "baseline_list";
        case PromptName::verbalized: return "verbalized";
        case PromptName::multi_query: return "multi_query";
        case PromptName::claim_extraction: return "claim_extraction";
        case PromptName::quality_judge: return "quality_judge";
    }
    return "unknown";
}

PromptTemplate::PromptTemplate(PromptName name, std::string body) : name_(name), body_(std::move(body)) {}

namespace {

/// Length of the placeholder identifier at body[pos] (just after '{'), or 0.
std::size_t ident_length(std::string_view body, std::size_t pos) {
    std::size_t n = 0;
    while (pos + n < body.size() &&
           (std::isalnum(static_cast<unsigned char>(body[pos + n])) || body[pos + n] == '_')) {
        ++n;
    }
    if (n == 0 || pos + n >= body.size() || body[pos + n] != '}') return 0;
    return n;
}

}  // namespace

std::vector<std::string> PromptTemplate::placeholders() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < body_.size(); ++i) {
        if (body_.compare(i, 2, "{{") == 0 || body_.compare(i, 2, "}}") == 0) {
            ++i;
            continue;
        }
        if (body_[i] != '{') continue;
        if (const auto n = ident_length(body_, i + 1)) {
            std::string name = body_.substr(i + 1, n);
            if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(std::move(name));
            i += n + 1;
        }
    }
    return out;
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& values) const {
    std::string out;
    out.reserve(body_.size() * 2);
    for (std::size_t i = 0; i < body_.size(); ++i) {
        if (body_.compare(i, 2, "{{") == 0 || body_.compare(i, 2, "}}") == 0) {
            out.push_back(body_[i]);
            ++i;
            continue;
        }
        if (body_[i] == '{') {
            if (const auto n = ident_length(body_, i + 1)) {
                const auto name = body_.substr(i + 1, n);
                auto it = values.find(name);
                if (it == values.end()) {
                    throw ContractError("prompt '" + std::string(to_string(name_)) +
                                        "' has unfilled placeholder {" + name + "}");
                }
                out += it->second;
                i += n + 1;
                continue;
            }
        }
        out.push_back(body_[i]);
    }
    return out;
}

const PromptLibrary& PromptLibrary::defaults() {
    static const PromptLibrary lib = [] {
        PromptLibrary l;
        for (auto name : kAllPrompts) {
            const auto body = embedded_prompt(to_string(name));
            if (body.empty()) throw Error("missing embedded prompt " + std::string(to_string(name)));
            l.templates_.emplace(name, PromptTemplate(name, std::string(body)));
        }
        return l;
    }();
    return lib;
}

PromptLibrary PromptLibrary::load(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw ConfigError("templates directory not found: " + dir.string());
    PromptLibrary lib = defaults();
    for (auto name : kAllPrompts) {
        const auto path = dir / (std::string(to_string(name)) + ".txt");
        std::ifstream in(path);
        if (!in) continue;
        std::stringstream ss;
        ss << in.rdbuf();
        spdlog::debug("prompt {} overridden from {}", to_string(name), path.string());
        lib.templates_.insert_or_assign(name, PromptTemplate(name, ss.str()));
    }
    return lib;
}

const PromptTemplate& PromptLibrary::get(PromptName name) const { return templates_.at(name); }

}  // namespace diverge
