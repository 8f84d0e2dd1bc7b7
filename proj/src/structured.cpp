// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Diverge Authors

#include "diverge/structured.hpp"

#include <algorithm>

#include "diverge/core.hpp"

namespace diverge {

namespace {

constexpr std::pair<Schema, std::string_view> kSchemaNames[] = {
    {Schema::views, "views"},
    {Schema::view, "view"},
    {Schema::claims, "claims"},
    {Schema::verdict, "verdict"},
    {Schema::answers, "answers"},
    {Schema::answers_with_prob, "answers_with_prob"},
    {Schema::queries, "queries"},
    {Schema::single_question, "single_question"},
};

constexpr std::pair<Verdict, std::string_view> kVerdictNames[] = {
    {Verdict::Excellent, "Excellent"},
    {Verdict::Good, "Good"},
    {Verdict::Fair, "Fair"},
    {Verdict::Poor, "Poor"},
    {Verdict::Irrelevant, "Irrelevant"},
};

[[noreturn]] void fail(const std::string& what, std::string_view raw) {
    throw ParseError(what, std::string(raw));
}

/// Index one past the end of the balanced value starting at `start`, or npos.
std::size_t balanced_end(std::string_view s, std::size_t start) {
    std::vector<char> stack;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < s.size(); ++i) {
        const char c = s[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        switch (c) {
            case '"': in_string = true; break;
            case '{': stack.push_back('}'); break;
            case '[': stack.push_back(']'); break;
            case '}':
            case ']':
                if (stack.empty() || stack.back() != c) return std::string_view::npos;
                stack.pop_back();
                if (stack.empty()) return i + 1;
                break;
            default: break;
        }
    }
    return std::string_view::npos;
}

std::string_view strip_fence(std::string_view raw) {
    const auto open = raw.find("```");
    if (open == std::string_view::npos) return raw;
    auto body_start = raw.find('\n', open);
    if (body_start == std::string_view::npos) return raw;
    ++body_start;
    const auto close = raw.find("```", body_start);
    if (close == std::string_view::npos) return raw.substr(body_start);
    return raw.substr(body_start, close - body_start);
}

std::optional<nlohmann::json> first_value(std::string_view s) {
    for (std::size_t i = s.find_first_of("{["); i != std::string_view::npos;
         i = s.find_first_of("{[", i + 1)) {
        const auto end = balanced_end(s, i);
        if (end == std::string_view::npos) continue;
        auto parsed = nlohmann::json::parse(s.substr(i, end - i), nullptr, false);
        if (!parsed.is_discarded()) return parsed;
    }
    return std::nullopt;
}

const nlohmann::json& require_object_field(const nlohmann::json& j, const char* key,
                                           std::string_view raw) {
    if (!j.is_object()) fail(std::string("expected a JSON object with '") + key + "'", raw);
    auto it = j.find(key);
    if (it == j.end()) fail(std::string("missing field '") + key + "'", raw);
    return *it;
}

std::vector<std::string> string_list(const nlohmann::json& arr, const char* what,
                                     std::string_view raw, bool allow_empty_items) {
    if (!arr.is_array()) fail(std::string(what) + " must be an array", raw);
    std::vector<std::string> out;
    for (const auto& item : arr) {
        if (!item.is_string()) fail(std::string(what) + " items must be strings", raw);
        auto text = trim(item.get<std::string>());
        if (text.empty() && !allow_empty_items) fail(std::string(what) + " contains an empty item", raw);
        out.push_back(std::move(text));
    }
    return out;
}

ParsedView view_from(const nlohmann::json& j, std::string_view raw) {
    if (!j.is_object()) fail("view must be an object", raw);
    auto label = j.find("label");
    auto desc = j.find("description");
    if (label == j.end() || !label->is_string() || desc == j.end() || !desc->is_string()) {
        fail("view needs string 'label' and 'description'", raw);
    }
    ParsedView v{trim(label->get<std::string>()), trim(desc->get<std::string>())};
    if (v.label.empty() || v.description.empty()) fail("view label/description is empty", raw);
    return v;
}

}  // namespace

std::string_view to_string(Schema s) {
    for (const auto& [schema, name] : kSchemaNames) {
        if (schema == s) return name;
    }
    return "unknown";
}

Schema schema_from_string(std::string_view name) {
    for (const auto& [schema, n] : kSchemaNames) {
        if (n == name) return schema;
    }
    throw ContractError("unknown schema '" + std::string(name) + "'");
}

std::string_view to_string(Verdict v) {
    for (const auto& [verdict, name] : kVerdictNames) {
        if (verdict == v) return name;
    }
    return "unknown";
}

std::optional<Verdict> verdict_from_string(std::string_view name) {
    for (const auto& [verdict, n] : kVerdictNames) {
        if (n == name) return verdict;
    }
    return std::nullopt;
}

int verdict_score(Verdict v) {
    switch (v) {
        case Verdict::Excellent: return 5;
        case Verdict::Good: return 4;
        case Verdict::Fair: return 3;
        case Verdict::Poor: return 2;
        case Verdict::Irrelevant: return 1;
    }
    return 1;
}

nlohmann::json extract_json(std::string_view raw) {
    if (auto v = first_value(strip_fence(raw))) return *v;
    if (auto v = first_value(raw)) return *v;
    fail("no parseable JSON value in model output", raw);
}

std::vector<ParsedView> parse_views(std::string_view raw) {
    auto j = extract_json(raw);
    if (j.is_object() && j.contains("views")) j = j["views"];
    if (j.is_object()) return {view_from(j, raw)};
    if (!j.is_array()) fail("views must be a JSON array", raw);
    std::vector<ParsedView> out;
    for (const auto& item : j) out.push_back(view_from(item, raw));
    return out;
}

ParsedView parse_view(std::string_view raw) {
    auto j = extract_json(raw);
    if (j.is_array()) {
        if (j.size() != 1) fail("expected exactly one view, got " + std::to_string(j.size()), raw);
        j = j[0];
    }
    return view_from(j, raw);
}

std::vector<std::string> parse_claims(std::string_view raw) {
    const auto j = extract_json(raw);
    return string_list(require_object_field(j, "claims", raw), "claims", raw, false);
}

ParsedVerdict parse_verdict(std::string_view raw) {
    const auto j = extract_json(raw);
    const auto& v = require_object_field(j, "verdict", raw);
    if (!v.is_string()) fail("verdict must be a string", raw);
    auto verdict = verdict_from_string(trim(v.get<std::string>()));
    if (!verdict) fail("verdict '" + v.get<std::string>() + "' is not one of the five levels", raw);
    ParsedVerdict out{*verdict, ""};
    if (auto r = j.find("reason"); r != j.end() && r->is_string()) out.reason = trim(r->get<std::string>());
    return out;
}

std::vector<std::string> parse_answers(std::string_view raw) {
    auto j = extract_json(raw);
    const auto& arr = j.is_array() ? j : require_object_field(j, "answers", raw);
    return string_list(arr, "answers", raw, false);
}

std::vector<ProbableAnswer> parse_answers_with_prob(std::string_view raw) {
    auto j = extract_json(raw);
    const auto& arr = j.is_array() ? j : require_object_field(j, "answers", raw);
    if (!arr.is_array()) fail("answers must be an array", raw);
    std::vector<ProbableAnswer> out;
    for (const auto& item : arr) {
        if (!item.is_object()) fail("answer items must be objects", raw);
        auto text = item.find("text");
        auto prob = item.find("probability");
        if (text == item.end() || !text->is_string()) fail("answer item needs a string 'text'", raw);
        if (prob == item.end() || !prob->is_number()) fail("answer item needs a numeric 'probability'", raw);
        const double p = prob->get<double>();
        if (!(p >= 0.0 && p <= 1.0)) fail("probability " + std::to_string(p) + " outside [0,1]", raw);
        auto t = trim(text->get<std::string>());
        if (t.empty()) fail("answer text is empty", raw);
        out.push_back({std::move(t), p});
    }
    return out;
}

std::vector<std::string> parse_queries(std::string_view raw) {
    auto j = extract_json(raw);
    const auto& arr = j.is_array() ? j : require_object_field(j, "queries", raw);
    return string_list(arr, "queries", raw, false);
}

std::string parse_single_question(std::string_view raw) {
    const auto j = extract_json(raw);
    const auto& q = require_object_field(j, "question", raw);
    if (j.size() != 1) fail("question object must have exactly one field", raw);
    if (!q.is_string()) fail("'question' must be a single string", raw);
    auto text = trim(q.get<std::string>());
    if (text.empty()) fail("question is empty", raw);
    if (std::count(text.begin(), text.end(), '?') > 1) fail("more than one question generated", raw);
    return text;
}

StructuredValue parse_structured(std::string_view raw, Schema schema) {
    switch (schema) {
        case Schema::views: return parse_views(raw);
        case Schema::view: return parse_view(raw);
        case Schema::claims: return parse_claims(raw);
        case Schema::verdict: return parse_verdict(raw);
        case Schema::answers: return parse_answers(raw);
        case Schema::answers_with_prob: return parse_answers_with_prob(raw);
        case Schema::queries: return parse_queries(raw);
        case Schema::single_question: return parse_single_question(raw);
    }
    throw ContractError("unhandled schema");
}

}  // namespace diverge
