// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Diverge Authors

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

#include "diverge/errors.hpp"
#include "diverge/providers.hpp"

namespace diverge {

/// Output shapes the prompt templates ask the model for.
enum class Schema {
    views,             // [{"label","description"}, ...]
    view,              // {"label","description"}
    claims,            // {"claims": [str]}
    verdict,           // {"verdict": <Verdict>, "reason": str}
    answers,           // {"answers": [str]}
    answers_with_prob, // {"answers": [{"text", "probability"}]}
    queries,           // {"queries": [str]}
    single_question,   // {"question": str}
};

std::string_view to_string(Schema s);
Schema schema_from_string(std::string_view name);

struct ParsedView {
    std::string label;
    std::string description;

    friend bool operator==(const ParsedView&, const ParsedView&) = default;
};

enum class Verdict { Excellent, Good, Fair, Poor, Irrelevant };

std::string_view to_string(Verdict v);
std::optional<Verdict> verdict_from_string(std::string_view name);
/// Excellent=5 ... Irrelevant=1.
int verdict_score(Verdict v);

struct ParsedVerdict {
    Verdict verdict = Verdict::Irrelevant;
    std::string reason;

    friend bool operator==(const ParsedVerdict&, const ParsedVerdict&) = default;
};

struct ProbableAnswer {
    std::string text;
    double probability = 0.0;

    friend bool operator==(const ProbableAnswer&, const ProbableAnswer&) = default;
};

using StructuredValue = std::variant<std::vector<ParsedView>,   // views
                                     ParsedView,                // view
                                     std::vector<std::string>,  // claims, answers, queries
                                     ParsedVerdict,             // verdict
                                     std::vector<ProbableAnswer>,
                                     std::string>;              // single_question

/// Extracts the first JSON value from model output. One repair pass:
/// a fenced ``` block is preferred when present, then the first balanced
/// object or array is taken, ignoring surrounding prose.
/// Throws ParseError (carrying `raw`) when nothing parses.
nlohmann::json extract_json(std::string_view raw);

std::vector<ParsedView> parse_views(std::string_view raw);
ParsedView parse_view(std::string_view raw);
std::vector<std::string> parse_claims(std::string_view raw);
ParsedVerdict parse_verdict(std::string_view raw);
std::vector<std::string> parse_answers(std::string_view raw);
std::vector<ProbableAnswer> parse_answers_with_prob(std::string_view raw);
std::vector<std::string> parse_queries(std::string_view raw);
std::string parse_single_question(std::string_view raw);

StructuredValue parse_structured(std::string_view raw, Schema schema);

/// Asks `model` and parses the reply with `parse`. A ParseError triggers one
/// more identical request; a second ParseError propagates.
template <typename Parse>
auto ask_structured(ChatModel& model, const ChatRequest& request, Parse&& parse)
    -> decltype(parse(std::string_view{})) {
    const std::string first = model.chat(request);
    try {
        return parse(std::string_view(first));
    } catch (const ParseError&) {
        const std::string second = model.chat(request);
        return parse(std::string_view(second));
    }
}

}  // namespace diverge
