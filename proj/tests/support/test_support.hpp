// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Diverge Authors

// Shared doubles for engine, metrics and acceptance tests.

#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "diverge/engine.hpp"
#include "diverge/providers.hpp"
#include "diverge/websearch.hpp"

namespace testing {

using namespace diverge;

/// Text between `start` and the next blank line (or the end).
inline std::string section(const std::string& prompt, const std::string& start) {
    const auto b = prompt.find(start);
    if (b == std::string::npos) return {};
    const auto from = b + start.size();
    const auto e = prompt.find("\n\n", from);
    return prompt.substr(from, e == std::string::npos ? std::string::npos : e - from);
}

/// Text between `start` and the next `stop`.
inline std::string between(const std::string& prompt, const std::string& start, const std::string& stop) {
    const auto b = prompt.find(start);
    if (b == std::string::npos) return {};
    const auto from = b + start.size();
    const auto e = prompt.find(stop, from);
    return prompt.substr(from, e == std::string::npos ? std::string::npos : e - from);
}

/// Synthesizes two long documents per query and counts calls.
class StubRetriever final : public DocumentRetriever {
public:
    RetrievalResult retrieve(const std::string& query, int n) override {
        std::lock_guard lock(mutex_);
        queries_.push_back(query);
        RetrievalResult r;
        if (empty_for_.count(query)) return r;
        for (int d = 0; d < std::min(n, 2); ++d) {
            std::string text;
            for (int w = 0; w < 60; ++w) text += "word" + std::to_string((w * 7 + d) % 23) + " " + query + " ";
            r.documents.push_back(WebDocument::make("https://docs.example/" + std::to_string(queries_.size()) + "/" +
                                                        std::to_string(d),
                                                    text, "2026-01-01T00:00:00Z"));
        }
        return r;
    }

    void empty_for(const std::string& query) { empty_for_.insert(query); }
    std::size_t calls() const {
        std::lock_guard lock(mutex_);
        return queries_.size();
    }
    std::vector<std::string> queries() const {
        std::lock_guard lock(mutex_);
        return queries_;
    }

private:
    mutable std::mutex mutex_;
    std::vector<std::string> queries_;
    std::set<std::string> empty_for_;
};

inline const std::vector<std::string>& topic_words() {
    static const std::vector<std::string> words = {
        "economics budget market pricing inflation",  "ecology climate forest river wildlife",
        "history empire archive medieval dynasty",    "medicine clinic patient therapy vaccine",
        "engineering bridge circuit turbine voltage", "psychology emotion habit memory motivation",
        "law contract court statute liability",       "music rhythm melody orchestra harmony",
        "sport training stamina coach tournament",    "cooking recipe spice oven flavor",
        "education school teacher curriculum exam",   "travel passport airline hotel itinerary",
    };
    return words;
}

/// Scripted model covering every template the engine and evaluator use.
/// Iterative-strategy answers follow the viewpoint in the prompt, so each
/// iteration talks about a different topic; closed-book answers are all
/// the same sentence.
inline std::unique_ptr<ScriptedChat> pipeline_chat() {
    auto chat = std::make_unique<ScriptedChat>();
    auto reflections = std::make_shared<std::atomic<int>>(0);
    chat->always("summary", [](const ChatRequest&) {
        return R"({"views":[{"label":"Initial Framing View","description":"The first answer's framing."}]})";
    });
    chat->always("reflection", [reflections](const ChatRequest&) {
        const int n = ++*reflections;
        const auto& words = topic_words();
        const auto topic = words[static_cast<std::size_t>(n) % words.size()];
        return nlohmann::json{{"label", "Topic " + std::to_string(n) + " Lens"}, {"description", topic}}.dump();
    });
    chat->always("query_gen", [](const ChatRequest& r) {
        return nlohmann::json{{"question", "How does " + section(r.prompt, "Answer:\n") + " matter?"}}.dump();
    });
    chat->always("rag_answer", [](const ChatRequest& r) {
        const auto view = between(r.prompt, "Perspective to prioritize:\n", "\n");
        if (view.empty()) return std::string("A general overview touching many common themes at once.");
        return "Seen through " + view + " the answer centers on " + view.substr(view.find(':') + 1) + ".";
    });
    chat->always("refine_without_view", [](const ChatRequest& r) { return section(r.prompt, "Original answer:\n"); });
    chat->always("refine_with_view", [](const ChatRequest& r) { return section(r.prompt, "Original answer:\n"); });
    chat->always("baseline_list", [](const ChatRequest& r) {
        const auto k = std::stoi(between(r.prompt, "EXACTLY ", " answers"));
        std::vector<std::string> answers(static_cast<std::size_t>(k), "The usual common answer to this question.");
        return nlohmann::json{{"answers", answers}}.dump();
    });
    chat->always("claim_extraction", [](const ChatRequest& r) {
        return nlohmann::json{{"claims", {section(r.prompt, "Answer:\n")}}}.dump();
    });
    chat->always("quality_judge", [](const ChatRequest&) { return R"({"verdict":"Excellent","reason":"NONE"})"; });
    return chat;
}

inline RunConfig small_config(Strategy s, int k) {
    RunConfig c;
    c.strategy = s;
    c.k = k;
    return c;
}

}  // namespace testing
