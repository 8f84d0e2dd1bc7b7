// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Diverge Authors

#include "diverge/dataset.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <iterator>
#include <random>

#include "json.hpp"

#include "diverge/core.hpp"
#include "diverge/errors.hpp"

namespace diverge {

namespace {

std::vector<std::string> categories_of(const nlohmann::json& j) {
    std::vector<std::string> out;
    if (j.is_string()) {
        std::string_view s = j.get_ref<const std::string&>();
        std::size_t pos = 0;
        while (pos <= s.size()) {
            const auto next = s.find(';', pos);
            const auto part = trim(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
            if (!part.empty()) out.push_back(part);
            if (next == std::string_view::npos) break;
            pos = next + 1;
        }
    } else if (j.is_array()) {
        for (const auto& c : j) {
            if (!c.is_string()) throw ParseError("category entries must be strings", j.dump());
            auto t = trim(c.get<std::string>());
            if (!t.empty()) out.push_back(std::move(t));
        }
    } else if (!j.is_null()) {
        throw ParseError("categories must be a list or a string", j.dump());
    }
    return out;
}

std::string first_user_turn(const nlohmann::json& turns) {
    if (!turns.is_array()) return {};
    for (const auto& t : turns) {
        if (t.is_object() && t.value("role", std::string{}) == "user" && t.contains("content") &&
            t.at("content").is_string()) {
            return t.at("content").get<std::string>();
        }
    }
    return {};
}

}  // namespace

DatasetRecord parse_dataset_record(std::string_view line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what(), std::string(line));
    }
    if (!j.is_object()) throw ParseError("record is not an object", std::string(line));
    DatasetRecord r;
    if (auto it = j.find("prompt"); it != j.end() && it->is_string()) {
        r.prompt = it->get<std::string>();
    } else if (auto c = j.find("conversation"); c != j.end()) {
        r.prompt = first_user_turn(*c);
    } else if (auto m = j.find("messages"); m != j.end()) {
        r.prompt = first_user_turn(*m);
    }
    if (trim(r.prompt).empty()) throw ParseError("record has no prompt", std::string(line));
    if (auto it = j.find("categories"); it != j.end()) {
        r.categories = categories_of(*it);
    } else if (auto c = j.find("category"); c != j.end()) {
        r.categories = categories_of(*c);
    }
    return r;
}

const std::set<std::string>& default_allowed_categories() {
    static const std::set<std::string> allowed = {
        "Problem Solving",
        "Decision Support",
        "Concept Explanations",
        "Skill Development",
        "Recommendations",
        "Opinion-Based Questions",
        "Value-Laden Questions",
        "Controversial Questions",
        "Ideation and Brainstorming",
        "Personal Advice",
    };
    return allowed;
}

FilterStats filter_dataset(std::istream& in, std::ostream& out, const std::set<std::string>& allowed,
                           std::size_t budget) {
    FilterStats stats;
    std::string line;
    std::size_t lineno = 0;
    while (stats.kept < budget && std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        ++stats.read;
        DatasetRecord r;
        try {
            r = parse_dataset_record(line);
        } catch (const ParseError& e) {
            ++stats.malformed;
            spdlog::warn("line {}: skipped ({})", lineno, e.what());
            continue;
        }
        const bool subset = std::all_of(r.categories.begin(), r.categories.end(),
                                        [&](const std::string& c) { return allowed.count(c) > 0; });
        if (!subset) {
            ++stats.rejected;
            continue;
        }
        out << nlohmann::json{{"prompt", r.prompt}, {"categories", r.categories}}.dump() << '\n';
        ++stats.kept;
    }
    return stats;
}

std::vector<std::string> sample_prompts(const std::vector<std::string>& prompts, std::size_t n,
                                        std::uint64_t seed) {
    if (n > prompts.size()) {
        throw ContractError("cannot sample " + std::to_string(n) + " of " + std::to_string(prompts.size()) +
                            " records");
    }
    std::vector<std::string> out;
    out.reserve(n);
    std::mt19937_64 rng(seed);
    std::sample(prompts.begin(), prompts.end(), std::back_inserter(out), n, rng);
    return out;
}

std::string encode_query_line(const std::string& query) {
    const bool plain = query.find_first_of("\r\n") == std::string::npos && !query.empty() && query.front() != '"' &&
                       query.front() != '{' && trim(query) == query;
    return plain ? query : nlohmann::json(query).dump();
}

std::string decode_query_line(std::string_view line) {
    const auto t = trim(line);
    if (t.empty()) return {};
    if (t.front() == '"' || t.front() == '{') {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(t);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("invalid query line: ") + e.what(), t);
        }
        if (j.is_string()) return j.get<std::string>();
        if (j.is_object()) {
            for (const char* key : {"prompt", "query"}) {
                if (auto it = j.find(key); it != j.end() && it->is_string()) return it->get<std::string>();
            }
        }
        throw ParseError("query line has no prompt", t);
    }
    return t;
}

std::vector<std::string> read_query_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read query file " + path.string());
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        auto q = decode_query_line(line);
        if (!trim(q).empty()) out.push_back(std::move(q));
    }
    return out;
}

}  // namespace diverge
