// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Diverge Authors

#include "diverge/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <map>
#include <set>

#include "diverge/errors.hpp"

namespace diverge {

namespace {

using nlohmann::json;

void require_object(const json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
    const std::set<std::string> allowed(known.begin(), known.end());
    for (const auto& [key, _] : j.items()) {
        if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

template <typename T>
void read(const json& j, const char* key, T& dst, const std::string& where) {
    if (auto it = j.find(key); it != j.end()) {
        try {
            it->get_to(dst);
        } catch (const json::exception& e) {
            throw ConfigError(where + "." + key + ": " + e.what());
        }
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

ChatSettings chat_from_json(const json& j, const std::filesystem::path& base, const std::string& where) {
    require_object(j, where);
    reject_unknown(j, {"kind", "script", "api_base", "model", "max_tokens"}, where);
    ChatSettings s;
    read(j, "kind", s.kind, where);
    read(j, "api_base", s.api_base, where);
    read(j, "model", s.model, where);
    if (j.contains("max_tokens")) {
        int mt = 0;
        read(j, "max_tokens", mt, where);
        s.max_tokens = mt;
    }
    if (s.kind == "scripted") {
        std::string script;
        read(j, "script", script, where);
        if (script.empty()) throw ConfigError(where + ": scripted models need a 'script' file");
        const auto path = resolve(base, script);
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot read chat script " + path.string());
        json doc;
        try {
            doc = json::parse(in);
        } catch (const json::exception& e) {
            throw ConfigError("chat script " + path.string() + ": " + e.what());
        }
        const std::string swhere = "script " + path.filename().string();
        require_object(doc, swhere);
        reject_unknown(doc, {"rules", "default"}, swhere);
        for (const auto& r : doc.value("rules", json::array())) {
            require_object(r, swhere + " rule");
            reject_unknown(r, {"match", "responses", "cycle"}, swhere + " rule");
            ScriptRule rule;
            read(r, "match", rule.match, swhere);
            read(r, "responses", rule.responses, swhere);
            read(r, "cycle", rule.cycle, swhere);
            if (rule.match.empty()) throw ConfigError(swhere + ": rule without 'match'");
            if (rule.responses.empty()) throw ConfigError(swhere + ": rule '" + rule.match + "' has no responses");
            s.script.push_back(std::move(rule));
        }
        if (doc.contains("default")) {
            std::string d;
            read(doc, "default", d, swhere);
            s.script_default = d;
        }
    } else if (s.kind != "openai") {
        throw ConfigError(where + ".kind must be 'openai' or 'scripted', got '" + s.kind + "'");
    }
    return s;
}

std::string expand_counter(const std::string& text, std::size_t n) {
    std::string out;
    const std::string token = "{n}";
    std::size_t pos = 0;
    while (true) {
        const auto hit = text.find(token, pos);
        if (hit == std::string::npos) break;
        out.append(text, pos, hit - pos);
        out += std::to_string(n);
        pos = hit + token.size();
    }
    out.append(text, pos, std::string::npos);
    return out;
}

}  // namespace

CliConfig CliConfig::from_json(const json& j, const std::filesystem::path& base_dir) {
    const std::string where = "config";
    require_object(j, where);
    reject_unknown(j,
                   {"k", "final_top_k", "candidate_pool", "alpha", "beta", "chunk_size_tokens",
                    "chunk_overlap_tokens", "min_doc_chars", "web_docs_per_query", "tau", "strategy", "llm",
                    "judge", "embedder", "search", "cache_dir", "templates_dir", "out", "parallelism", "seed",
                    "rate_delay", "config_name"},
                   where);
    CliConfig c;
    try {
        c.run = j.get<RunConfig>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (j.contains("llm")) c.llm = chat_from_json(j.at("llm"), base_dir, "llm");
    if (j.contains("judge")) c.judge = chat_from_json(j.at("judge"), base_dir, "judge");
    if (auto it = j.find("embedder"); it != j.end()) {
        require_object(*it, "embedder");
        reject_unknown(*it, {"kind", "dimension", "model"}, "embedder");
        read(*it, "kind", c.embedder.kind, "embedder");
        read(*it, "dimension", c.embedder.dimension, "embedder");
        read(*it, "model", c.embedder.model, "embedder");
    }
    if (auto it = j.find("search"); it != j.end()) {
        require_object(*it, "search");
        reject_unknown(*it, {"kind", "fixture"}, "search");
        read(*it, "kind", c.search.kind, "search");
        if (it->contains("fixture")) c.search.fixture = resolve(base_dir, it->at("fixture").get<std::string>());
    }
    if (j.contains("cache_dir")) c.cache_dir = resolve(base_dir, j.at("cache_dir").get<std::string>());
    if (j.contains("templates_dir")) c.templates_dir = resolve(base_dir, j.at("templates_dir").get<std::string>());
    if (j.contains("out")) c.out = resolve(base_dir, j.at("out").get<std::string>());
    read(j, "parallelism", c.parallelism, where);
    read(j, "seed", c.seed, where);
    read(j, "config_name", c.config_name, where);
    if (auto it = j.find("rate_delay"); it != j.end()) {
        require_object(*it, "rate_delay");
        reject_unknown(*it, {"min", "max"}, "rate_delay");
        read(*it, "min", c.delay_min_seconds, "rate_delay");
        read(*it, "max", c.delay_max_seconds, "rate_delay");
    }
    c.validate();
    return c;
}

CliConfig CliConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config file " + path.string() + ": " + e.what());
    }
    return from_json(j, path.parent_path());
}

void CliConfig::validate() const {
    run.validate();
    if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
    if (!(delay_min_seconds >= 0.0 && delay_max_seconds >= delay_min_seconds)) {
        throw ConfigError("rate_delay needs 0 <= min <= max");
    }
    if (embedder.kind != "hash" && embedder.kind != "openai") {
        throw ConfigError("embedder.kind must be 'hash' or 'openai', got '" + embedder.kind + "'");
    }
    if (embedder.dimension == 0) throw ConfigError("embedder.dimension must be positive");
    if (search.kind == "fixture") {
        if (!search.fixture) throw ConfigError("search.kind 'fixture' needs search.fixture");
    } else if (search.kind != "duckduckgo") {
        throw ConfigError("search.kind must be 'duckduckgo' or 'fixture', got '" + search.kind + "'");
    }
}

std::unique_ptr<ScriptedChat> make_scripted_chat(const std::vector<ScriptRule>& rules,
                                                 const std::optional<std::string>& fallback) {
    auto chat = std::make_unique<ScriptedChat>();
    for (const auto& rule : rules) {
        const bool counted = std::any_of(rule.responses.begin(), rule.responses.end(),
                                         [](const std::string& r) { return r.find("{n}") != std::string::npos; });
        if (rule.cycle || counted) {
            auto counter = std::make_shared<std::size_t>(0);
            auto responses = rule.responses;
            const bool cycle = rule.cycle;
            // The counter lives behind ScriptedChat's own lock.
            chat->always(rule.match, [counter, responses, cycle](const ChatRequest&) {
                const std::size_t n = (*counter)++;
                if (!cycle && n >= responses.size()) {
                    throw ProviderError("scripted responses exhausted", false);
                }
                return expand_counter(responses[n % responses.size()], n);
            });
        } else {
            chat->enqueue(rule.match, rule.responses);
        }
    }
    if (fallback) {
        const std::string text = *fallback;
        chat->fallback([text](const ChatRequest&) { return text; });
    }
    return chat;
}

std::unique_ptr<ChatModel> make_chat(const ChatSettings& settings) {
    if (settings.kind == "scripted") return make_scripted_chat(settings.script, settings.script_default);
    auto ps = ProviderSettings::from_env();
    if (!settings.api_base.empty()) ps.api_base = settings.api_base;
    if (!settings.model.empty()) ps.chat_model = settings.model;
    ps.max_tokens = settings.max_tokens;
    if (ps.api_key.empty()) throw ConfigError("DIVERGE_API_KEY is not set");
    return std::make_unique<OpenAiChat>(ps);
}

std::unique_ptr<Embedder> make_embedder(const EmbedderSettings& settings) {
    if (settings.kind == "hash") return std::make_unique<HashEmbedder>(settings.dimension);
    auto ps = ProviderSettings::from_env();
    if (!settings.model.empty()) ps.embed_model = settings.model;
    if (ps.api_key.empty()) throw ConfigError("DIVERGE_API_KEY is not set");
    return std::make_unique<OpenAiEmbedder>(ps, settings.dimension);
}

PromptLibrary make_prompts(const CliConfig& config) {
    return config.templates_dir ? PromptLibrary::load(*config.templates_dir) : PromptLibrary::defaults();
}

}  // namespace diverge
