// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Diverge Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "diverge/core.hpp"
#include "diverge/prompts.hpp"
#include "diverge/providers.hpp"
#include "diverge/websearch.hpp"

namespace diverge {

/// One canned reply rule of a scripted model. `match` is a request tag or a
/// prompt substring. Without `cycle` the responses are served once each;
/// with it they repeat forever. "{n}" in a response expands to the rule's
/// 0-based call count.
struct ScriptRule {
    std::string match;
    std::vector<std::string> responses;
    bool cycle = false;
};

struct ChatSettings {
    std::string kind = "openai";  // openai | scripted
    std::vector<ScriptRule> script;
    std::optional<std::string> script_default;
    std::string api_base;
    std::string model;
    std::optional<int> max_tokens;
};

struct EmbedderSettings {
    std::string kind = "hash";  // hash | openai
    std::size_t dimension = 64;
    std::string model;
};

struct SearchSettings {
    std::string kind = "duckduckgo";  // duckduckgo | fixture
    std::optional<std::filesystem::path> fixture;
};

/// Everything a CLI run needs. Loaded from JSON; unknown keys are rejected
/// at every level and relative paths resolve against the config file.
struct CliConfig {
    RunConfig run;
    ChatSettings llm;
    /// Judge and claim extractor for `evaluate`; defaults to `llm`.
    std::optional<ChatSettings> judge;
    EmbedderSettings embedder;
    SearchSettings search;
    std::optional<std::filesystem::path> cache_dir;
    std::optional<std::filesystem::path> templates_dir;
    std::filesystem::path out = "out";
    int parallelism = 4;
    std::uint64_t seed = 0;
    double delay_min_seconds = 1.0;
    double delay_max_seconds = 3.0;
    std::string config_name;

    static CliConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
    static CliConfig load(const std::filesystem::path& path);

    /// Throws ConfigError on any invalid field.
    void validate() const;
};

std::unique_ptr<ChatModel> make_chat(const ChatSettings& settings);
std::unique_ptr<Embedder> make_embedder(const EmbedderSettings& settings);
PromptLibrary make_prompts(const CliConfig& config);

/// Scripted model built from rules; see ScriptRule.
std::unique_ptr<ScriptedChat> make_scripted_chat(const std::vector<ScriptRule>& rules,
                                                 const std::optional<std::string>& fallback);

}  // namespace diverge
