// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Diverge Authors

#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace diverge {

enum class PromptName {
    summary,
    reflection,
    query_gen,
    rag_answer,
    refine_with_view,
    refine_without_view,
    baseline_list,
    verbalized,
    multi_query,
    claim_extraction,
    quality_judge,
};

inline constexpr std::array kAllPrompts = {
    PromptName::summary,          PromptName::reflection,          PromptName::query_gen,
    PromptName::rag_answer,       PromptName::refine_with_view,    PromptName::refine_without_view,
    PromptName::baseline_list,    PromptName::verbalized,          PromptName::multi_query,
    PromptName::claim_extraction, PromptName::quality_judge,
};

std::string_view to_string(PromptName name);

/// Template text with `{NAME}` placeholders; `{{` and `}}` render as literal
/// braces.
class PromptTemplate {
public:
    PromptTemplate(PromptName name, std::string body);

    PromptName name() const noexcept { return name_; }
    const std::string& body() const noexcept { return body_; }

    /// Placeholder names in order of first appearance.
    std::vector<std::string> placeholders() const;

    /// Throws ContractError if any placeholder has no value.
    std::string render(const std::map<std::string, std::string>& values) const;

private:
    PromptName name_;
    std::string body_;
};

/// All templates by name. Defaults are compiled in from templates/*.txt; a
/// directory can override any subset (files named <prompt>.txt).
class PromptLibrary {
public:
    static const PromptLibrary& defaults();
    static PromptLibrary load(const std::filesystem::path& dir);

    const PromptTemplate& get(PromptName name) const;

private:
    std::map<PromptName, PromptTemplate> templates_;
};

}  // namespace diverge
