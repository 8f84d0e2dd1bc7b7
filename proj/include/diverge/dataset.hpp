// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Diverge Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace diverge {

struct DatasetRecord {
    std::string prompt;
    std::vector<std::string> categories;
};

/// Parses one JSONL line. The prompt comes from a "prompt" field or from the
/// first user turn of a "conversation"/"messages" list; categories come
/// from "categories" or "category", either a list or a ';'-separated string.
/// Throws ParseError on malformed lines or a missing prompt.
DatasetRecord parse_dataset_record(std::string_view line);

/// The ten default categories accepted by the filter.
const std::set<std::string>& default_allowed_categories();

struct FilterStats {
    std::size_t read = 0;
    std::size_t kept = 0;
    std::size_t rejected = 0;
    std::size_t malformed = 0;
};

/// Keeps records whose categories are all in `allowed`, in input order,
/// stopping after `budget` records. Writes {"prompt","categories"} JSONL.
FilterStats filter_dataset(std::istream& in, std::ostream& out, const std::set<std::string>& allowed,
                           std::size_t budget = 200);

/// Seeded uniform sample of `n` items without replacement, in input order.
std::vector<std::string> sample_prompts(const std::vector<std::string>& prompts, std::size_t n,
                                        std::uint64_t seed);

/// Query files hold one query per line. Lines starting with '"' are JSON
/// strings (used when a query spans lines); lines starting with '{' are
/// objects with a "prompt" or "query" field; anything else is raw text.
/// Blank lines are ignored.
std::vector<std::string> read_query_file(const std::filesystem::path& path);
std::string encode_query_line(const std::string& query);
std::string decode_query_line(std::string_view line);

}  // namespace diverge
