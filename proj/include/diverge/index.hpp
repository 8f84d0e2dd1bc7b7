// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Diverge Authors

#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "diverge/embedding.hpp"
#include "diverge/providers.hpp"
#include "diverge/websearch.hpp"

namespace diverge {

class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual std::vector<std::string> tokenize(std::string_view text) const = 0;
    virtual std::string detokenize(std::span<const std::string> tokens) const = 0;
};

/// Whitespace-delimited tokens, re-joined with single spaces.
class WhitespaceTokenizer final : public Tokenizer {
public:
    std::vector<std::string> tokenize(std::string_view text) const override;
    std::string detokenize(std::span<const std::string> tokens) const override;
};

const Tokenizer& default_tokenizer();

/// Half-open token range [start, end).
struct TokenWindow {
    int start = 0;
    int end = 0;

    friend bool operator==(const TokenWindow&, const TokenWindow&) = default;
};

/// Sliding windows over n tokens: starts advance by (size - overlap), the last
/// window ends at n and may be shorter. n == 0 yields no windows.
std::vector<TokenWindow> chunk_windows(int n_tokens, int size, int overlap);

struct Chunk {
    std::string doc_url;
    std::string text;
    int token_start = 0;
    int token_end = 0;
    Embedding embedding;
};

struct ScoredChunk {
    Chunk chunk;
    double relevance = 0.0;
};

/// Splits `text` into token windows. Embeddings are left empty.
std::vector<Chunk> chunk_text(std::string_view text, int size = 512, int overlap = 50,
                              const Tokenizer& tokenizer = default_tokenizer(),
                              const std::string& doc_url = {});

struct ChunkingOptions {
    int size = 512;
    int overlap = 50;
    std::shared_ptr<const Tokenizer> tokenizer;
};

/// Exact in-memory vector index over embedded chunks. Immutable once built.
class VectorIndex {
public:
    /// Chunks and embeds every document. Throws ContractError on an empty
    /// document list; embedder errors propagate.
    static VectorIndex build(const std::vector<WebDocument>& docs, Embedder& embedder,
                             const ChunkingOptions& options = {});

    /// Index over pre-embedded chunks (all unit-norm, same dimension).
    static VectorIndex from_chunks(std::vector<Chunk> chunks);

    /// The `pool` most relevant chunks by cosine similarity, descending; ties
    /// keep insertion order.
    std::vector<ScoredChunk> top_candidates(const Embedding& query, int pool = 20) const;

    const std::vector<Chunk>& chunks() const noexcept { return chunks_; }
    std::size_t size() const noexcept { return chunks_.size(); }
    std::size_t dimension() const noexcept { return dimension_; }

    /// {"dimension": d, "chunks": [{"url","token_start","token_end","text","embedding"}]}
    nlohmann::json dump() const;

private:
    std::vector<Chunk> chunks_;
    std::size_t dimension_ = 0;
};

}  // namespace diverge
