// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Diverge Authors

#include "diverge/index.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "diverge/core.hpp"
#include "diverge/errors.hpp"

namespace diverge {

std::vector<std::string> WhitespaceTokenizer::tokenize(std::string_view text) const {
    return split_whitespace(text);
}

std::string WhitespaceTokenizer::detokenize(std::span<const std::string> tokens) const {
    std::string out;
    for (const auto& t : tokens) {
        if (!out.empty()) out.push_back(' ');
        out += t;
    }
    return out;
}

const Tokenizer& default_tokenizer() {
    static const WhitespaceTokenizer tokenizer;
    return tokenizer;
}

std::vector<TokenWindow> chunk_windows(int n_tokens, int size, int overlap) {
    if (size < 1) throw ContractError("chunk size must be >= 1");
    if (overlap < 0 || overlap >= size) throw ContractError("chunk overlap must be in [0, size)");
    if (n_tokens < 0) throw ContractError("token count must be >= 0");
    std::vector<TokenWindow> out;
    const int stride = size - overlap;
    for (int start = 0; start < n_tokens; start += stride) {
        const int end = std::min(start + size, n_tokens);
        out.push_back({start, end});
        if (end == n_tokens) break;
    }
    return out;
}

std::vector<Chunk> chunk_text(std::string_view text, int size, int overlap, const Tokenizer& tokenizer,
                              const std::string& doc_url) {
    const auto tokens = tokenizer.tokenize(text);
    std::vector<Chunk> out;
    for (const auto& w : chunk_windows(static_cast<int>(tokens.size()), size, overlap)) {
        Chunk c;
        c.doc_url = doc_url;
        c.token_start = w.start;
        c.token_end = w.end;
        c.text = tokenizer.detokenize(std::span(tokens).subspan(
            static_cast<std::size_t>(w.start), static_cast<std::size_t>(w.end - w.start)));
        out.push_back(std::move(c));
    }
    return out;
}

VectorIndex VectorIndex::build(const std::vector<WebDocument>& docs, Embedder& embedder,
                               const ChunkingOptions& options) {
    if (docs.empty()) throw ContractError("cannot build an index from zero documents");
    const Tokenizer& tokenizer = options.tokenizer ? *options.tokenizer : default_tokenizer();
    std::vector<Chunk> chunks;
    for (const auto& doc : docs) {
        auto part = chunk_text(doc.text, options.size, options.overlap, tokenizer, doc.url);
        std::move(part.begin(), part.end(), std::back_inserter(chunks));
    }
    std::vector<std::string> texts;
    texts.reserve(chunks.size());
    for (const auto& c : chunks) texts.push_back(c.text);
    auto vectors = embedder.embed(texts);
    if (vectors.size() != chunks.size()) {
        throw ProviderError("embedder returned " + std::to_string(vectors.size()) + " vectors for " +
                                std::to_string(chunks.size()) + " chunks",
                            false);
    }
    for (std::size_t i = 0; i < chunks.size(); ++i) chunks[i].embedding = std::move(vectors[i]);
    return from_chunks(std::move(chunks));
}

VectorIndex VectorIndex::from_chunks(std::vector<Chunk> chunks) {
    VectorIndex index;
    for (const auto& c : chunks) {
        if (index.dimension_ == 0) index.dimension_ = c.embedding.dimension();
        if (c.embedding.dimension() != index.dimension_ || index.dimension_ == 0) {
            throw ContractError("index chunks must share one non-zero embedding dimension");
        }
        if (std::abs(c.embedding.norm() - 1.0) > 1e-6) throw ContractError("index embeddings must be unit-norm");
    }
    index.chunks_ = std::move(chunks);
    return index;
}

std::vector<ScoredChunk> VectorIndex::top_candidates(const Embedding& query, int pool) const {
    if (pool < 1) throw ContractError("candidate pool must be >= 1");
    if (chunks_.empty()) return {};
    std::vector<double> scores(chunks_.size());
    for (std::size_t i = 0; i < chunks_.size(); ++i) scores[i] = cosine_similarity(chunks_[i].embedding, query);
    std::vector<std::size_t> order(chunks_.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    order.resize(std::min(order.size(), static_cast<std::size_t>(pool)));
    std::vector<ScoredChunk> out;
    out.reserve(order.size());
    for (auto i : order) out.push_back({chunks_[i], scores[i]});
    return out;
}

nlohmann::json VectorIndex::dump() const {
    nlohmann::json chunks = nlohmann::json::array();
    for (const auto& c : chunks_) {
        chunks.push_back({{"url", c.doc_url},
                          {"token_start", c.token_start},
                          {"token_end", c.token_end},
                          {"text", c.text},
                          {"embedding", c.embedding}});
    }
    return {{"dimension", dimension_}, {"chunks", std::move(chunks)}};
}

}  // namespace diverge
