// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Diverge Authors

#pragma once

#include <chrono>
#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "diverge/embedding.hpp"
#include "diverge/errors.hpp"

namespace diverge {

struct ChatMessage {
    std::string role;  // "user" | "assistant" | "system"
    std::string content;
};

struct ChatRequest {
    std::string prompt;
    std::vector<ChatMessage> history;
    double temperature = 1.0;
    /// Name of the template the prompt was rendered from. Not sent to the
    /// model; scripted doubles and call counters key on it.
    std::string tag;
    std::optional<int> max_tokens;
};

class ChatModel {
public:
    virtual ~ChatModel() = default;
    /// Raw model text for the request.
    virtual std::string chat(const ChatRequest& request) = 0;
};

class Embedder {
public:
    virtual ~Embedder() = default;
    /// One unit-norm vector per input, in input order. Empty input texts are a
    /// ContractError; an empty batch yields an empty result.
    virtual std::vector<Embedding> embed(const std::vector<std::string>& texts) = 0;
    virtual std::size_t dimension() const = 0;

    Embedding embed_one(const std::string& text);
};

/// Offline embedder: each lowercased whitespace token (edge punctuation
/// stripped) is hashed into a signed bucket, the buckets are summed and the
/// result L2-normalized. Texts sharing tokens land close together.
class HashEmbedder final : public Embedder {
public:
    explicit HashEmbedder(std::size_t dimension = 64);

    std::vector<Embedding> embed(const std::vector<std::string>& texts) override;
    std::size_t dimension() const override { return dimension_; }

private:
    Embedding embed_text(const std::string& text) const;

    std::size_t dimension_;
};

/// Test double returning pre-registered responses.
///
/// A response registered under `key` is eligible for a request whose tag
/// equals `key` or whose prompt contains `key`. Keys are tried in
/// registration order and each key's responses are served FIFO. When nothing
/// matches, the fallback (if any) answers; otherwise the call fails with a
/// non-retryable ProviderError. Thread-safe.
class ScriptedChat final : public ChatModel {
public:
    using Responder = std::function<std::string(const ChatRequest&)>;

    ScriptedChat& enqueue(const std::string& key, std::string response);
    ScriptedChat& enqueue(const std::string& key, const std::vector<std::string>& responses);
    /// Responses registered here are never exhausted.
    ScriptedChat& always(const std::string& key, Responder responder);
    ScriptedChat& fallback(Responder responder);

    std::string chat(const ChatRequest& request) override;

    std::size_t calls() const;
    std::size_t calls(const std::string& tag) const;
    std::vector<ChatRequest> requests() const;

private:
    struct Rule {
        std::string key;
        std::deque<std::string> queue;
        Responder responder;
    };

    static bool matches(const Rule& rule, const ChatRequest& request);

    mutable std::mutex mutex_;
    std::vector<Rule> rules_;
    Responder fallback_;
    std::vector<ChatRequest> log_;
};

struct RetryPolicy {
    int attempts = 3;
    std::chrono::milliseconds initial_backoff{1000};
    double multiplier = 2.0;
    /// Replaced in tests to avoid real sleeping.
    std::function<void(std::chrono::milliseconds)> sleep;

    void pause(std::chrono::milliseconds d) const;
};

/// Runs `fn`, retrying retryable ProviderErrors with exponential backoff.
template <typename Fn>
auto with_retries(const RetryPolicy& policy, Fn&& fn) -> decltype(fn());

/// Connection settings for an OpenAI-compatible HTTP API.
struct ProviderSettings {
    std::string api_key;
    std::string api_base = "https://api.openai.com/v1";
    std::string chat_model = "gpt-5-mini";
    std::string embed_model = "text-embedding-3-small";
    std::chrono::seconds timeout{120};
    std::optional<int> max_tokens;
    std::size_t embed_batch_size = 256;

    /// Reads DIVERGE_API_KEY, DIVERGE_API_BASE, DIVERGE_CHAT_MODEL and
    /// DIVERGE_EMBED_MODEL over the defaults.
    static ProviderSettings from_env();
};

/// POST {api_base}/chat/completions.
class OpenAiChat final : public ChatModel {
public:
    explicit OpenAiChat(ProviderSettings settings, RetryPolicy retry = {});
    std::string chat(const ChatRequest& request) override;

    /// Request body sent for `request` (exposed for wire-format tests).
    std::string request_body(const ChatRequest& request) const;

private:
    ProviderSettings settings_;
    RetryPolicy retry_;
};

/// POST {api_base}/embeddings, split into batches of embed_batch_size.
class OpenAiEmbedder final : public Embedder {
public:
    explicit OpenAiEmbedder(ProviderSettings settings, std::size_t dimension = 1536,
                            RetryPolicy retry = {});
    std::vector<Embedding> embed(const std::vector<std::string>& texts) override;
    std::size_t dimension() const override { return dimension_; }

private:
    std::vector<Embedding> embed_batch(const std::vector<std::string>& texts);

    ProviderSettings settings_;
    std::size_t dimension_;
    RetryPolicy retry_;
};

/// Wraps a model and counts calls per request tag. Thread-safe.
class CountingChat final : public ChatModel {
public:
    explicit CountingChat(ChatModel& inner) : inner_(inner) {}
    std::string chat(const ChatRequest& request) override;

    std::size_t calls(const std::string& tag) const;
    std::size_t total() const;

private:
    ChatModel& inner_;
    mutable std::mutex mutex_;
    std::map<std::string, std::size_t> counts_;
};

// ---- implementation ---------------------------------------------------------

template <typename Fn>
auto with_retries(const RetryPolicy& policy, Fn&& fn) -> decltype(fn()) {
    auto backoff = policy.initial_backoff;
    for (int attempt = 1;; ++attempt) {
        try {
            return fn();
        } catch (const ProviderError& e) {
            if (!e.retryable() || attempt >= policy.attempts) throw;
            policy.pause(backoff);
            backoff = std::chrono::milliseconds(
                static_cast<long long>(static_cast<double>(backoff.count()) * policy.multiplier));
        }
    }
}

}  // namespace diverge
