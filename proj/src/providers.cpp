// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Diverge Authors

#include "diverge/providers.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <thread>

#include "diverge/core.hpp"
#include "diverge/hashing.hpp"
#include "diverge/http.hpp"

namespace diverge {

Embedding Embedder::embed_one(const std::string& text) {
    auto out = embed({text});
    if (out.size() != 1) throw ProviderError("embedder returned wrong number of vectors", false);
    return std::move(out.front());
}

// ---- HashEmbedder -----------------------------------------------------------

HashEmbedder::HashEmbedder(std::size_t dimension) : dimension_(dimension) {
    if (dimension_ == 0) throw ContractError("embedding dimension must be positive");
}

std::vector<Embedding> HashEmbedder::embed(const std::vector<std::string>& texts) {
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_text(t));
    return out;
}

Embedding HashEmbedder::embed_text(const std::string& text) const {
    if (trim(text).empty()) throw ContractError("cannot embed empty text");
    std::vector<double> v(dimension_, 0.0);
    for (auto token : split_whitespace(text)) {
        auto is_word = [](unsigned char c) { return std::isalnum(c) != 0; };
        auto b = std::find_if(token.begin(), token.end(), is_word);
        auto e = std::find_if(token.rbegin(), token.rend(), is_word).base();
        if (b >= e) continue;
        std::string norm(b, e);
        std::transform(norm.begin(), norm.end(), norm.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        const auto h = fnv1a64(norm);
        v[h % dimension_] += (h >> 63) != 0 ? -1.0 : 1.0;
    }
    if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; })) {
        // punctuation-only text or a sign cancellation
        v[fnv1a64(text) % dimension_] = 1.0;
    }
    return Embedding::normalized(std::move(v));
}

// ---- ScriptedChat -----------------------------------------------------------

ScriptedChat& ScriptedChat::enqueue(const std::string& key, std::string response) {
    std::lock_guard lock(mutex_);
    auto it = std::find_if(rules_.begin(), rules_.end(),
                           [&](const Rule& r) { return r.key == key && !r.responder; });
    if (it == rules_.end()) {
        rules_.push_back(Rule{key, {}, nullptr});
        it = std::prev(rules_.end());
    }
    it->queue.push_back(std::move(response));
    return *this;
}

ScriptedChat& ScriptedChat::enqueue(const std::string& key, const std::vector<std::string>& responses) {
    for (const auto& r : responses) enqueue(key, r);
    return *this;
}

ScriptedChat& ScriptedChat::always(const std::string& key, Responder responder) {
    std::lock_guard lock(mutex_);
    rules_.push_back(Rule{key, {}, std::move(responder)});
    return *this;
}

ScriptedChat& ScriptedChat::fallback(Responder responder) {
    std::lock_guard lock(mutex_);
    fallback_ = std::move(responder);
    return *this;
}

bool ScriptedChat::matches(const Rule& rule, const ChatRequest& request) {
    return request.tag == rule.key || request.prompt.find(rule.key) != std::string::npos;
}

std::string ScriptedChat::chat(const ChatRequest& request) {
    Responder responder;
    {
        std::lock_guard lock(mutex_);
        log_.push_back(request);
        for (auto& rule : rules_) {
            if (!matches(rule, request)) continue;
            if (rule.responder) {
                responder = rule.responder;
                break;
            }
            if (!rule.queue.empty()) {
                auto r = std::move(rule.queue.front());
                rule.queue.pop_front();
                return r;
            }
        }
        if (!responder) responder = fallback_;
    }
    if (!responder) {
        throw ProviderError("scripted chat has no response left for request tagged '" +
                                request.tag + "'",
                            false);
    }
    return responder(request);
}

std::size_t ScriptedChat::calls() const {
    std::lock_guard lock(mutex_);
    return log_.size();
}

std::size_t ScriptedChat::calls(const std::string& tag) const {
    std::lock_guard lock(mutex_);
    return static_cast<std::size_t>(
        std::count_if(log_.begin(), log_.end(), [&](const ChatRequest& r) { return r.tag == tag; }));
}

std::vector<ChatRequest> ScriptedChat::requests() const {
    std::lock_guard lock(mutex_);
    return log_;
}

// ---- CountingChat -----------------------------------------------------------

std::string CountingChat::chat(const ChatRequest& request) {
    {
        std::lock_guard lock(mutex_);
        ++counts_[request.tag];
    }
    return inner_.chat(request);
}

std::size_t CountingChat::calls(const std::string& tag) const {
    std::lock_guard lock(mutex_);
    auto it = counts_.find(tag);
    return it == counts_.end() ? 0 : it->second;
}

std::size_t CountingChat::total() const {
    std::lock_guard lock(mutex_);
    std::size_t n = 0;
    for (const auto& [_, c] : counts_) n += c;
    return n;
}

// ---- retry / settings -------------------------------------------------------

void RetryPolicy::pause(std::chrono::milliseconds d) const {
    if (sleep) {
        sleep(d);
    } else {
        std::this_thread::sleep_for(d);
    }
}

ProviderSettings ProviderSettings::from_env() {
    ProviderSettings s;
    auto read = [](const char* name, std::string& dst) {
        if (const char* v = std::getenv(name); v != nullptr && *v != '\0') dst = v;
    };
    read("DIVERGE_API_KEY", s.api_key);
    read("DIVERGE_API_BASE", s.api_base);
    read("DIVERGE_CHAT_MODEL", s.chat_model);
    read("DIVERGE_EMBED_MODEL", s.embed_model);
    while (!s.api_base.empty() && s.api_base.back() == '/') s.api_base.pop_back();
    return s;
}

namespace {

HttpOptions api_options(const ProviderSettings& s) {
    HttpOptions o;
    o.timeout = s.timeout;
    if (!s.api_key.empty()) o.headers["Authorization"] = "Bearer " + s.api_key;
    return o;
}

json post_json(const ProviderSettings& s, const std::string& endpoint, const std::string& body) {
    const std::string url = s.api_base + endpoint;
    HttpResponse res;
    try {
        res = http_post(url, body, "application/json", api_options(s));
    } catch (const TransportError& e) {
        throw ProviderError(e.what(), true);
    }
    if (res.status == 429 || res.status >= 500) {
        throw ProviderError(url + " returned HTTP " + std::to_string(res.status), true);
    }
    if (res.status != 200) {
        throw ProviderError(url + " returned HTTP " + std::to_string(res.status) + ": " +
                                res.body.substr(0, 300),
                            false);
    }
    try {
        return json::parse(res.body);
    } catch (const json::exception& e) {
        throw ProviderError(url + " returned malformed JSON: " + e.what(), false);
    }
}

}  // namespace

// ---- OpenAiChat -------------------------------------------------------------

OpenAiChat::OpenAiChat(ProviderSettings settings, RetryPolicy retry)
    : settings_(std::move(settings)), retry_(std::move(retry)) {}

std::string OpenAiChat::request_body(const ChatRequest& request) const {
    if (request.prompt.empty()) throw ContractError("chat prompt is empty");
    json messages = json::array();
    for (const auto& m : request.history) messages.push_back({{"role", m.role}, {"content", m.content}});
    messages.push_back({{"role", "user"}, {"content", request.prompt}});
    json body{{"model", settings_.chat_model},
              {"messages", std::move(messages)},
              {"temperature", request.temperature}};
    if (auto mt = request.max_tokens ? request.max_tokens : settings_.max_tokens) {
        body["max_completion_tokens"] = *mt;
    }
    return body.dump();
}

std::string OpenAiChat::chat(const ChatRequest& request) {
    const auto body = request_body(request);
    return with_retries(retry_, [&] {
        const auto res = post_json(settings_, "/chat/completions", body);
        try {
            return res.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception& e) {
            throw ProviderError(std::string("unexpected chat response shape: ") + e.what(), false);
        }
    });
}

// ---- OpenAiEmbedder ---------------------------------------------------------

OpenAiEmbedder::OpenAiEmbedder(ProviderSettings settings, std::size_t dimension, RetryPolicy retry)
    : settings_(std::move(settings)), dimension_(dimension), retry_(std::move(retry)) {
    if (settings_.embed_batch_size == 0) throw ContractError("embed_batch_size must be positive");
}

std::vector<Embedding> OpenAiEmbedder::embed(const std::vector<std::string>& texts) {
    for (const auto& t : texts) {
        if (trim(t).empty()) throw ContractError("cannot embed empty text");
    }
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); i += settings_.embed_batch_size) {
        const auto end = std::min(texts.size(), i + settings_.embed_batch_size);
        auto part = embed_batch({texts.begin() + static_cast<std::ptrdiff_t>(i),
                                 texts.begin() + static_cast<std::ptrdiff_t>(end)});
        std::move(part.begin(), part.end(), std::back_inserter(out));
    }
    return out;
}

std::vector<Embedding> OpenAiEmbedder::embed_batch(const std::vector<std::string>& texts) {
    const auto body = json{{"model", settings_.embed_model}, {"input", texts}}.dump();
    return with_retries(retry_, [&] {
        const auto res = post_json(settings_, "/embeddings", body);
        std::vector<Embedding> out(texts.size());
        try {
            const auto& data = res.at("data");
            if (data.size() != texts.size()) {
                throw ProviderError("embedding response has " + std::to_string(data.size()) +
                                        " vectors for " + std::to_string(texts.size()) + " inputs",
                                    false);
            }
            for (std::size_t i = 0; i < data.size(); ++i) {
                const auto idx = data[i].value("index", i);
                auto values = data[i].at("embedding").get<std::vector<double>>();
                if (values.size() != dimension_) {
                    throw ProviderError("embedding dimension " + std::to_string(values.size()) +
                                            " != configured " + std::to_string(dimension_),
                                        false);
                }
                if (idx >= out.size()) throw ProviderError("embedding index out of range", false);
                out[idx] = Embedding::normalized(std::move(values));
            }
        } catch (const json::exception& e) {
            throw ProviderError(std::string("unexpected embedding response shape: ") + e.what(), false);
        }
        return out;
    });
}

}  // namespace diverge
