#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sso/embedding.hpp"

namespace sso {

struct ChatMessage {
    std::string role;
    std::string content;

    friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;

    friend bool operator==(const ChatRequest&, const ChatRequest&) = default;
};

/// {"messages":[{"content","role"}...],"model","temperature"} with sorted keys.
nlohmann::json canonical_json(const ChatRequest& request);
ChatRequest chat_request_from_json(const nlohmann::json& j);

/// SHA-256 (hex) of the compact canonical JSON form. Stable across processes.
std::string request_hash(const ChatRequest& request);

class ChatClient {
public:
    virtual ~ChatClient() = default;
    /// Assistant content for the request. Throws TransportError.
    virtual std::string chat(const ChatRequest& request) = 0;
};

/// Connection settings for an OpenAI-compatible server.
struct HttpEndpoint {
    std::string base_url = "https://api.openai.com";
    std::string api_key_env = "OPENAI_API_KEY";
    std::size_t max_in_flight = 4;
    int attempts = 3;
    std::chrono::milliseconds initial_backoff{500};
    std::chrono::seconds timeout{120};
};

struct TokenUsage {
    std::atomic<std::size_t> requests{0};
    std::atomic<std::size_t> prompt_tokens{0};
    std::atomic<std::size_t> completion_tokens{0};
};

namespace detail {
class HttpSession;
}

/// POST {base}/v1/chat/completions with exponential-backoff retries on
/// connection failures, 429 and 5xx responses.
class HttpChatClient final : public ChatClient {
public:
    explicit HttpChatClient(HttpEndpoint endpoint);
    ~HttpChatClient() override;

    std::string chat(const ChatRequest& request) override;
    const TokenUsage& usage() const { return usage_; }

private:
    std::unique_ptr<detail::HttpSession> session_;
    TokenUsage usage_;
};

/// POST {base}/v1/embeddings with body {model, input:[...]}.
class HttpEmbeddingProvider final : public EmbeddingProvider {
public:
    HttpEmbeddingProvider(HttpEndpoint endpoint, std::string model);
    ~HttpEmbeddingProvider() override;

    std::string model_id() const override { return model_; }
    std::vector<Embedding> embed_batch(std::span<const std::string> texts) override;

private:
    std::unique_ptr<detail::HttpSession> session_;
    std::string model_;
};

enum class CassetteMode { record, replay, passthrough };

CassetteMode parse_cassette_mode(const std::string& s);

/// Request/response recorder in JSONL form: one {hash, request, response}
/// object per line.
///
/// replay: hits come from the file, misses throw CassetteMiss and never reach
/// the network. record: hits come from the file, misses go to `inner` and are
/// appended. passthrough: always `inner`, nothing written.
class CassetteChatClient final : public ChatClient {
public:
    CassetteChatClient(std::filesystem::path path, CassetteMode mode, ChatClient* inner);

    std::string chat(const ChatRequest& request) override;

    CassetteMode mode() const { return mode_; }
    std::size_t size() const;
    std::size_t live_calls() const { return live_calls_; }

private:
    std::filesystem::path path_;
    CassetteMode mode_;
    ChatClient* inner_;
    mutable std::mutex mutex_;
    std::map<std::string, std::string> entries_;
    std::size_t live_calls_ = 0;
};

/// Append-only JSONL audit log of prompts and responses.
class TranscriptLog {
public:
    TranscriptLog() = default;
    explicit TranscriptLog(const std::filesystem::path& path);

    void open(const std::filesystem::path& path);
    void close();
    bool is_open() const;
    void append(const nlohmann::json& record);

private:
    mutable std::mutex mutex_;
    std::ofstream out_;
};

}  // namespace sso
