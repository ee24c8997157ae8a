#include "sso/llm_client.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "sso/errors.hpp"
#include "sso/text.hpp"

namespace sso {

nlohmann::json canonical_json(const ChatRequest& request) {
    nlohmann::json messages = nlohmann::json::array();
    for (const auto& m : request.messages) messages.push_back({{"content", m.content}, {"role", m.role}});
    return {{"messages", std::move(messages)}, {"model", request.model}, {"temperature", request.temperature}};
}

ChatRequest chat_request_from_json(const nlohmann::json& j) {
    ChatRequest r;
    r.model = j.at("model").get<std::string>();
    r.temperature = j.at("temperature").get<double>();
    for (const auto& m : j.at("messages"))
        r.messages.push_back({m.at("role").get<std::string>(), m.at("content").get<std::string>()});
    return r;
}

std::string request_hash(const ChatRequest& request) { return text::sha256_hex(canonical_json(request).dump()); }

namespace detail {

class HttpSession {
public:
    explicit HttpSession(HttpEndpoint endpoint)
        : endpoint_(std::move(endpoint)),
          slots_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, endpoint_.max_in_flight))) {
        const auto scheme_end = endpoint_.base_url.find("://");
        const auto host_begin = scheme_end == std::string::npos ? 0 : scheme_end + 3;
        const auto path_begin = endpoint_.base_url.find('/', host_begin);
        origin_ = endpoint_.base_url.substr(0, path_begin);
        if (path_begin != std::string::npos) prefix_ = endpoint_.base_url.substr(path_begin);
        while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    }

    nlohmann::json post(const std::string& path, const nlohmann::json& body) {
        const char* key = std::getenv(endpoint_.api_key_env.c_str());
        if (!key || !*key) throw ConfigError("environment variable " + endpoint_.api_key_env + " is not set");

        slots_.acquire();
        struct Release {
            std::counting_semaphore<>& s;
            ~Release() { s.release(); }
        } release{slots_};

        httplib::Client client(origin_);
        client.set_bearer_token_auth(key);
        client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(endpoint_.timeout).count());
        client.set_read_timeout(endpoint_.timeout);
        client.set_write_timeout(endpoint_.timeout);

        const auto payload = body.dump();
        auto backoff = endpoint_.initial_backoff;
        std::string last_error;
        for (int attempt = 1; attempt <= std::max(1, endpoint_.attempts); ++attempt) {
            auto res = client.Post(prefix_ + path, payload, "application/json");
            if (res && res->status >= 200 && res->status < 300) {
                try {
                    return nlohmann::json::parse(res->body);
                } catch (const nlohmann::json::exception& e) {
                    throw TransportError("malformed response from " + path + ": " + e.what());
                }
            }
            if (res && res->status != 429 && res->status < 500)
                throw TransportError(path + " returned HTTP " + std::to_string(res->status) + ": " + res->body);
            last_error = res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error());
            spdlog::warn("{} attempt {}/{} failed: {}", path, attempt, endpoint_.attempts, last_error);
            if (attempt < endpoint_.attempts) {
                std::this_thread::sleep_for(backoff);
                backoff *= 2;
            }
        }
        throw TransportError(path + " failed after " + std::to_string(endpoint_.attempts) +
                             " attempts: " + last_error);
    }

private:
    HttpEndpoint endpoint_;
    std::string origin_;
    std::string prefix_;
    std::counting_semaphore<> slots_;
};

}  // namespace detail

HttpChatClient::HttpChatClient(HttpEndpoint endpoint)
    : session_(std::make_unique<detail::HttpSession>(std::move(endpoint))) {}

HttpChatClient::~HttpChatClient() = default;

std::string HttpChatClient::chat(const ChatRequest& request) {
    auto body = canonical_json(request);
    const auto reply = session_->post("/v1/chat/completions", body);
    ++usage_.requests;
    if (auto u = reply.find("usage"); u != reply.end() && u->is_object()) {
        usage_.prompt_tokens += u->value("prompt_tokens", std::size_t{0});
        usage_.completion_tokens += u->value("completion_tokens", std::size_t{0});
        spdlog::debug("chat usage: prompt={} completion={}", u->value("prompt_tokens", 0),
                      u->value("completion_tokens", 0));
    }
    try {
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw TransportError(std::string("chat response missing content: ") + e.what());
    }
}

HttpEmbeddingProvider::HttpEmbeddingProvider(HttpEndpoint endpoint, std::string model)
    : session_(std::make_unique<detail::HttpSession>(std::move(endpoint))), model_(std::move(model)) {}

HttpEmbeddingProvider::~HttpEmbeddingProvider() = default;

std::vector<Embedding> HttpEmbeddingProvider::embed_batch(std::span<const std::string> texts) {
    if (texts.empty()) return {};
    nlohmann::json body{{"model", model_}, {"input", std::vector<std::string>(texts.begin(), texts.end())}};
    const auto reply = session_->post("/v1/embeddings", body);
    std::vector<std::optional<Embedding>> slots(texts.size());
    try {
        const auto& data = reply.at("data");
        for (std::size_t i = 0; i < data.size(); ++i) {
            const auto index = data[i].contains("index") ? data[i].at("index").get<std::size_t>() : i;
            if (index >= slots.size()) throw TransportError("embedding index out of range");
            slots[index].emplace(data[i].at("embedding").get<std::vector<double>>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw TransportError(std::string("malformed embeddings response: ") + e.what());
    } catch (const ContractError& e) {
        throw TransportError(std::string("invalid embedding from provider: ") + e.what());
    }
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (auto& s : slots) {
        if (!s) throw TransportError("embeddings response is missing entries");
        out.push_back(std::move(*s));
    }
    return out;
}

CassetteMode parse_cassette_mode(const std::string& s) {
    if (s == "record") return CassetteMode::record;
    if (s == "replay") return CassetteMode::replay;
    if (s == "passthrough") return CassetteMode::passthrough;
    throw ConfigError("unknown cassette mode: " + s);
}

CassetteChatClient::CassetteChatClient(std::filesystem::path path, CassetteMode mode, ChatClient* inner)
    : path_(std::move(path)), mode_(mode), inner_(inner) {
    if (mode_ != CassetteMode::replay && !inner_) throw ConfigError("cassette in this mode needs a live client");
    if (mode_ == CassetteMode::passthrough) return;
    std::ifstream in(path_, std::ios::binary);
    if (!in) {
        if (mode_ == CassetteMode::replay) throw ConfigError("cannot open cassette " + path_.string());
        return;
    }
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            entries_.emplace(j.at("hash").get<std::string>(), j.at("response").get<std::string>());
        } catch (const nlohmann::json::exception& e) {
            throw LoadError(path_.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

std::size_t CassetteChatClient::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

std::string CassetteChatClient::chat(const ChatRequest& request) {
    if (mode_ == CassetteMode::passthrough) return inner_->chat(request);

    const auto hash = request_hash(request);
    {
        std::lock_guard lock(mutex_);
        if (auto it = entries_.find(hash); it != entries_.end()) return it->second;
    }
    if (mode_ == CassetteMode::replay) throw CassetteMiss(hash);

    auto response = inner_->chat(request);
    std::lock_guard lock(mutex_);
    ++live_calls_;
    if (entries_.emplace(hash, response).second) {
        std::ofstream out(path_, std::ios::binary | std::ios::app);
        if (!out) throw Error("cannot append to cassette " + path_.string());
        nlohmann::json line{{"hash", hash}, {"request", canonical_json(request)}, {"response", response}};
        out << line.dump() << '\n';
    }
    return response;
}

TranscriptLog::TranscriptLog(const std::filesystem::path& path) { open(path); }

void TranscriptLog::open(const std::filesystem::path& path) {
    std::lock_guard lock(mutex_);
    if (out_.is_open()) out_.close();
    out_.open(path, std::ios::binary | std::ios::app);
    if (!out_) throw Error("cannot open transcript " + path.string());
}

void TranscriptLog::close() {
    std::lock_guard lock(mutex_);
    if (out_.is_open()) out_.close();
}

bool TranscriptLog::is_open() const {
    std::lock_guard lock(mutex_);
    return out_.is_open();
}

void TranscriptLog::append(const nlohmann::json& record) {
    std::lock_guard lock(mutex_);
    if (!out_.is_open()) return;
    out_ << record.dump() << '\n';
    out_.flush();
}

}  // namespace sso
