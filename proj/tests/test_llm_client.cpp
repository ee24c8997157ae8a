#include <atomic>
#include <cstdlib>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "sso/errors.hpp"
#include "sso/llm_client.hpp"
#include "sso/text.hpp"
#include "support/fixtures.hpp"

using namespace sso;
using sso::testing::ScriptedChat;
using sso::testing::TempDir;

namespace {

ChatRequest sample_request(const std::string& content = "hello") {
    return ChatRequest{"gpt-4-0613", {{"system", "be brief"}, {"user", content}}, 0.7};
}

/// Local OpenAI-compatible server on an ephemeral port.
class FakeServer {
public:
    FakeServer() {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            const int n = ++chat_calls;
            auth = req.get_header_value("Authorization");
            last_body = nlohmann::json::parse(req.body);
            if (n <= fail_first) {
                res.status = fail_status;
                res.set_content("busy", "text/plain");
                return;
            }
            nlohmann::json reply{
                {"choices", {{{"message", {{"role", "assistant"}, {"content", "reply to " + last_body["messages"].back()["content"].get<std::string>()}}}}}},
                {"usage", {{"prompt_tokens", 11}, {"completion_tokens", 3}}}};
            res.set_content(reply.dump(), "application/json");
        });
        server_.Post("/v1/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
            ++embed_calls;
            const auto body = nlohmann::json::parse(req.body);
            nlohmann::json data = nlohmann::json::array();
            const auto& input = body["input"];
            // Out of order on purpose; clients must use "index".
            for (std::size_t i = input.size(); i-- > 0;)
                data.push_back({{"index", i}, {"embedding", {1.0, static_cast<double>(input[i].get<std::string>().size())}}});
            res.set_content(nlohmann::json{{"data", data}, {"model", body["model"]}}.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeServer() {
        server_.stop();
        thread_.join();
    }

    HttpEndpoint endpoint() const {
        HttpEndpoint e;
        e.base_url = "http://127.0.0.1:" + std::to_string(port_);
        e.api_key_env = "SSO_TEST_API_KEY";
        e.initial_backoff = std::chrono::milliseconds(1);
        e.timeout = std::chrono::seconds(5);
        return e;
    }

    std::atomic<int> chat_calls{0};
    std::atomic<int> embed_calls{0};
    int fail_first = 0;
    int fail_status = 503;
    std::string auth;
    nlohmann::json last_body;

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

class HttpTest : public ::testing::Test {
protected:
    void SetUp() override { ::setenv("SSO_TEST_API_KEY", "sk-test", 1); }
    void TearDown() override { ::unsetenv("SSO_TEST_API_KEY"); }
    FakeServer server;
};

}  // namespace

TEST(CanonicalJsonTest, SortedCompactForm) {
    EXPECT_EQ(canonical_json(sample_request()).dump(),
              R"({"messages":[{"content":"be brief","role":"system"},{"content":"hello","role":"user"}],)"
              R"("model":"gpt-4-0613","temperature":0.7})");
    EXPECT_EQ(chat_request_from_json(canonical_json(sample_request())), sample_request());
}

TEST(CanonicalJsonTest, HashIsShaOfCanonicalForm) {
    const auto r = sample_request();
    EXPECT_EQ(request_hash(r), text::sha256_hex(canonical_json(r).dump()));
    EXPECT_EQ(request_hash(r).size(), 64u);
    EXPECT_NE(request_hash(r), request_hash(sample_request("hello!")));
    auto warmer = r;
    warmer.temperature = 0.8;
    EXPECT_NE(request_hash(r), request_hash(warmer));
}

TEST(CassetteTest, RecordThenReplay) {
    TempDir dir;
    const auto path = dir / "c.jsonl";
    {
        ScriptedChat live({"first", "second"});
        CassetteChatClient rec(path, CassetteMode::record, &live);
        EXPECT_EQ(rec.chat(sample_request("a")), "first");
        EXPECT_EQ(rec.chat(sample_request("a")), "first");  // hit, no live call
        EXPECT_EQ(rec.chat(sample_request("b")), "second");
        EXPECT_EQ(rec.live_calls(), 2u);
        EXPECT_EQ(live.requests.size(), 2u);
    }
    const auto lines = text::split_lines(sso::testing::read_file(path));
    auto first = nlohmann::json::parse(lines[0]);
    EXPECT_EQ(first["hash"], request_hash(sample_request("a")));
    EXPECT_EQ(chat_request_from_json(first["request"]), sample_request("a"));

    CassetteChatClient replay(path, CassetteMode::replay, nullptr);
    EXPECT_EQ(replay.size(), 2u);
    EXPECT_EQ(replay.chat(sample_request("b")), "second");
    EXPECT_THROW(replay.chat(sample_request("c")), CassetteMiss);
}

TEST(CassetteTest, RecordAppendsToExistingFile) {
    TempDir dir;
    const auto path = dir / "c.jsonl";
    {
        ScriptedChat live({"one"});
        CassetteChatClient rec(path, CassetteMode::record, &live);
        rec.chat(sample_request("a"));
    }
    ScriptedChat live({"two"});
    CassetteChatClient rec(path, CassetteMode::record, &live);
    EXPECT_EQ(rec.chat(sample_request("a")), "one");
    EXPECT_EQ(rec.chat(sample_request("b")), "two");
    EXPECT_EQ(CassetteChatClient(path, CassetteMode::replay, nullptr).size(), 2u);
}

TEST(CassetteTest, ModesAndErrors) {
    TempDir dir;
    EXPECT_THROW(CassetteChatClient(dir / "missing.jsonl", CassetteMode::replay, nullptr), ConfigError);
    EXPECT_THROW(CassetteChatClient(dir / "x.jsonl", CassetteMode::record, nullptr), ConfigError);
    {
        std::ofstream(dir / "bad.jsonl") << "{\"hash\": 1}\n";
    }
    EXPECT_THROW(CassetteChatClient(dir / "bad.jsonl", CassetteMode::replay, nullptr), LoadError);
    ScriptedChat live({"x"});
    CassetteChatClient pass(dir / "p.jsonl", CassetteMode::passthrough, &live);
    EXPECT_EQ(pass.chat(sample_request()), "x");
    EXPECT_FALSE(std::filesystem::exists(dir / "p.jsonl"));
    EXPECT_EQ(parse_cassette_mode("record"), CassetteMode::record);
    EXPECT_THROW(parse_cassette_mode("rewind"), ConfigError);
}

TEST(TranscriptTest, AppendsJsonLines) {
    TempDir dir;
    TranscriptLog log;
    log.append({{"dropped", true}});  // closed logs ignore records
    log.open(dir / "t.jsonl");
    log.append({{"kind", "actor"}});
    log.append({{"kind", "generation"}});
    log.close();
    EXPECT_EQ(sso::testing::read_file(dir / "t.jsonl"), "{\"kind\":\"actor\"}\n{\"kind\":\"generation\"}\n");
}

TEST_F(HttpTest, ChatRoundTrip) {
    HttpChatClient client(server.endpoint());
    EXPECT_EQ(client.chat(sample_request("ping")), "reply to ping");
    EXPECT_EQ(server.auth, "Bearer sk-test");
    EXPECT_EQ(server.last_body, canonical_json(sample_request("ping")));
    EXPECT_EQ(client.usage().requests.load(), 1u);
    EXPECT_EQ(client.usage().prompt_tokens.load(), 11u);
}

TEST_F(HttpTest, RetriesOnServerErrors) {
    server.fail_first = 2;
    HttpChatClient client(server.endpoint());
    EXPECT_EQ(client.chat(sample_request()), "reply to hello");
    EXPECT_EQ(server.chat_calls.load(), 3);
}

TEST_F(HttpTest, RetriesOnRateLimitThenGivesUp) {
    server.fail_first = 10;
    server.fail_status = 429;
    HttpChatClient client(server.endpoint());
    EXPECT_THROW(client.chat(sample_request()), TransportError);
    EXPECT_EQ(server.chat_calls.load(), 3);
}

TEST_F(HttpTest, ClientErrorsAreNotRetried) {
    server.fail_first = 10;
    server.fail_status = 400;
    HttpChatClient client(server.endpoint());
    EXPECT_THROW(client.chat(sample_request()), TransportError);
    EXPECT_EQ(server.chat_calls.load(), 1);
}

TEST_F(HttpTest, MissingKeyIsConfigError) {
    ::unsetenv("SSO_TEST_API_KEY");
    HttpChatClient client(server.endpoint());
    EXPECT_THROW(client.chat(sample_request()), ConfigError);
    EXPECT_EQ(server.chat_calls.load(), 0);
}

TEST_F(HttpTest, UnreachableServerIsTransportError) {
    auto e = server.endpoint();
    e.base_url = "http://127.0.0.1:1";
    e.attempts = 2;
    HttpChatClient client(e);
    EXPECT_THROW(client.chat(sample_request()), TransportError);
}

TEST_F(HttpTest, EmbeddingsKeepInputOrder) {
    HttpEmbeddingProvider p(server.endpoint(), "text-embedding-ada-002");
    std::vector<std::string> texts{"a", "bbb", "cc"};
    auto out = p.embed_batch(texts);
    ASSERT_EQ(out.size(), 3u);
    EXPECT_EQ(out[0].values()[1], 1.0);
    EXPECT_EQ(out[1].values()[1], 3.0);
    EXPECT_EQ(out[2].values()[1], 2.0);
    EXPECT_EQ(p.model_id(), "text-embedding-ada-002");
}

TEST_F(HttpTest, BaseUrlPathPrefixIsKept) {
    auto e = server.endpoint();
    e.base_url += "/";
    HttpChatClient client(e);
    EXPECT_EQ(client.chat(sample_request("x")), "reply to x");
}
