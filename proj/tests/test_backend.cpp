#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "flipeval/backend.hpp"
#include "flipeval/cache.hpp"

using namespace flipeval;
using json = nlohmann::json;

namespace {

std::vector<ChatTurn> simple_messages(const std::string& user = "hello") {
    return {{ChatRole::system, "sys"}, {ChatRole::user, user}};
}

std::filesystem::path fresh_tmp_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() /
               ("flipeval_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// Tiny scripted chat-completions server for transport tests.
struct TestServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::atomic<int> hits{0};

    using Behavior =
        std::function<void(const httplib::Request&, int, httplib::Response&)>;

    explicit TestServer(Behavior behavior) {
        server.Post("/v1/chat/completions",
                    [this, behavior](const httplib::Request& req,
                                     httplib::Response& res) {
                        behavior(req, hits.fetch_add(1), res);
                    });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }

    ~TestServer() {
        server.stop();
        thread.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port) + "/v1"; }
};

void reply_ok(httplib::Response& res, const std::string& content) {
    json body{{"choices", json::array({{{"message", {{"role", "assistant"},
                                                     {"content", content}}}}})}};
    res.set_content(body.dump(), "application/json");
}

}  // namespace

// ---------------------------------------------------------------------------
// parse_structured

TEST_CASE("parse_structured: pointwise score") {
    auto r = parse_structured(R"({"REASONING":"ok","SCORE":"7"})",
                              ReplySchema::score_1_10);
    REQUIRE(r.ok());
    CHECK(r.reply.score() == 7);
    CHECK(r.reply.reasoning == "ok");
}

TEST_CASE("parse_structured: tolerant extraction from prose") {
    auto r = parse_structured(
        "Sure! {\"REASONING\":\"r\",\"BETTER_RESPONSE\":\"B\"} hope that helps",
        ReplySchema::better_ab);
    REQUIRE(r.ok());
    CHECK(r.reply.choice() == 'B');
}

TEST_CASE("parse_structured: code fences and nested braces") {
    std::string raw = "```json\n{\"REASONING\": \"uses {braces} inside\", "
                      "\"INFERRED INSTRUCTION\": \"write a haiku\"}\n```";
    auto r = parse_structured(raw, ReplySchema::inferred_instruction);
    REQUIRE(r.ok());
    CHECK(r.reply.text() == "write a haiku");
}

TEST_CASE("parse_structured: first object with the key decides") {
    // the leading object lacks the key and is skipped
    std::string raw = R"({"note":"x"} {"SCORE": 9})";
    auto r = parse_structured(raw, ReplySchema::score_1_10);
    REQUIRE(r.ok());
    CHECK(r.reply.score() == 9);
}

TEST_CASE("parse_structured: format errors") {
    CHECK_FALSE(parse_structured(R"({"SCORE":"eleven"})",
                                 ReplySchema::score_1_10).ok());
    CHECK_FALSE(parse_structured(R"({"SCORE":"0"})", ReplySchema::score_1_10).ok());
    CHECK_FALSE(parse_structured(R"({"SCORE":"11"})", ReplySchema::score_1_10).ok());
    CHECK_FALSE(parse_structured(R"({"SCORE":"7.5"})", ReplySchema::score_1_10).ok());
    CHECK_FALSE(parse_structured("no json here", ReplySchema::score_1_10).ok());
    CHECK_FALSE(parse_structured(R"({"REASONING":"r"})",
                                 ReplySchema::inferred_instruction).ok());
    CHECK_FALSE(parse_structured(R"({"BETTER_RESPONSE":"C"})",
                                 ReplySchema::better_ab).ok());
    CHECK_FALSE(parse_structured(R"({"BEST_RESPONSE_INDEX": -1})",
                                 ReplySchema::best_index).ok());
    CHECK_FALSE(parse_structured(R"({"SIMILARITY": 1.5})",
                                 ReplySchema::similarity_0_1).ok());
}

TEST_CASE("parse_structured: payload type flexibility") {
    CHECK(parse_structured(R"({"SCORE": 10})", ReplySchema::score_1_10)
              .reply.score() == 10);
    CHECK(parse_structured(R"({"BEST_RESPONSE_INDEX": "2"})",
                           ReplySchema::best_index)
              .reply.index() == 2);
    CHECK(parse_structured(R"({"SIMILARITY": "0.8"})",
                           ReplySchema::similarity_0_1)
              .reply.similarity() == doctest::Approx(0.8));
    CHECK(parse_structured(R"({"BETTER_RESPONSE": " A "})",
                           ReplySchema::better_ab)
              .reply.choice() == 'A');
}

// ---------------------------------------------------------------------------
// mock backend

TEST_CASE("mock backend: scripted echo and call counting") {
    MockBackend mock({}, {{{"hello"}, "X", 0, ""}});
    CHECK(mock.complete(simple_messages()) == "X");
    CHECK(mock.complete(simple_messages()) == "X");
    CHECK(mock.call_count() == 2);
}

TEST_CASE("mock backend: first matching rule wins") {
    MockBackend mock({}, {{{"hello"}, "first", 0, ""},
                          {{"hello"}, "second", 0, ""}});
    CHECK(mock.complete(simple_messages()) == "first");
}

TEST_CASE("mock backend: scripted errors and default") {
    MockBackend mock({}, {{{"boom"}, "", 0, "transport"},
                          {{"key"}, "", 0, "auth"}},
                     "fallback");
    CHECK_THROWS_AS(mock.complete(simple_messages("boom")), BackendError);
    try {
        mock.complete(simple_messages("key"));
        FAIL("expected auth error");
    } catch (const BackendError& e) {
        CHECK(e.kind() == BackendErrorKind::auth);
    }
    CHECK(mock.complete(simple_messages("nothing")) == "fallback");
}

TEST_CASE("mock backend: no rule and no default means refusal") {
    MockBackend mock({}, {});
    try {
        mock.complete(simple_messages());
        FAIL("expected refusal");
    } catch (const BackendError& e) {
        CHECK(e.kind() == BackendErrorKind::refusal);
    }
}

// ---------------------------------------------------------------------------
// backoff

TEST_CASE("backoff schedule is monotonically non-decreasing and capped") {
    for (int attempt = 1; attempt < 12; ++attempt) {
        CHECK(backoff_delay(attempt, 250) >= backoff_delay(attempt - 1, 250));
    }
    CHECK(backoff_delay(0, 250).count() == 250);
    CHECK(backoff_delay(1, 250).count() == 500);
    CHECK(backoff_delay(30, 250).count() == 10000);
}

// ---------------------------------------------------------------------------
// http backend

TEST_CASE("http backend: success round trip") {
    TestServer server([](const httplib::Request&, int, httplib::Response& res) { reply_ok(res, "pong"); });
    BackendConfig cfg;
    cfg.endpoint_url = server.url();
    cfg.model_name = "m";
    HttpBackend backend(cfg);
    CHECK(backend.complete(simple_messages()) == "pong");
    CHECK(backend.probe());
}

TEST_CASE("http backend: retries 5xx then succeeds") {
    TestServer server([](const httplib::Request&, int hit, httplib::Response& res) {
        if (hit < 2) {
            res.status = 500;
            res.set_content("oops", "text/plain");
        } else {
            reply_ok(res, "recovered");
        }
    });
    BackendConfig cfg;
    cfg.endpoint_url = server.url();
    cfg.max_retries = 3;
    cfg.retry_initial_delay_ms = 1;
    HttpBackend backend(cfg);
    CHECK(backend.complete(simple_messages()) == "recovered");
    CHECK(server.hits.load() == 3);
}

TEST_CASE("http backend: transport error after retries exhausted") {
    BackendConfig cfg;
    cfg.endpoint_url = "http://127.0.0.1:9";  // discard port, nothing listens
    cfg.max_retries = 2;
    cfg.retry_initial_delay_ms = 1;
    cfg.request_timeout = std::chrono::milliseconds(200);
    HttpBackend backend(cfg);
    try {
        backend.complete(simple_messages());
        FAIL("expected transport error");
    } catch (const BackendError& e) {
        CHECK(e.kind() == BackendErrorKind::transport);
    }
}

TEST_CASE("http backend: timeout below server latency is a transport error") {
    TestServer server([](const httplib::Request&, int, httplib::Response& res) {
        std::this_thread::sleep_for(std::chrono::milliseconds(400));
        reply_ok(res, "too late");
    });
    BackendConfig cfg;
    cfg.endpoint_url = server.url();
    cfg.request_timeout = std::chrono::milliseconds(50);
    cfg.max_retries = 0;
    HttpBackend backend(cfg);
    try {
        backend.complete(simple_messages());
        FAIL("expected transport error");
    } catch (const BackendError& e) {
        CHECK(e.kind() == BackendErrorKind::transport);
    }
}

TEST_CASE("http backend: auth failures are not retried") {
    TestServer server([](const httplib::Request&, int, httplib::Response& res) {
        res.status = 401;
        res.set_content("denied", "text/plain");
    });
    BackendConfig cfg;
    cfg.endpoint_url = server.url();
    cfg.max_retries = 3;
    cfg.retry_initial_delay_ms = 1;
    HttpBackend backend(cfg);
    try {
        backend.complete(simple_messages());
        FAIL("expected auth error");
    } catch (const BackendError& e) {
        CHECK(e.kind() == BackendErrorKind::auth);
    }
    CHECK(server.hits.load() == 1);
}

TEST_CASE("http backend: empty completion is a refusal") {
    TestServer server([](const httplib::Request&, int, httplib::Response& res) { reply_ok(res, ""); });
    BackendConfig cfg;
    cfg.endpoint_url = server.url();
    cfg.max_retries = 0;
    HttpBackend backend(cfg);
    try {
        backend.complete(simple_messages());
        FAIL("expected refusal");
    } catch (const BackendError& e) {
        CHECK(e.kind() == BackendErrorKind::refusal);
    }
}

TEST_CASE("http backend: bearer token from the configured env var") {
    std::string seen_auth;
    std::mutex mu;
    TestServer server([&](const httplib::Request& req, int, httplib::Response& res) {
        {
            std::lock_guard<std::mutex> lock(mu);
            seen_auth = req.get_header_value("Authorization");
        }
        reply_ok(res, "ok");
    });
    ::setenv("FLIPEVAL_TEST_KEY", "sekrit", 1);
    BackendConfig cfg;
    cfg.endpoint_url = server.url();
    cfg.api_key_env_var = "FLIPEVAL_TEST_KEY";
    HttpBackend backend(cfg);
    CHECK(backend.complete(simple_messages()) == "ok");
    CHECK(seen_auth == "Bearer sekrit");
}

// ---------------------------------------------------------------------------
// cache

TEST_CASE("cached_complete: hit avoids the backend") {
    auto dir = fresh_tmp_dir("cache_hit");
    CompletionCache cache(dir);
    MockBackend mock({}, {{{"hello"}, "X", 0, ""}});
    auto messages = simple_messages();
    CHECK(cached_complete(mock, messages, &cache) == "X");
    CHECK(cached_complete(mock, messages, &cache) == "X");
    CHECK(mock.call_count() == 1);
    CHECK(cache.entry_count() == 1);
}

TEST_CASE("cache key includes decode parameters") {
    BackendConfig a;
    a.model_name = "m";
    a.temperature = 0.0;
    BackendConfig b = a;
    b.temperature = 0.7;
    auto messages = simple_messages();
    CHECK(CompletionCache::key_for(a, messages) !=
          CompletionCache::key_for(b, messages));
    BackendConfig c = a;
    c.max_new_tokens = 1024;
    CHECK(CompletionCache::key_for(a, messages) !=
          CompletionCache::key_for(c, messages));
    CHECK(CompletionCache::key_for(a, messages) ==
          CompletionCache::key_for(a, messages));
}

TEST_CASE("cache: deleted entry is refetched") {
    auto dir = fresh_tmp_dir("cache_cold");
    CompletionCache cache(dir);
    MockBackend mock({}, {{{"hello"}, "X", 0, ""}});
    auto messages = simple_messages();
    cached_complete(mock, messages, &cache);
    CHECK(mock.call_count() == 1);
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        std::filesystem::remove(entry.path());
    }
    cached_complete(mock, messages, &cache);
    CHECK(mock.call_count() == 2);
}

TEST_CASE("cache: corrupt entry does not poison others") {
    auto dir = fresh_tmp_dir("cache_corrupt");
    CompletionCache cache(dir);
    cache.put("aaaa", "value-a");
    cache.put("bbbb", "value-b");
    std::ofstream(dir / "aaaa.txt", std::ios::trunc) << "garbage";
    CHECK(cache.get("bbbb") == std::string("value-b"));
}

TEST_CASE("cache: script file loader") {
    auto dir = fresh_tmp_dir("script");
    auto path = dir / "script.json";
    std::ofstream(path) << R"({"default":"D","rules":[
        {"contains_all":["ping"],"reply":"pong"}]})";
    auto mock = MockBackend::from_script_file(path);
    CHECK(mock.complete(simple_messages("ping")) == "pong");
    CHECK(mock.complete(simple_messages("other")) == "D");
}
