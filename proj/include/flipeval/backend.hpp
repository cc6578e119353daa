#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "flipeval/core.hpp"

namespace flipeval {

/// Operational parameters of the reward-model endpoint.
struct BackendConfig {
    std::string endpoint_url;
    std::string model_name;
    std::string api_key_env_var;
    double temperature = 0.0;       // greedy by default: MAP-style inference
    int max_new_tokens = 512;
    std::chrono::milliseconds request_timeout{30000};
    int max_retries = 2;
    int retry_initial_delay_ms = 250;
    int max_concurrency = 4;
};

enum class ChatRole { system, user, assistant };

struct ChatTurn {
    ChatRole role;
    std::string content;
};

std::string to_string(ChatRole role);

enum class BackendErrorKind { transport, auth, refusal };

class BackendError : public std::runtime_error {
public:
    BackendError(BackendErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    BackendErrorKind kind() const { return kind_; }

private:
    BackendErrorKind kind_;
};

/// Abstract chat-completion client. complete() returns the assistant text or
/// throws BackendError; implementations must be safe under concurrent calls.
class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual std::string complete(const std::vector<ChatTurn>& messages) = 0;
    virtual bool probe() noexcept = 0;
    virtual const BackendConfig& config() const = 0;
};

/// REST client for the de-facto chat-completions shape:
///   POST {endpoint_url}/chat/completions
///   {"model":..., "messages":[{"role","content"}], "temperature", "max_tokens"}
/// Retries with exponential backoff on transport and 5xx failures; never on
/// authentication failures. Concurrent requests are bounded by
/// config.max_concurrency.
class HttpBackend : public ChatBackend {
public:
    explicit HttpBackend(BackendConfig cfg);
    ~HttpBackend() override;

    std::string complete(const std::vector<ChatTurn>& messages) override;
    bool probe() noexcept override;
    const BackendConfig& config() const override { return cfg_; }

private:
    BackendConfig cfg_;
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Backoff delay before retry number `attempt` (0-based), doubling from the
/// initial delay and capped; monotonically non-decreasing in attempt.
std::chrono::milliseconds backoff_delay(int attempt, int initial_delay_ms);

/// One scripted mock rule: the reply fires when every pattern in
/// contains_all occurs in the flattened request text. First match wins.
struct MockRule {
    std::vector<std::string> contains_all;
    std::string reply;
    int delay_ms = 0;
    std::string error;  // "", "transport", "auth", or "refusal"
};

/// Deterministic scripted backend for tests and offline runs.
class MockBackend : public ChatBackend {
public:
    MockBackend(BackendConfig cfg, std::vector<MockRule> rules,
                std::string default_reply = "");

    MockBackend(MockBackend&& other) noexcept
        : cfg_(std::move(other.cfg_)),
          rules_(std::move(other.rules_)),
          default_reply_(std::move(other.default_reply_)),
          calls_(other.calls_.load()),
          reachable_(other.reachable_) {}

    /// Load rules from a JSON script: {"default": "...", "rules": [...]}.
    static MockBackend from_script_file(const std::filesystem::path& path,
                                        BackendConfig cfg = {});

    std::string complete(const std::vector<ChatTurn>& messages) override;
    bool probe() noexcept override { return reachable_; }
    const BackendConfig& config() const override { return cfg_; }

    int call_count() const { return calls_.load(); }
    void reset_call_count() { calls_.store(0); }
    void set_reachable(bool value) { reachable_ = value; }

    static std::string flatten_messages(const std::vector<ChatTurn>& messages);

private:
    BackendConfig cfg_;
    std::vector<MockRule> rules_;
    std::string default_reply_;
    std::atomic<int> calls_{0};
    bool reachable_ = true;
};

enum class ReplySchema {
    score_1_10,
    best_index,
    better_ab,
    inferred_instruction,
    similarity_0_1,
};

/// Parsed structured output. The payload member matching the schema:
/// score_1_10/best_index -> int, better_ab -> char ('A'/'B'),
/// inferred_instruction -> string, similarity_0_1 -> double.
struct StructuredReply {
    ReplySchema schema;
    std::string reasoning;
    std::variant<int, char, std::string, double> payload;

    int score() const { return std::get<int>(payload); }
    int index() const { return std::get<int>(payload); }
    char choice() const { return std::get<char>(payload); }
    const std::string& text() const { return std::get<std::string>(payload); }
    double similarity() const { return std::get<double>(payload); }
};

struct ParsedReply {
    ParseStatus status = ParseStatus::format_error;
    StructuredReply reply;
    std::string error;

    bool ok() const { return status == ParseStatus::ok; }
};

/// Extract the first well-formed JSON object carrying the schema's required
/// key from anywhere in the reply (prose and code fences are tolerated) and
/// validate the payload against the schema bounds.
ParsedReply parse_structured(const std::string& raw, ReplySchema schema);

}  // namespace flipeval
