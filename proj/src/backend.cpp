#include "flipeval/backend.hpp"

#include <cstdlib>
#include <fstream>
#include <semaphore>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace flipeval {

using json = nlohmann::json;

std::string to_string(ChatRole role) {
    switch (role) {
        case ChatRole::system: return "system";
        case ChatRole::user: return "user";
        case ChatRole::assistant: return "assistant";
    }
    return "?";
}

std::chrono::milliseconds backoff_delay(int attempt, int initial_delay_ms) {
    constexpr std::int64_t kCapMs = 10000;
    std::int64_t delay = initial_delay_ms;
    for (int i = 0; i < attempt && delay < kCapMs; ++i) delay *= 2;
    return std::chrono::milliseconds(std::min(delay, kCapMs));
}

// ---------------------------------------------------------------------------
// HttpBackend

struct HttpBackend::Impl {
    std::string scheme_host;  // e.g. "http://localhost:8000"
    std::string path_prefix;  // e.g. "/v1"
    std::counting_semaphore<256> slots;

    explicit Impl(int max_concurrency)
        : slots(std::max(1, std::min(max_concurrency, 256))) {}
};

namespace {

void split_endpoint(const std::string& url, std::string& scheme_host,
                    std::string& path_prefix) {
    auto scheme_end = url.find("://");
    size_t host_begin = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    auto path_begin = url.find('/', host_begin);
    if (path_begin == std::string::npos) {
        scheme_host = url;
        path_prefix = "";
    } else {
        scheme_host = url.substr(0, path_begin);
        path_prefix = url.substr(path_begin);
        while (!path_prefix.empty() && path_prefix.back() == '/') {
            path_prefix.pop_back();
        }
    }
}

}  // namespace

HttpBackend::HttpBackend(BackendConfig cfg)
    : cfg_(std::move(cfg)), impl_(std::make_unique<Impl>(cfg_.max_concurrency)) {
    split_endpoint(cfg_.endpoint_url, impl_->scheme_host, impl_->path_prefix);
}

HttpBackend::~HttpBackend() = default;

std::string HttpBackend::complete(const std::vector<ChatTurn>& messages) {
    if (messages.empty()) {
        throw std::invalid_argument("complete() needs at least one message");
    }
    json body;
    body["model"] = cfg_.model_name;
    body["temperature"] = cfg_.temperature;
    body["max_tokens"] = cfg_.max_new_tokens;
    body["messages"] = json::array();
    for (const auto& m : messages) {
        body["messages"].push_back({{"role", to_string(m.role)},
                                    {"content", m.content}});
    }
    const std::string payload = body.dump();

    httplib::Headers headers;
    if (!cfg_.api_key_env_var.empty()) {
        if (const char* key = std::getenv(cfg_.api_key_env_var.c_str())) {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
    }

    impl_->slots.acquire();
    struct Release {
        std::counting_semaphore<256>& s;
        ~Release() { s.release(); }
    } release{impl_->slots};

    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(
                backoff_delay(attempt - 1, cfg_.retry_initial_delay_ms));
        }
        httplib::Client client(impl_->scheme_host);
        auto seconds = std::chrono::duration_cast<std::chrono::duration<double>>(
            cfg_.request_timeout);
        client.set_connection_timeout(seconds);
        client.set_read_timeout(seconds);
        client.set_write_timeout(seconds);

        auto res = client.Post(impl_->path_prefix + "/chat/completions",
                               headers, payload, "application/json");
        if (!res) {
            last_error = "transport failure: " + httplib::to_string(res.error());
            continue;  // retry
        }
        if (res->status == 401 || res->status == 403) {
            throw BackendError(BackendErrorKind::auth,
                               "authentication failed (" +
                                   std::to_string(res->status) + ")");
        }
        if (res->status >= 500) {
            last_error = "server error " + std::to_string(res->status);
            continue;  // retry
        }
        if (res->status != 200) {
            throw BackendError(BackendErrorKind::transport,
                               "unexpected status " + std::to_string(res->status));
        }
        json reply = json::parse(res->body, nullptr, false);
        std::string content;
        if (!reply.is_discarded() && reply.contains("choices") &&
            reply["choices"].is_array() && !reply["choices"].empty()) {
            const auto& choice = reply["choices"][0];
            if (choice.contains("message") &&
                choice["message"].contains("content") &&
                choice["message"]["content"].is_string()) {
                content = choice["message"]["content"].get<std::string>();
            }
        }
        if (content.empty()) {
            throw BackendError(BackendErrorKind::refusal, "empty completion");
        }
        return content;
    }
    throw BackendError(BackendErrorKind::transport,
                       last_error.empty() ? "request failed" : last_error);
}

bool HttpBackend::probe() noexcept {
    try {
        httplib::Client client(impl_->scheme_host);
        client.set_connection_timeout(std::chrono::seconds(2));
        client.set_read_timeout(std::chrono::seconds(2));
        auto res = client.Get(impl_->path_prefix.empty() ? "/"
                                                         : impl_->path_prefix);
        return static_cast<bool>(res);
    } catch (...) {
        return false;
    }
}

// ---------------------------------------------------------------------------
// MockBackend

MockBackend::MockBackend(BackendConfig cfg, std::vector<MockRule> rules,
                         std::string default_reply)
    : cfg_(std::move(cfg)),
      rules_(std::move(rules)),
      default_reply_(std::move(default_reply)) {}

MockBackend MockBackend::from_script_file(const std::filesystem::path& path,
                                          BackendConfig cfg) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open mock script: " + path.string());
    }
    json doc = json::parse(in);
    std::vector<MockRule> rules;
    for (const auto& r : doc.value("rules", json::array())) {
        MockRule rule;
        for (const auto& p : r.value("contains_all", json::array())) {
            rule.contains_all.push_back(p.get<std::string>());
        }
        rule.reply = r.value("reply", "");
        rule.delay_ms = r.value("delay_ms", 0);
        rule.error = r.value("error", "");
        rules.push_back(std::move(rule));
    }
    if (cfg.model_name.empty()) cfg.model_name = doc.value("model_name", "mock");
    return MockBackend(std::move(cfg), std::move(rules),
                       doc.value("default", ""));
}

std::string MockBackend::flatten_messages(const std::vector<ChatTurn>& messages) {
    std::string out;
    for (const auto& m : messages) {
        out += to_string(m.role);
        out += ": ";
        out += m.content;
        out += '\n';
    }
    return out;
}

std::string MockBackend::complete(const std::vector<ChatTurn>& messages) {
    calls_.fetch_add(1);
    if (!reachable_) {
        throw BackendError(BackendErrorKind::transport, "mock unreachable");
    }
    const std::string flat = flatten_messages(messages);
    for (const auto& rule : rules_) {
        bool all = true;
        for (const auto& pattern : rule.contains_all) {
            if (flat.find(pattern) == std::string::npos) {
                all = false;
                break;
            }
        }
        if (!all) continue;
        if (rule.delay_ms > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(rule.delay_ms));
        }
        if (rule.error == "transport") {
            throw BackendError(BackendErrorKind::transport, "scripted transport error");
        }
        if (rule.error == "auth") {
            throw BackendError(BackendErrorKind::auth, "scripted auth error");
        }
        if (rule.error == "refusal" || rule.reply.empty()) {
            throw BackendError(BackendErrorKind::refusal, "scripted empty completion");
        }
        return rule.reply;
    }
    if (default_reply_.empty()) {
        throw BackendError(BackendErrorKind::refusal, "no mock rule matched");
    }
    return default_reply_;
}

// ---------------------------------------------------------------------------
// Structured output parsing

namespace {

const char* required_key(ReplySchema schema) {
    switch (schema) {
        case ReplySchema::score_1_10: return "SCORE";
        case ReplySchema::best_index: return "BEST_RESPONSE_INDEX";
        case ReplySchema::better_ab: return "BETTER_RESPONSE";
        case ReplySchema::inferred_instruction: return "INFERRED INSTRUCTION";
        case ReplySchema::similarity_0_1: return "SIMILARITY";
    }
    return "";
}

std::string trim_copy(std::string s) {
    auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

// Numeric payloads arrive either as JSON numbers or quoted strings
// ("SCORE": "7"); accept both, require full consumption.
std::optional<double> as_number(const json& v) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        std::string s = trim_copy(v.get<std::string>());
        if (s.empty()) return std::nullopt;
        char* end = nullptr;
        double parsed = std::strtod(s.c_str(), &end);
        if (end != s.c_str() + s.size()) return std::nullopt;
        return parsed;
    }
    return std::nullopt;
}

std::optional<int> as_integer(const json& v) {
    auto num = as_number(v);
    if (!num) return std::nullopt;
    double rounded = std::round(*num);
    if (std::abs(*num - rounded) > 1e-9) return std::nullopt;
    return static_cast<int>(rounded);
}

ParsedReply failure(const std::string& message) {
    ParsedReply out;
    out.status = ParseStatus::format_error;
    out.error = message;
    return out;
}

ParsedReply validate_payload(const json& obj, ReplySchema schema) {
    StructuredReply reply;
    reply.schema = schema;
    if (obj.contains("REASONING") && obj["REASONING"].is_string()) {
        reply.reasoning = obj["REASONING"].get<std::string>();
    }
    const json& value = obj.at(required_key(schema));
    switch (schema) {
        case ReplySchema::score_1_10: {
            auto score = as_integer(value);
            if (!score) return failure("SCORE is not an integer");
            if (*score < 1 || *score > 10) return failure("SCORE out of 1-10");
            reply.payload = *score;
            break;
        }
        case ReplySchema::best_index: {
            auto index = as_integer(value);
            if (!index) return failure("BEST_RESPONSE_INDEX is not an integer");
            if (*index < 0) return failure("BEST_RESPONSE_INDEX is negative");
            reply.payload = *index;
            break;
        }
        case ReplySchema::better_ab: {
            if (!value.is_string()) return failure("BETTER_RESPONSE is not a string");
            std::string choice = trim_copy(value.get<std::string>());
            if (choice != "A" && choice != "B") {
                return failure("BETTER_RESPONSE not in {A,B}");
            }
            reply.payload = choice[0];
            break;
        }
        case ReplySchema::inferred_instruction: {
            if (!value.is_string()) {
                return failure("INFERRED INSTRUCTION is not a string");
            }
            reply.payload = value.get<std::string>();
            break;
        }
        case ReplySchema::similarity_0_1: {
            auto sim = as_number(value);
            if (!sim) return failure("SIMILARITY is not a number");
            if (*sim < 0.0 || *sim > 1.0) return failure("SIMILARITY out of [0,1]");
            reply.payload = *sim;
            break;
        }
    }
    ParsedReply out;
    out.status = ParseStatus::ok;
    out.reply = std::move(reply);
    return out;
}

// Locate the balanced {...} starting at `begin`, honoring string literals.
std::optional<std::string> balanced_object(const std::string& text, size_t begin) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (size_t i = begin; i < text.size(); ++i) {
        char c = text[i];
        if (in_string) {
            if (escaped) escaped = false;
            else if (c == '\\') escaped = true;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}') {
            if (--depth == 0) return text.substr(begin, i - begin + 1);
        }
    }
    return std::nullopt;
}

}  // namespace

ParsedReply parse_structured(const std::string& raw, ReplySchema schema) {
    const char* key = required_key(schema);
    for (size_t pos = raw.find('{'); pos != std::string::npos;
         pos = raw.find('{', pos + 1)) {
        auto candidate = balanced_object(raw, pos);
        if (!candidate) continue;
        json obj = json::parse(*candidate, nullptr, false);
        if (obj.is_discarded() || !obj.is_object()) continue;
        if (!obj.contains(key)) continue;
        // The first object carrying the required key decides the outcome.
        return validate_payload(obj, schema);
    }
    return failure(std::string("no object with key ") + key);
}

}  // namespace flipeval
