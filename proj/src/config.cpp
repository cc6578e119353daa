#include "flipeval/config.hpp"

#include <charconv>
#include <fstream>

#include <json.hpp>

namespace flipeval {

namespace {

const std::map<std::string, std::string>& default_values() {
    static const std::map<std::string, std::string> defaults = {
        {"backend.kind", "http"},  // http | mock
        {"backend.endpoint_url", "http://127.0.0.1:8000/v1"},
        {"backend.model_name", "default-model"},
        {"backend.api_key_env_var", "FLIPEVAL_API_KEY"},
        {"backend.temperature", "0"},
        {"backend.max_new_tokens", "512"},
        {"backend.request_timeout_ms", "30000"},
        {"backend.max_retries", "2"},
        {"backend.retry_initial_delay_ms", "250"},
        {"backend.max_concurrency", "4"},
        {"backend.script", ""},  // mock rules file
        {"flip.metric", "word_f1"},
        {"flip.prompt_variant", "v1"},
        {"flip.context_mode", "none"},
        {"flip.instruction_normalization", "qa"},
        {"judge.prompt_variant", "v1"},
        {"judge.shuffle_candidates", "false"},
        {"judge.shuffle_seed", "0"},
        {"eval.method", "flip"},
        {"eval.runs", "1"},
        {"eval.seed", "0"},
        {"eval.workers", "4"},
        {"bon.n_values", "1,2,4,8,16"},
        {"bon.trials", "5"},
        {"attack.kind", "highest_score"},
        {"attack.paraphrases", ""},
        {"cache.dir", ""},
        {"templates.dir", ""},
        {"service.bind_address", "127.0.0.1"},
        {"service.port", "8080"},
        {"service.method", "flip"},
        {"service.max_concurrent_requests", "8"},
        {"service.request_timeout_ms", "60000"},
        {"service.max_response_chars", "100000"},
    };
    return defaults;
}

std::string trim(const std::string& s) {
    auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

Config::Config() : values_(default_values()) {}

void Config::set(const std::string& key, const std::string& value) {
    auto it = values_.find(key);
    if (it == values_.end()) {
        throw ConfigError("unknown config key: " + key);
    }
    it->second = value;
}

void Config::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file: " + path.string());
    }
    std::string line;
    std::string section;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        std::string text = trim(line);
        if (text.empty() || text[0] == '#' || text[0] == ';') continue;
        if (text.front() == '[' && text.back() == ']') {
            section = trim(text.substr(1, text.size() - 2));
            continue;
        }
        auto eq = text.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(line_number) +
                              ": expected key = value");
        }
        std::string key = trim(text.substr(0, eq));
        std::string value = trim(text.substr(eq + 1));
        if (!section.empty()) key = section + "." + key;
        try {
            set(key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(path.string() + ":" + std::to_string(line_number) +
                              ": " + e.what());
        }
    }
}

void Config::apply_override(const std::string& key_equals_value) {
    auto eq = key_equals_value.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("override must be key=value: " + key_equals_value);
    }
    set(trim(key_equals_value.substr(0, eq)),
        trim(key_equals_value.substr(eq + 1)));
}

const std::string& Config::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) {
        throw ConfigError("unknown config key: " + key);
    }
    return it->second;
}

int Config::get_int(const std::string& key) const {
    const std::string& value = get(key);
    int out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw ConfigError(key + " is not an integer: " + value);
    }
    return out;
}

double Config::get_double(const std::string& key) const {
    const std::string& value = get(key);
    try {
        size_t consumed = 0;
        double out = std::stod(value, &consumed);
        if (consumed != value.size()) throw std::invalid_argument(value);
        return out;
    } catch (const std::exception&) {
        throw ConfigError(key + " is not a number: " + value);
    }
}

bool Config::get_bool(const std::string& key) const {
    const std::string& value = get(key);
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigError(key + " is not a boolean: " + value);
}

std::uint64_t Config::get_u64(const std::string& key) const {
    const std::string& value = get(key);
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw ConfigError(key + " is not an unsigned integer: " + value);
    }
    return out;
}

BackendConfig Config::backend_config() const {
    BackendConfig cfg;
    cfg.endpoint_url = get("backend.endpoint_url");
    cfg.model_name = get("backend.model_name");
    cfg.api_key_env_var = get("backend.api_key_env_var");
    cfg.temperature = get_double("backend.temperature");
    cfg.max_new_tokens = get_int("backend.max_new_tokens");
    cfg.request_timeout = std::chrono::milliseconds(get_int("backend.request_timeout_ms"));
    cfg.max_retries = get_int("backend.max_retries");
    cfg.retry_initial_delay_ms = get_int("backend.retry_initial_delay_ms");
    cfg.max_concurrency = get_int("backend.max_concurrency");
    return cfg;
}

FlipConfig Config::flip_config() const {
    FlipConfig cfg;
    cfg.metric = metric_kind_from_string(get("flip.metric"));
    cfg.prompt_variant = prompt_variant_from_string(get("flip.prompt_variant"));
    cfg.context_mode = context_mode_from_string(get("flip.context_mode"));
    const std::string& norm = get("flip.instruction_normalization");
    if (norm == "qa") cfg.instruction_norm = InstructionNorm::qa;
    else if (norm == "plain") cfg.instruction_norm = InstructionNorm::plain;
    else throw ConfigError("flip.instruction_normalization must be qa or plain");
    cfg.workers = get_int("eval.workers");
    return cfg;
}

JudgeConfig Config::judge_config() const {
    JudgeConfig cfg;
    cfg.prompt_variant = prompt_variant_from_string(get("judge.prompt_variant"));
    cfg.shuffle_candidates = get_bool("judge.shuffle_candidates");
    cfg.shuffle_seed = get_u64("judge.shuffle_seed");
    cfg.workers = get_int("eval.workers");
    return cfg;
}

EvalOptions Config::eval_options() const {
    EvalOptions options;
    options.runs = get_int("eval.runs");
    options.seed = get_u64("eval.seed");
    options.workers = get_int("eval.workers");
    return options;
}

ServiceConfig Config::service_config() const {
    ServiceConfig cfg;
    cfg.bind_address = get("service.bind_address");
    cfg.port = get_int("service.port");
    cfg.method = method_from_string(get("service.method"));
    cfg.max_concurrent_requests = get_int("service.max_concurrent_requests");
    cfg.request_timeout_ms = get_int("service.request_timeout_ms");
    cfg.max_response_chars =
        static_cast<std::size_t>(get_int("service.max_response_chars"));
    cfg.validate();
    return cfg;
}

std::string Config::echo_json() const {
    nlohmann::json out;
    for (const auto& [key, value] : values_) out[key] = value;
    return out.dump();
}

Runtime make_runtime(const Config& config) {
    Runtime runtime;
    BackendConfig backend_cfg = config.backend_config();
    const std::string& kind = config.get("backend.kind");
    if (kind == "mock") {
        const std::string& script = config.get("backend.script");
        if (script.empty()) {
            throw ConfigError("backend.kind=mock needs backend.script");
        }
        runtime.backend = std::make_unique<MockBackend>(
            MockBackend::from_script_file(script, backend_cfg));
    } else if (kind == "http") {
        runtime.backend = std::make_unique<HttpBackend>(backend_cfg);
    } else {
        throw ConfigError("backend.kind must be http or mock");
    }
    const std::string& cache_dir = config.get("cache.dir");
    if (!cache_dir.empty()) {
        runtime.cache = std::make_unique<CompletionCache>(cache_dir);
    }
    const std::string& template_dir = config.get("templates.dir");
    if (!template_dir.empty()) {
        runtime.prompts.load_overrides(template_dir);
    }
    runtime.flip_cfg = config.flip_config();
    runtime.judge_cfg = config.judge_config();
    return runtime;
}

}  // namespace flipeval
