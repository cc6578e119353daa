#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>

#include "flipeval/backend.hpp"
#include "flipeval/cache.hpp"
#include "flipeval/eval.hpp"
#include "flipeval/service.hpp"

namespace flipeval {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Flat "section.key = value" configuration with a closed key registry.
/// Precedence: command-line overrides > config file > built-in defaults.
/// Unknown keys are rejected up front, before any backend is constructed.
class Config {
public:
    Config();  // defaults

    void load_file(const std::filesystem::path& path);
    void apply_override(const std::string& key_equals_value);
    void set(const std::string& key, const std::string& value);

    const std::string& get(const std::string& key) const;
    int get_int(const std::string& key) const;
    double get_double(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;

    BackendConfig backend_config() const;
    FlipConfig flip_config() const;
    JudgeConfig judge_config() const;
    EvalOptions eval_options() const;
    ServiceConfig service_config() const;

    /// The resolved configuration as a JSON object string, embedded in every
    /// report header so runs are reconstructable.
    std::string echo_json() const;

private:
    std::map<std::string, std::string> values_;
};

/// Everything a subcommand needs at run time, built from the resolved config.
struct Runtime {
    std::unique_ptr<ChatBackend> backend;
    std::unique_ptr<CompletionCache> cache;
    PromptLibrary prompts;
    FlipConfig flip_cfg;
    JudgeConfig judge_cfg;

    CompletionCache* cache_ptr() const { return cache.get(); }
};

/// Construct the backend (http or scripted mock), cache, and prompt library.
/// Performs no network I/O.
Runtime make_runtime(const Config& config);

}  // namespace flipeval
