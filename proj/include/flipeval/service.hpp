#pragma once

#include <memory>
#include <string>

#include "flipeval/backend.hpp"
#include "flipeval/cache.hpp"
#include "flipeval/eval.hpp"

namespace flipeval {

struct ServiceConfig {
    std::string bind_address = "127.0.0.1";
    int port = 8080;  // 0 binds an ephemeral port
    Method method = Method::flip;
    int max_concurrent_requests = 8;
    int request_timeout_ms = 60000;
    std::size_t max_response_chars = 100000;

    /// Listwise/pairwise cannot score a single rollout; only flip and
    /// pointwise are servable.
    void validate() const;
};

/// HTTP scoring service:
///   POST /v1/reward  {user_prompt, system_prompt?, history?, response}
///   POST /v1/rank    {user_prompt, system_prompt?, history?, responses: [...]}
///   GET  /healthz
/// Stateless request handling over the shared completion cache; responses
/// match direct library calls field for field. Excess load beyond
/// max_concurrent_requests answers 429, per-request timeouts answer 504.
class RewardService {
public:
    RewardService(ServiceConfig cfg, ChatBackend& backend,
                  const PromptLibrary& prompts, FlipConfig flip_cfg,
                  JudgeConfig judge_cfg, CompletionCache* cache);
    ~RewardService();

    RewardService(const RewardService&) = delete;
    RewardService& operator=(const RewardService&) = delete;

    /// Bind and serve on a background thread; returns false if the bind
    /// failed. port() reports the actual port afterwards.
    bool start();
    void stop();
    int port() const;

    /// Serve on the calling thread (CLI mode).
    bool run();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace flipeval
