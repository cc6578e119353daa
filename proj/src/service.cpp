#include "flipeval/service.hpp"

#include <atomic>
#include <future>
#include <semaphore>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "flipeval/flip_scorer.hpp"
#include "flipeval/judges.hpp"

namespace flipeval {

using json = nlohmann::json;

void ServiceConfig::validate() const {
    if (method == Method::listwise || method == Method::pairwise) {
        throw std::invalid_argument(
            "service method must be flip or pointwise; listwise/pairwise "
            "cannot score a single response");
    }
    if (max_concurrent_requests < 1) {
        throw std::invalid_argument("max_concurrent_requests must be >= 1");
    }
}

struct RewardService::Impl {
    ServiceConfig cfg;
    ChatBackend& backend;
    const PromptLibrary& prompts;
    FlipConfig flip_cfg;
    JudgeConfig judge_cfg;
    CompletionCache* cache;
    httplib::Server server;
    std::thread listener;
    std::counting_semaphore<4096> slots;
    std::atomic<int> inflight{0};
    int bound_port = 0;

    Impl(ServiceConfig cfg_in, ChatBackend& backend_in,
         const PromptLibrary& prompts_in, FlipConfig flip_in,
         JudgeConfig judge_in, CompletionCache* cache_in)
        : cfg(std::move(cfg_in)),
          backend(backend_in),
          prompts(prompts_in),
          flip_cfg(flip_in),
          judge_cfg(judge_in),
          cache(cache_in),
          slots(std::min(cfg.max_concurrent_requests, 4096)) {}

    static void reply_error(httplib::Response& res, int status,
                            const std::string& code, const std::string& message) {
        json body{{"code", code}, {"message", message}};
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    InstructionContext parse_instruction(const json& body) const {
        std::optional<std::string> system_prompt;
        if (body.contains("system_prompt") && body["system_prompt"].is_string()) {
            system_prompt = body["system_prompt"].get<std::string>();
        }
        std::vector<HistoryTurn> history;
        if (body.contains("history")) {
            for (const auto& turn : body["history"]) {
                history.push_back({turn.at("role").get<std::string>(),
                                   turn.at("text").get<std::string>()});
            }
        }
        if (!body.contains("user_prompt") || !body["user_prompt"].is_string()) {
            throw std::invalid_argument("user_prompt is required");
        }
        return InstructionContext::make(std::move(system_prompt),
                                        body["user_prompt"].get<std::string>(),
                                        std::move(history));
    }

    // Tail truncation against huge rollouts; flagged in the reply.
    std::string clip_response(const std::string& text, bool& truncated) const {
        if (text.size() <= cfg.max_response_chars) {
            truncated = false;
            return text;
        }
        truncated = true;
        return text.substr(0, cfg.max_response_chars);
    }

    json score_one(const InstructionContext& instruction,
                   const CandidateResponse& response, bool truncated) const {
        RewardResult result;
        if (cfg.method == Method::flip) {
            result = flip_reward(backend, prompts, flip_cfg, instruction,
                                 response, cache);
        } else {
            result = pointwise_rate(backend, prompts, judge_cfg, instruction,
                                    response, cache);
        }
        json out;
        out["reward"] = result.value;
        out["scale"] = result.scale == RewardScale::unit_interval
                           ? "unit_interval"
                           : "judge_1_to_10";
        out["parse_status"] =
            result.parse_status == ParseStatus::ok ? "ok" : "format_error";
        if (result.inferred_instruction) {
            out["inferred_instruction"] = *result.inferred_instruction;
        }
        out["truncated"] = truncated;
        return out;
    }

    json rank_many(const InstructionContext& instruction,
                   const std::vector<CandidateResponse>& responses) const {
        RankingResult ranking;
        if (cfg.method == Method::flip) {
            ranking = flip_rank(backend, prompts, flip_cfg, instruction,
                                responses, cache);
        } else {
            std::vector<double> scores;
            scores.reserve(responses.size());
            for (const auto& response : responses) {
                scores.push_back(pointwise_rate(backend, prompts, judge_cfg,
                                                instruction, response, cache)
                                     .value);
            }
            ranking = rank_scores(std::move(scores));
        }
        json out;
        out["order"] = ranking.order;
        out["scores"] = ranking.scores;
        out["unique_top"] = ranking.unique_top;
        return out;
    }

    // Gate by capacity, score on a tracked worker behind a watchdog, and
    // translate errors. A timed-out request answers 504 immediately; its
    // worker keeps the capacity slot until the backend call finishes (the
    // backend really is still busy) and is drained before shutdown.
    void guarded(const httplib::Request& req, httplib::Response& res,
                 const std::function<json(const json&)>& handler) {
        if (!slots.try_acquire()) {
            reply_error(res, 429, "over_capacity",
                        "too many concurrent requests");
            return;
        }
        json body = json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.is_object()) {
            slots.release();
            reply_error(res, 400, "schema_error", "body is not a JSON object");
            return;
        }
        auto outcome = std::make_shared<std::promise<json>>();
        auto ready = outcome->get_future();
        inflight.fetch_add(1);
        std::thread([this, handler, body = std::move(body), outcome] {
            try {
                outcome->set_value(handler(body));
            } catch (...) {
                outcome->set_exception(std::current_exception());
            }
            slots.release();
            inflight.fetch_sub(1);
        }).detach();

        if (ready.wait_for(std::chrono::milliseconds(cfg.request_timeout_ms)) !=
            std::future_status::ready) {
            reply_error(res, 504, "timeout", "request timed out");
            return;
        }
        try {
            res.set_content(ready.get().dump(), "application/json");
        } catch (const std::invalid_argument& e) {
            reply_error(res, 400, "schema_error", e.what());
        } catch (const nlohmann::json::exception& e) {
            reply_error(res, 400, "schema_error", e.what());
        } catch (const BackendError& e) {
            reply_error(res, 502, "backend_error", e.what());
        } catch (const std::exception& e) {
            reply_error(res, 500, "internal_error", e.what());
        }
    }

    void drain_workers() {
        while (inflight.load() > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(1));
        }
    }

    void install_routes() {
        server.Post("/v1/reward", [this](const httplib::Request& req,
                                         httplib::Response& res) {
            guarded(req, res, [this](const json& body) {
                auto instruction = parse_instruction(body);
                if (!body.contains("response") || !body["response"].is_string()) {
                    throw std::invalid_argument("response is required");
                }
                bool truncated = false;
                auto text = clip_response(body["response"].get<std::string>(),
                                          truncated);
                return score_one(instruction, CandidateResponse::make(text),
                                 truncated);
            });
        });

        server.Post("/v1/rank", [this](const httplib::Request& req,
                                       httplib::Response& res) {
            guarded(req, res, [this](const json& body) {
                auto instruction = parse_instruction(body);
                if (!body.contains("responses") || !body["responses"].is_array() ||
                    body["responses"].size() < 2) {
                    throw std::invalid_argument("responses must list >= 2 texts");
                }
                std::vector<CandidateResponse> responses;
                bool any_truncated = false;
                for (const auto& item : body["responses"]) {
                    if (!item.is_string()) {
                        throw std::invalid_argument("responses must be strings");
                    }
                    bool truncated = false;
                    responses.push_back(CandidateResponse::make(
                        clip_response(item.get<std::string>(), truncated)));
                    any_truncated |= truncated;
                }
                json out = rank_many(instruction, responses);
                out["truncated"] = any_truncated;
                return out;
            });
        });

        server.Get("/healthz", [this](const httplib::Request&,
                                      httplib::Response& res) {
            bool reachable = backend.probe();
            json out;
            out["status"] = reachable ? "ok" : "degraded";
            out["backend_reachable"] = reachable;
            out["cache_entries"] =
                cache ? static_cast<std::int64_t>(cache->entry_count()) : 0;
            res.set_content(out.dump(), "application/json");
        });
    }
};

RewardService::RewardService(ServiceConfig cfg, ChatBackend& backend,
                             const PromptLibrary& prompts, FlipConfig flip_cfg,
                             JudgeConfig judge_cfg, CompletionCache* cache) {
    cfg.validate();
    impl_ = std::make_unique<Impl>(std::move(cfg), backend, prompts, flip_cfg,
                                   judge_cfg, cache);
    impl_->install_routes();
}

RewardService::~RewardService() { stop(); }

bool RewardService::start() {
    if (impl_->cfg.port == 0) {
        impl_->bound_port =
            impl_->server.bind_to_any_port(impl_->cfg.bind_address);
        if (impl_->bound_port <= 0) return false;
    } else {
        if (!impl_->server.bind_to_port(impl_->cfg.bind_address,
                                        impl_->cfg.port)) {
            return false;
        }
        impl_->bound_port = impl_->cfg.port;
    }
    impl_->listener = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return true;
}

void RewardService::stop() {
    if (impl_ && impl_->server.is_running()) {
        impl_->server.stop();
    }
    if (impl_ && impl_->listener.joinable()) {
        impl_->listener.join();
    }
    if (impl_) impl_->drain_workers();
}

int RewardService::port() const { return impl_->bound_port; }

bool RewardService::run() {
    impl_->bound_port = impl_->cfg.port;
    return impl_->server.listen(impl_->cfg.bind_address, impl_->cfg.port);
}

}  // namespace flipeval
