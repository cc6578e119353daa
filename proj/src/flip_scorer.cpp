#include "flipeval/flip_scorer.hpp"

#include <charconv>

#include "flipeval/parallel.hpp"

namespace flipeval {

ContextMode context_mode_from_string(const std::string& name) {
    if (name == "none") return ContextMode::none;
    if (name == "user_prompt_as_context") return ContextMode::user_prompt_as_context;
    if (name == "history_as_context") return ContextMode::history_as_context;
    throw std::invalid_argument("unknown context mode: " + name);
}

std::string to_string(ContextMode mode) {
    switch (mode) {
        case ContextMode::none: return "none";
        case ContextMode::user_prompt_as_context: return "user_prompt_as_context";
        case ContextMode::history_as_context: return "history_as_context";
    }
    return "?";
}

namespace {

const char* kUserContextNote =
    "\n\n- The user prompt is given as additional context. Infer only the "
    "system prompt that, together with the user prompt, would produce the "
    "response.";

const char* kHistoryContextNote =
    "\n\n- The conversation history is given as additional context. Infer the "
    "final user instruction that produced the response.";

std::string flatten_history(const InstructionContext& ctx) {
    std::string out;
    for (const auto& turn : ctx.history) {
        out += turn.role;
        out += ": ";
        out += turn.text;
        out += '\n';
    }
    if (!out.empty()) out.pop_back();
    return out;
}

std::string comparison_target(const FlipConfig& cfg,
                              const InstructionContext& instruction) {
    switch (cfg.context_mode) {
        case ContextMode::none:
            return instruction.raw;
        case ContextMode::user_prompt_as_context:
            return instruction.system_prompt.value_or("");
        case ContextMode::history_as_context:
            return instruction.user_prompt;
    }
    return instruction.raw;
}

double score_similarity(const FlipConfig& cfg, const std::string& target,
                        const std::string& inferred) {
    if (cfg.instruction_norm == InstructionNorm::qa) {
        return instruction_similarity(cfg.metric, target, inferred);
    }
    return similarity(cfg.metric, target, inferred);
}

}  // namespace

std::vector<ChatTurn> build_flip_messages(const PromptLibrary& prompts,
                                          const FlipConfig& cfg,
                                          const CandidateResponse& response,
                                          const InstructionContext* context) {
    const auto& tmpl = prompts.get(PromptKind::flip_infer, cfg.prompt_variant);
    std::string system = tmpl.system;
    std::string user = render_template(tmpl.user, {{"response", response.text}});
    switch (cfg.context_mode) {
        case ContextMode::none:
            break;
        case ContextMode::user_prompt_as_context: {
            system += kUserContextNote;
            std::string block = "[User Prompt]\n\n";
            block += context ? context->user_prompt : "";
            block += "\n\n";
            user = block + user;
            break;
        }
        case ContextMode::history_as_context: {
            system += kHistoryContextNote;
            std::string block = "[Conversation History]\n\n";
            block += context ? flatten_history(*context) : "";
            block += "\n\n";
            user = block + user;
            break;
        }
    }
    return {{ChatRole::system, std::move(system)},
            {ChatRole::user, std::move(user)}};
}

InferenceOutcome infer_instruction(ChatBackend& backend,
                                   const PromptLibrary& prompts,
                                   const FlipConfig& cfg,
                                   const CandidateResponse& response,
                                   const InstructionContext* context,
                                   CompletionCache* cache) {
    auto messages = build_flip_messages(prompts, cfg, response, context);
    InferenceOutcome outcome;
    outcome.raw = cached_complete(backend, messages, cache);
    auto parsed = parse_structured(outcome.raw, ReplySchema::inferred_instruction);
    if (parsed.ok()) outcome.instruction = parsed.reply.text();
    return outcome;
}

RewardResult flip_reward(ChatBackend& backend, const PromptLibrary& prompts,
                         const FlipConfig& cfg,
                         const InstructionContext& instruction,
                         const CandidateResponse& response,
                         CompletionCache* cache) {
    RewardResult result;
    result.scale = RewardScale::unit_interval;

    auto outcome = infer_instruction(backend, prompts, cfg, response,
                                     &instruction, cache);
    result.raw_model_output = outcome.raw;
    if (!outcome.instruction) {
        result.parse_status = ParseStatus::format_error;
        result.value = 0.0;
        return result;
    }
    result.inferred_instruction = outcome.instruction;

    const std::string target = comparison_target(cfg, instruction);
    if (cfg.metric == MetricKind::lm_judge_similarity) {
        result.value = lm_similarity(backend, prompts, cfg, target,
                                     *outcome.instruction, cache);
    } else {
        result.value = score_similarity(cfg, target, *outcome.instruction);
    }
    return result;
}

double lm_similarity(ChatBackend& backend, const PromptLibrary& prompts,
                     const FlipConfig& cfg, const std::string& x,
                     const std::string& x_prime, CompletionCache* cache) {
    const auto& tmpl = prompts.get(PromptKind::lm_similarity, cfg.prompt_variant);
    std::vector<ChatTurn> messages{
        {ChatRole::system, tmpl.system},
        {ChatRole::user, render_template(tmpl.user, {{"instruction_a", x},
                                                     {"instruction_b", x_prime}})}};
    std::string raw = cached_complete(backend, messages, cache);
    auto parsed = parse_structured(raw, ReplySchema::similarity_0_1);
    if (!parsed.ok()) return 0.0;
    return parsed.reply.similarity();
}

RankingResult flip_rank(ChatBackend& backend, const PromptLibrary& prompts,
                        const FlipConfig& cfg,
                        const InstructionContext& instruction,
                        const std::vector<CandidateResponse>& candidates,
                        CompletionCache* cache) {
    if (candidates.size() < 2) {
        throw std::invalid_argument("flip_rank needs at least 2 candidates");
    }
    std::vector<double> scores(candidates.size(), 0.0);
    parallel_for(static_cast<int>(candidates.size()), cfg.workers, [&](int i) {
        scores[i] = flip_reward(backend, prompts, cfg, instruction,
                                candidates[i], cache)
                        .value;
    });
    return rank_scores(std::move(scores));
}

}  // namespace flipeval
