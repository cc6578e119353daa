#pragma once

#include <optional>
#include <string>
#include <vector>

#include "flipeval/backend.hpp"
#include "flipeval/cache.hpp"
#include "flipeval/core.hpp"
#include "flipeval/metrics.hpp"
#include "flipeval/prompts.hpp"

namespace flipeval {

enum class ContextMode { none, user_prompt_as_context, history_as_context };

ContextMode context_mode_from_string(const std::string& name);
std::string to_string(ContextMode mode);

/// Which token normalization the reward applies when comparing instructions.
/// `qa` (default) additionally drops English articles, the extractive-QA
/// answer-matching convention; `plain` is normalize_tokens alone.
enum class InstructionNorm { qa, plain };

struct FlipConfig {
    MetricKind metric = MetricKind::word_f1;
    PromptVariant prompt_variant = PromptVariant::v1;
    ContextMode context_mode = ContextMode::none;
    InstructionNorm instruction_norm = InstructionNorm::qa;
    int workers = 4;
};

/// Raw model output plus the extracted instruction; instruction is empty on
/// a format error.
struct InferenceOutcome {
    std::string raw;
    std::optional<std::string> instruction;
};

/// Build the reconstruction request for a response under the configured
/// context mode. Exposed so dry runs can show the exact request plan.
std::vector<ChatTurn> build_flip_messages(const PromptLibrary& prompts,
                                          const FlipConfig& cfg,
                                          const CandidateResponse& response,
                                          const InstructionContext* context);

/// One greedy decode of the instruction that would most plausibly produce
/// the response. Backend errors propagate; a malformed reply yields an
/// outcome without an instruction.
InferenceOutcome infer_instruction(ChatBackend& backend,
                                   const PromptLibrary& prompts,
                                   const FlipConfig& cfg,
                                   const CandidateResponse& response,
                                   const InstructionContext* context,
                                   CompletionCache* cache);

/// Reward = similarity(target, inferred instruction). The comparison target
/// depends on the context mode: the full flattened instruction by default,
/// the system prompt when the user prompt is context, the final user turn
/// when the history is context. Format errors produce reward 0.
RewardResult flip_reward(ChatBackend& backend, const PromptLibrary& prompts,
                         const FlipConfig& cfg,
                         const InstructionContext& instruction,
                         const CandidateResponse& response,
                         CompletionCache* cache);

/// Prompt the backend itself for a 0-1 similarity verdict between two
/// instructions; a malformed or out-of-range reply scores 0.
double lm_similarity(ChatBackend& backend, const PromptLibrary& prompts,
                     const FlipConfig& cfg, const std::string& x,
                     const std::string& x_prime, CompletionCache* cache);

/// Score every candidate with flip_reward (concurrently up to cfg.workers)
/// and rank descending with stable index tie-break. A per-candidate format
/// error scores 0 without aborting the ranking.
RankingResult flip_rank(ChatBackend& backend, const PromptLibrary& prompts,
                        const FlipConfig& cfg,
                        const InstructionContext& instruction,
                        const std::vector<CandidateResponse>& candidates,
                        CompletionCache* cache);

}  // namespace flipeval
