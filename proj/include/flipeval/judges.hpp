#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flipeval/backend.hpp"
#include "flipeval/cache.hpp"
#include "flipeval/core.hpp"
#include "flipeval/prompts.hpp"

namespace flipeval {

struct JudgeConfig {
    PromptVariant prompt_variant = PromptVariant::v1;
    bool shuffle_candidates = false;   // listwise presentation / pairwise sides
    std::uint64_t shuffle_seed = 0;    // ignored unless shuffle_candidates
    int workers = 4;
};

/// Absolute 1-10 rating of a single response; format errors score 0 with
/// parse_status = format_error.
RewardResult pointwise_rate(ChatBackend& backend, const PromptLibrary& prompts,
                            const JudgeConfig& cfg,
                            const InstructionContext& instruction,
                            const CandidateResponse& response,
                            CompletionCache* cache);

struct ListwiseOutcome {
    std::optional<int> index;  // original candidate index; nullopt = invalid
    std::string raw;
};

/// One prompt over all candidates; the returned index is mapped back through
/// the (optional, seeded) presentation shuffle. A malformed reply or an index
/// outside the candidate list yields no index.
ListwiseOutcome listwise_best(ChatBackend& backend, const PromptLibrary& prompts,
                              const JudgeConfig& cfg,
                              const InstructionContext& instruction,
                              const std::vector<CandidateResponse>& candidates,
                              CompletionCache* cache);

enum class PairPreference { first, second, invalid };

/// A/B comparison of two responses.
PairPreference pairwise_prefer(ChatBackend& backend, const PromptLibrary& prompts,
                               const JudgeConfig& cfg,
                               const InstructionContext& instruction,
                               const CandidateResponse& first,
                               const CandidateResponse& second,
                               CompletionCache* cache);

/// Single round-robin: every unordered pair compared once (A = lower index
/// unless shuffle_candidates randomizes sides per pair). Each win grants one
/// vote; invalid comparisons grant none. Scores are vote counts.
RankingResult pairwise_tournament(ChatBackend& backend,
                                  const PromptLibrary& prompts,
                                  const JudgeConfig& cfg,
                                  const InstructionContext& instruction,
                                  const std::vector<CandidateResponse>& candidates,
                                  CompletionCache* cache);

/// Presentation order for n candidates under the given seed (identity when
/// shuffling is off). position -> original index.
std::vector<int> listwise_presentation(const JudgeConfig& cfg, int n);

}  // namespace flipeval
