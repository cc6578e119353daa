#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace flipeval {

/// One prior turn of a conversation.
struct HistoryTurn {
    std::string role;
    std::string text;
};

/// An instruction x: optional system prompt, prior turns, and the user prompt.
/// `raw` is the canonical flattened text used for similarity comparison and
/// cache keys. Build instances through `make()` so the invariants hold.
struct InstructionContext {
    std::optional<std::string> system_prompt;
    std::string user_prompt;
    std::vector<HistoryTurn> history;
    std::string raw;

    static InstructionContext make(std::optional<std::string> system_prompt,
                                   std::string user_prompt,
                                   std::vector<HistoryTurn> history = {});
};

/// Canonical flattening: history turns as "role: text" lines, then the system
/// prompt as a "system: " line when present, then the user prompt.
std::string flatten_instruction(const InstructionContext& ctx);

/// A candidate response y plus free-form metadata (generator, length_class,
/// task_correct for best-of-N ground truth).
struct CandidateResponse {
    std::string text;
    std::map<std::string, std::string> meta;

    static CandidateResponse make(std::string text,
                                  std::map<std::string, std::string> meta = {});

    std::optional<bool> task_correct() const;
    std::optional<std::string> meta_value(const std::string& key) const;
};

enum class RewardScale { unit_interval, judge_1_to_10 };
enum class ParseStatus { ok, format_error };

/// Scalar reward plus provenance. A format error always forces value 0.
struct RewardResult {
    double value = 0.0;
    RewardScale scale = RewardScale::unit_interval;
    std::optional<std::string> inferred_instruction;
    std::string raw_model_output;
    ParseStatus parse_status = ParseStatus::ok;
};

/// Permutation over candidate indices, best first, plus the per-candidate
/// scores (indexed by original candidate position). unique_top is true iff
/// the maximum score is attained by exactly one candidate.
struct RankingResult {
    std::vector<int> order;
    std::vector<double> scores;
    bool unique_top = false;
};

/// Sort scores non-increasingly with stable index tie-break.
RankingResult rank_scores(std::vector<double> scores);

/// One benchmark instance: instruction, >= 2 candidates, index of the
/// human-preferred candidate, and a subset label for reporting.
struct EvalInstance {
    std::string id;
    InstructionContext instruction;
    std::vector<CandidateResponse> candidates;
    int chosen_index = 0;
    std::string subset;

    void validate() const;  // throws std::invalid_argument
};

/// splitmix64 step; used everywhere a sub-seed is derived so that derived
/// streams are stable across platforms and independent of execution order.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt);

}  // namespace flipeval
