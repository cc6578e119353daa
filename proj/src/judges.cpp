#include "flipeval/judges.hpp"

#include <algorithm>
#include <random>

#include "flipeval/parallel.hpp"

namespace flipeval {

namespace {

std::string render_response_list(const std::vector<CandidateResponse>& candidates,
                                 const std::vector<int>& presentation) {
    std::string out;
    for (size_t pos = 0; pos < presentation.size(); ++pos) {
        out += "[Response " + std::to_string(pos) + "]\n";
        out += candidates[presentation[pos]].text;
        out += "\n\n";
    }
    if (!out.empty()) {
        out.pop_back();
        out.pop_back();
    }
    return out;
}

}  // namespace

std::vector<int> listwise_presentation(const JudgeConfig& cfg, int n) {
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    if (cfg.shuffle_candidates) {
        std::mt19937_64 rng(cfg.shuffle_seed);
        std::shuffle(order.begin(), order.end(), rng);
    }
    return order;
}

RewardResult pointwise_rate(ChatBackend& backend, const PromptLibrary& prompts,
                            const JudgeConfig& cfg,
                            const InstructionContext& instruction,
                            const CandidateResponse& response,
                            CompletionCache* cache) {
    const auto& tmpl = prompts.get(PromptKind::pointwise, cfg.prompt_variant);
    std::vector<ChatTurn> messages{
        {ChatRole::system, tmpl.system},
        {ChatRole::user, render_template(tmpl.user, {{"prompt", instruction.raw},
                                                     {"response", response.text}})}};
    RewardResult result;
    result.scale = RewardScale::judge_1_to_10;
    result.raw_model_output = cached_complete(backend, messages, cache);
    auto parsed = parse_structured(result.raw_model_output,
                                   ReplySchema::score_1_10);
    if (!parsed.ok()) {
        result.parse_status = ParseStatus::format_error;
        result.value = 0.0;  // reserved for format errors on this scale
        return result;
    }
    result.value = parsed.reply.score();
    return result;
}

ListwiseOutcome listwise_best(ChatBackend& backend, const PromptLibrary& prompts,
                              const JudgeConfig& cfg,
                              const InstructionContext& instruction,
                              const std::vector<CandidateResponse>& candidates,
                              CompletionCache* cache) {
    if (candidates.size() < 2) {
        throw std::invalid_argument("listwise_best needs at least 2 candidates");
    }
    auto presentation = listwise_presentation(cfg, static_cast<int>(candidates.size()));
    const auto& tmpl = prompts.get(PromptKind::listwise, cfg.prompt_variant);
    std::vector<ChatTurn> messages{
        {ChatRole::system, tmpl.system},
        {ChatRole::user,
         render_template(tmpl.user,
                         {{"prompt", instruction.raw},
                          {"response_list",
                           render_response_list(candidates, presentation)}})}};
    ListwiseOutcome outcome;
    outcome.raw = cached_complete(backend, messages, cache);
    auto parsed = parse_structured(outcome.raw, ReplySchema::best_index);
    if (!parsed.ok()) return outcome;
    int position = parsed.reply.index();
    if (position >= static_cast<int>(candidates.size())) return outcome;
    outcome.index = presentation[position];
    return outcome;
}

PairPreference pairwise_prefer(ChatBackend& backend, const PromptLibrary& prompts,
                               const JudgeConfig& cfg,
                               const InstructionContext& instruction,
                               const CandidateResponse& first,
                               const CandidateResponse& second,
                               CompletionCache* cache) {
    const auto& tmpl = prompts.get(PromptKind::pairwise, cfg.prompt_variant);
    std::vector<ChatTurn> messages{
        {ChatRole::system, tmpl.system},
        {ChatRole::user, render_template(tmpl.user, {{"prompt", instruction.raw},
                                                     {"response1", first.text},
                                                     {"response2", second.text}})}};
    std::string raw = cached_complete(backend, messages, cache);
    auto parsed = parse_structured(raw, ReplySchema::better_ab);
    if (!parsed.ok()) return PairPreference::invalid;
    return parsed.reply.choice() == 'A' ? PairPreference::first
                                        : PairPreference::second;
}

RankingResult pairwise_tournament(ChatBackend& backend,
                                  const PromptLibrary& prompts,
                                  const JudgeConfig& cfg,
                                  const InstructionContext& instruction,
                                  const std::vector<CandidateResponse>& candidates,
                                  CompletionCache* cache) {
    const int n = static_cast<int>(candidates.size());
    if (n < 2) {
        throw std::invalid_argument("pairwise_tournament needs at least 2 candidates");
    }
    struct Pair {
        int lo, hi;
    };
    std::vector<Pair> pairs;
    pairs.reserve(static_cast<size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) pairs.push_back({i, j});
    }

    // winners[k] = candidate index or -1; filled independently per pair so the
    // vote totals cannot depend on completion order.
    std::vector<int> winners(pairs.size(), -1);
    parallel_for(static_cast<int>(pairs.size()), cfg.workers, [&](int k) {
        auto [lo, hi] = pairs[k];
        int side_a = lo, side_b = hi;
        if (cfg.shuffle_candidates) {
            // Per-pair seeded coin, independent of scheduling.
            std::uint64_t coin = derive_seed(cfg.shuffle_seed,
                                             static_cast<std::uint64_t>(lo) * 1000003 + hi);
            if (coin & 1) std::swap(side_a, side_b);
        }
        PairPreference pref;
        try {
            pref = pairwise_prefer(backend, prompts, cfg, instruction,
                                   candidates[side_a], candidates[side_b], cache);
        } catch (const BackendError&) {
            pref = PairPreference::invalid;  // the tournament completes
        }
        if (pref == PairPreference::first) winners[k] = side_a;
        else if (pref == PairPreference::second) winners[k] = side_b;
    });

    std::vector<double> votes(n, 0.0);
    for (int winner : winners) {
        if (winner >= 0) votes[winner] += 1.0;
    }
    return rank_scores(std::move(votes));
}

}  // namespace flipeval
