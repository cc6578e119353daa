#include "flipeval/core.hpp"

#include <algorithm>
#include <numeric>

namespace flipeval {

namespace {

std::string trimmed(const std::string& s) {
    auto begin = s.find_first_not_of(" \t\r\n\f\v");
    if (begin == std::string::npos) return "";
    auto end = s.find_last_not_of(" \t\r\n\f\v");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

std::string flatten_instruction(const InstructionContext& ctx) {
    std::string out;
    for (const auto& turn : ctx.history) {
        out += turn.role;
        out += ": ";
        out += turn.text;
        out += '\n';
    }
    if (ctx.system_prompt) {
        out += "system: ";
        out += *ctx.system_prompt;
        out += '\n';
    }
    out += ctx.user_prompt;
    return out;
}

InstructionContext InstructionContext::make(std::optional<std::string> system_prompt,
                                            std::string user_prompt,
                                            std::vector<HistoryTurn> history) {
    if (trimmed(user_prompt).empty()) {
        throw std::invalid_argument("instruction user_prompt is empty");
    }
    InstructionContext ctx;
    ctx.system_prompt = std::move(system_prompt);
    ctx.user_prompt = std::move(user_prompt);
    ctx.history = std::move(history);
    ctx.raw = flatten_instruction(ctx);
    return ctx;
}

CandidateResponse CandidateResponse::make(std::string text,
                                          std::map<std::string, std::string> meta) {
    if (trimmed(text).empty()) {
        throw std::invalid_argument("candidate response text is empty");
    }
    return CandidateResponse{std::move(text), std::move(meta)};
}

std::optional<bool> CandidateResponse::task_correct() const {
    auto it = meta.find("task_correct");
    if (it == meta.end()) return std::nullopt;
    return it->second == "true" || it->second == "1";
}

std::optional<std::string> CandidateResponse::meta_value(const std::string& key) const {
    auto it = meta.find(key);
    if (it == meta.end()) return std::nullopt;
    return it->second;
}

RankingResult rank_scores(std::vector<double> scores) {
    RankingResult result;
    result.order.resize(scores.size());
    std::iota(result.order.begin(), result.order.end(), 0);
    std::stable_sort(result.order.begin(), result.order.end(),
                     [&](int a, int b) { return scores[a] > scores[b]; });
    if (!scores.empty()) {
        double top = scores[result.order.front()];
        result.unique_top =
            std::count(scores.begin(), scores.end(), top) == 1;
    }
    result.scores = std::move(scores);
    return result;
}

void EvalInstance::validate() const {
    if (candidates.size() < 2) {
        throw std::invalid_argument("instance needs at least 2 candidates");
    }
    if (chosen_index < 0 || chosen_index >= static_cast<int>(candidates.size())) {
        throw std::invalid_argument("chosen_index out of range");
    }
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace flipeval
