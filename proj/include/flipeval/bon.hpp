#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "flipeval/core.hpp"
#include "flipeval/eval.hpp"

namespace flipeval {

/// One best-of-N task: a prompt and N completions, each carrying a
/// task_correct ground-truth label produced upstream.
struct BonTask {
    InstructionContext instruction;
    std::vector<CandidateResponse> completions;

    void validate() const;  // every completion must carry task_correct
};

/// Load tasks from the dataset schema (chosen_index ignored; task_correct
/// required per completion).
std::vector<BonTask> load_bon_tasks(const std::filesystem::path& path);

/// Argmax with stable lowest-index tie-break.
int select_best(const std::vector<double>& scores);

/// The seeded size-n subset for (task, trial): the first n elements of a
/// per-(task, trial) random permutation, returned sorted by original index.
/// Prefixes nest as n grows, so oracle accuracy is monotone in n for a fixed
/// seed schedule.
std::vector<int> bon_subset(std::uint64_t seed, int task_index, int trial,
                            int n, int total);

/// Scores (or picks) a completion subset; the same shape as
/// RewardMethod::assess so methods and synthetic oracles interchange.
using BonScorer = std::function<MethodOutcome(
    const InstructionContext&, const std::vector<CandidateResponse>&,
    std::uint64_t seed)>;

struct BonCurveRow {
    int n = 0;
    int trial = 0;
    double accuracy = 0.0;
};

struct BonCurve {
    std::map<int, double> accuracy;  // N -> mean accuracy over trials
    std::vector<BonCurveRow> rows;   // per-trial values, CSV-ready
    int excluded_tasks = 0;          // N exceeded a task's completion count
};

/// For each N and trial, draw a seeded subset of each task's completions,
/// select the best-scoring one, and read its task_correct label. N equal to
/// a task's full completion count uses all completions with one effective
/// trial. A task whose method output is invalid counts as incorrect.
BonCurve bon_curve(const std::vector<BonTask>& tasks, const BonScorer& scorer,
                   const std::vector<int>& n_values, int trials,
                   std::uint64_t seed, int workers = 4);

}  // namespace flipeval
