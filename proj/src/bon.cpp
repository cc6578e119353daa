#include "flipeval/bon.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "flipeval/parallel.hpp"

namespace flipeval {

void BonTask::validate() const {
    if (completions.empty()) {
        throw std::invalid_argument("bon task has no completions");
    }
    for (const auto& completion : completions) {
        if (!completion.task_correct()) {
            throw std::invalid_argument(
                "bon completion is missing the task_correct label");
        }
    }
}

std::vector<BonTask> load_bon_tasks(const std::filesystem::path& path) {
    auto loaded = load_dataset(path);
    std::vector<BonTask> tasks;
    tasks.reserve(loaded.instances.size());
    for (auto& instance : loaded.instances) {
        BonTask task{std::move(instance.instruction),
                     std::move(instance.candidates)};
        task.validate();
        tasks.push_back(std::move(task));
    }
    return tasks;
}

int select_best(const std::vector<double>& scores) {
    if (scores.empty()) {
        throw std::invalid_argument("select_best on empty score list");
    }
    int best = 0;
    for (size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] > scores[best]) best = static_cast<int>(i);
    }
    return best;
}

std::vector<int> bon_subset(std::uint64_t seed, int task_index, int trial,
                            int n, int total) {
    std::vector<int> perm(total);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(derive_seed(derive_seed(seed, task_index), trial));
    std::shuffle(perm.begin(), perm.end(), rng);
    perm.resize(std::min(n, total));
    std::sort(perm.begin(), perm.end());
    return perm;
}

BonCurve bon_curve(const std::vector<BonTask>& tasks, const BonScorer& scorer,
                   const std::vector<int>& n_values, int trials,
                   std::uint64_t seed, int workers) {
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    for (const auto& task : tasks) task.validate();

    BonCurve curve;
    for (int n : n_values) {
        // A full-count draw is the whole set; extra trials would repeat it.
        bool full_for_all = std::all_of(
            tasks.begin(), tasks.end(), [n](const BonTask& t) {
                return static_cast<int>(t.completions.size()) <= n;
            });
        int effective_trials = full_for_all ? 1 : trials;

        double mean = 0.0;
        for (int trial = 0; trial < effective_trials; ++trial) {
            std::vector<char> correct(tasks.size(), 0);
            std::vector<char> included(tasks.size(), 0);
            parallel_for(static_cast<int>(tasks.size()), workers, [&](int t) {
                const auto& task = tasks[t];
                const int total = static_cast<int>(task.completions.size());
                if (n > total) return;  // excluded, counted below
                included[t] = 1;
                auto subset = bon_subset(seed, t, trial, n, total);
                std::vector<CandidateResponse> drawn;
                drawn.reserve(subset.size());
                for (int idx : subset) drawn.push_back(task.completions[idx]);
                std::optional<int> picked;
                try {
                    auto outcome = scorer(task.instruction, drawn,
                                          derive_seed(derive_seed(seed, t), trial));
                    picked = decide_bon_pick(outcome);
                } catch (const BackendError&) {
                    picked.reset();
                }
                if (picked && *picked >= 0 &&
                    *picked < static_cast<int>(drawn.size())) {
                    correct[t] = drawn[*picked].task_correct().value_or(false) ? 1 : 0;
                }
            });
            int included_count = 0;
            int correct_count = 0;
            for (size_t t = 0; t < tasks.size(); ++t) {
                included_count += included[t];
                correct_count += correct[t];
            }
            if (trial == 0) {
                curve.excluded_tasks +=
                    static_cast<int>(tasks.size()) - included_count;
            }
            double accuracy =
                included_count > 0
                    ? static_cast<double>(correct_count) / included_count
                    : 0.0;
            curve.rows.push_back({n, trial, accuracy});
            mean += accuracy;
        }
        curve.accuracy[n] = mean / effective_trials;
    }
    return curve;
}

}  // namespace flipeval
