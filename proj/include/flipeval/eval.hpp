#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "flipeval/backend.hpp"
#include "flipeval/cache.hpp"
#include "flipeval/core.hpp"
#include "flipeval/flip_scorer.hpp"
#include "flipeval/judges.hpp"

namespace flipeval {

enum class Method { flip, pointwise, listwise, pairwise };

Method method_from_string(const std::string& name);
std::string to_string(Method method);

/// What a scoring method produced for one candidate set. Score-based methods
/// fill `scores`; listwise fills `pick` (already mapped to the original
/// index, absent on a format error or out-of-range index).
struct MethodOutcome {
    std::vector<double> scores;
    std::optional<int> pick;
    bool is_listwise = false;
};

/// The instance-level decision under the benchmark rule: the winning index,
/// absent when the top is tied or the method's output was invalid.
std::optional<int> decide_top(const MethodOutcome& outcome);

/// Best-of-N selection: stable argmax for score-based methods, the listwise
/// pick otherwise; absent when nothing valid was produced.
std::optional<int> decide_bon_pick(const MethodOutcome& outcome);

/// A scoring strategy bound to its backend, prompts, config, and cache.
class RewardMethod {
public:
    virtual ~RewardMethod() = default;
    virtual std::string name() const = 0;
    /// Assess one candidate set. `seed` drives any shuffling the method's
    /// config enables. Throws BackendError on unrecoverable backend failure.
    virtual MethodOutcome assess(const InstructionContext& instruction,
                                 const std::vector<CandidateResponse>& candidates,
                                 std::uint64_t seed) = 0;
};

std::unique_ptr<RewardMethod> make_method(Method method, ChatBackend& backend,
                                          const PromptLibrary& prompts,
                                          const FlipConfig& flip_cfg,
                                          const JudgeConfig& judge_cfg,
                                          CompletionCache* cache);

class DatasetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DatasetLoadResult {
    std::vector<EvalInstance> instances;
    std::vector<std::string> line_errors;  // "line N: reason"
};

/// Load a line-delimited dataset, validating every record. Rejected lines
/// are collected with their line numbers; throws DatasetError only when no
/// valid instance remains.
DatasetLoadResult load_dataset(const std::filesystem::path& path);

struct EvalOptions {
    int runs = 1;
    std::uint64_t seed = 0;
    int workers = 4;
};

struct EvalReport {
    std::string method;
    double overall = 0.0;
    std::map<std::string, double> per_subset_accuracy;
    std::map<std::string, int> counts;
    int runs = 0;
    std::vector<double> per_run;
    int backend_failures = 0;
    /// Mean correctness per instance across runs, aligned with the dataset;
    /// feeds bucket_report.
    std::vector<double> per_instance;
};

/// RewardBench2-style protocol: an instance is correct iff the method's top
/// candidate is the chosen one, the top is unique, and no format error
/// decided it. Backend failures mark the instance incorrect and are tallied.
/// Run r uses seed derive_seed(seed, r); instances are assessed concurrently
/// up to `workers` with an order-independent reduction.
EvalReport evaluate(RewardMethod& method,
                    const std::vector<EvalInstance>& dataset,
                    const EvalOptions& options);

std::string report_to_json(const EvalReport& report);
std::string report_to_table(const EvalReport& report);

struct BucketReport {
    std::map<std::string, double> accuracy;
    std::map<std::string, int> counts;
    int excluded = 0;  // mixed-bucket or missing-key instances
    int missing_key_warnings = 0;
};

/// Per-bucket accuracy over instances whose candidates ALL share the bucket
/// value for `meta_key` (e.g. "length_class" or "generator").
BucketReport bucket_report(const std::vector<EvalInstance>& dataset,
                           const std::vector<double>& per_instance_correct,
                           const std::string& meta_key);

enum class AttackKind {
    highest_score,
    highest_rank,
    always_choose,
    paraphrase_injection,
};

AttackKind attack_kind_from_string(const std::string& name);
std::string to_string(AttackKind kind);

/// The verbatim injection string for a kind (paraphrase_injection has none).
std::string attack_string(AttackKind kind);

/// Copy the instance with the attack string appended to the text of one
/// seeded-random non-chosen candidate; everything else is untouched.
EvalInstance inject_adversarial(const EvalInstance& instance, AttackKind kind,
                                const std::optional<std::string>& paraphrase,
                                std::uint64_t seed);

struct AttackDelta {
    double clean = 0.0;
    double attacked = 0.0;
    double drop = 0.0;
    EvalReport clean_report;
    std::vector<double> attacked_per_run;
};

/// Accuracy before/after per-run adversarial injection, identical seeds and
/// backend configuration for both passes. Paraphrases are looked up by
/// instance id when kind == paraphrase_injection.
AttackDelta attack_delta(RewardMethod& method,
                         const std::vector<EvalInstance>& dataset,
                         AttackKind kind,
                         const std::map<std::string, std::string>& paraphrases,
                         const EvalOptions& options);

}  // namespace flipeval
