// flipeval: score, rank, and evaluate LM responses by backward inference
// (infer the instruction a response answers, reward by similarity to the
// real one) or by judge baselines; plus best-of-N curves, adversarial
// robustness checks, metric utilities, and an HTTP scoring service.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "flipeval/bon.hpp"
#include "flipeval/config.hpp"
#include "flipeval/eval.hpp"
#include "flipeval/flip_scorer.hpp"
#include "flipeval/judges.hpp"
#include "flipeval/metrics.hpp"
#include "flipeval/service.hpp"

using json = nlohmann::json;
using namespace flipeval;

namespace {

// Exit codes, also documented in the README.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDataset = 3;
constexpr int kExitBackend = 4;

struct GlobalArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string output_path;
    bool dry_run = false;
};

void emit(const GlobalArgs& args, const json& record) {
    if (!args.output_path.empty()) {
        std::ofstream out(args.output_path, std::ios::app);
        if (!out) {
            throw ConfigError("cannot open output file: " + args.output_path);
        }
        out << record.dump() << "\n";
    } else {
        std::cout << record.dump() << "\n";
    }
}

Config resolve_config(const GlobalArgs& args) {
    Config config;
    if (!args.config_path.empty()) config.load_file(args.config_path);
    for (const auto& override_kv : args.overrides) {
        config.apply_override(override_kv);
    }
    return config;
}

json config_header(const Config& config, const PromptLibrary& prompts) {
    json header;
    header["config"] = json::parse(config.echo_json());
    header["prompt_hash"] = prompts.content_hash();
    return header;
}

InstructionContext instruction_from_flags(const std::string& user_prompt,
                                          const std::string& system_prompt) {
    std::optional<std::string> system;
    if (!system_prompt.empty()) system = system_prompt;
    return InstructionContext::make(system, user_prompt);
}

std::vector<std::string> read_response_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DatasetError("cannot open responses file: " + path);
    std::vector<std::string> texts;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json record = json::parse(line);
        texts.push_back(record.at("text").get<std::string>());
    }
    if (texts.empty()) throw DatasetError("no responses in " + path);
    return texts;
}

std::map<std::string, std::string> read_paraphrases(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DatasetError("cannot open paraphrases file: " + path);
    std::map<std::string, std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json record = json::parse(line);
        std::string text = record.contains("paraphrase")
                               ? record["paraphrase"].get<std::string>()
                               : record.at("text").get<std::string>();
        out[record.at("id").get<std::string>()] = std::move(text);
    }
    return out;
}

std::vector<int> parse_n_values(const std::string& csv) {
    std::vector<int> values;
    std::stringstream stream(csv);
    std::string item;
    while (std::getline(stream, item, ',')) {
        if (item.empty()) continue;
        values.push_back(std::stoi(item));
    }
    if (values.empty()) throw ConfigError("bon.n_values is empty");
    return values;
}

long planned_calls(Method method, const EvalInstance& instance) {
    long n = static_cast<long>(instance.candidates.size());
    switch (method) {
        case Method::flip:
        case Method::pointwise:
            return n;
        case Method::listwise:
            return 1;
        case Method::pairwise:
            return n * (n - 1) / 2;
    }
    return 0;
}

json messages_to_json(const std::vector<ChatTurn>& messages) {
    json out = json::array();
    for (const auto& m : messages) {
        out.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_metrics(const GlobalArgs& args, const std::string& kind,
                const std::string& a, const std::string& b) {
    double value = similarity(metric_kind_from_string(kind), a, b);
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.4f", value);
    if (!args.output_path.empty()) {
        emit(args, json{{"type", "metric"}, {"kind", kind}, {"value", value}});
    }
    std::cout << buffer << "\n";
    return kExitOk;
}

int cmd_score(const GlobalArgs& args, const Config& config,
              const std::string& method_name, const std::string& user_prompt,
              const std::string& system_prompt, const std::string& response) {
    Method method = method_from_string(method_name.empty()
                                           ? config.get("eval.method")
                                           : method_name);
    if (method != Method::flip && method != Method::pointwise) {
        throw ConfigError("score supports flip or pointwise");
    }
    auto instruction = instruction_from_flags(user_prompt, system_prompt);
    auto candidate = CandidateResponse::make(response);

    if (args.dry_run) {
        PromptLibrary prompts;
        FlipConfig flip_cfg = config.flip_config();
        json plan{{"type", "dry_run"}, {"subcommand", "score"}};
        if (method == Method::flip) {
            plan["messages"] = messages_to_json(
                build_flip_messages(prompts, flip_cfg, candidate, &instruction));
        } else {
            const auto& tmpl = prompts.get(PromptKind::pointwise,
                                           config.judge_config().prompt_variant);
            plan["messages"] = messages_to_json(
                {{ChatRole::system, tmpl.system},
                 {ChatRole::user,
                  render_template(tmpl.user, {{"prompt", instruction.raw},
                                              {"response", candidate.text}})}});
        }
        emit(args, plan);
        return kExitOk;
    }

    Runtime runtime = make_runtime(config);
    RewardResult result;
    if (method == Method::flip) {
        result = flip_reward(*runtime.backend, runtime.prompts, runtime.flip_cfg,
                             instruction, candidate, runtime.cache_ptr());
    } else {
        result = pointwise_rate(*runtime.backend, runtime.prompts,
                                runtime.judge_cfg, instruction, candidate,
                                runtime.cache_ptr());
    }
    json record{{"type", "reward"},
                {"method", to_string(method)},
                {"reward", result.value},
                {"scale", result.scale == RewardScale::unit_interval
                              ? "unit_interval"
                              : "judge_1_to_10"},
                {"parse_status",
                 result.parse_status == ParseStatus::ok ? "ok" : "format_error"}};
    if (result.inferred_instruction) {
        record["inferred_instruction"] = *result.inferred_instruction;
    }
    emit(args, record);
    return kExitOk;
}

int cmd_rank(const GlobalArgs& args, const Config& config,
             const std::string& method_name, const std::string& user_prompt,
             const std::string& system_prompt,
             const std::string& responses_file) {
    Method method = method_from_string(method_name.empty()
                                           ? config.get("eval.method")
                                           : method_name);
    auto instruction = instruction_from_flags(user_prompt, system_prompt);
    std::vector<CandidateResponse> candidates;
    for (auto& text : read_response_lines(responses_file)) {
        candidates.push_back(CandidateResponse::make(std::move(text)));
    }
    if (candidates.size() < 2) throw DatasetError("rank needs >= 2 responses");

    if (args.dry_run) {
        EvalInstance plan_instance{"plan", instruction, candidates, 0, "plan"};
        emit(args, json{{"type", "dry_run"},
                        {"subcommand", "rank"},
                        {"planned_backend_calls",
                         planned_calls(method, plan_instance)}});
        return kExitOk;
    }

    Runtime runtime = make_runtime(config);
    auto engine = make_method(method, *runtime.backend, runtime.prompts,
                              runtime.flip_cfg, runtime.judge_cfg,
                              runtime.cache_ptr());
    auto outcome = engine->assess(instruction, candidates,
                                  config.eval_options().seed);
    json record{{"type", "ranking"}, {"method", to_string(method)}};
    if (outcome.is_listwise) {
        if (outcome.pick) record["best_index"] = *outcome.pick;
        else record["best_index"] = nullptr;
    } else {
        RankingResult ranking = rank_scores(outcome.scores);
        record["order"] = ranking.order;
        record["scores"] = ranking.scores;
        record["unique_top"] = ranking.unique_top;
    }
    emit(args, record);
    return kExitOk;
}

int cmd_eval(const GlobalArgs& args, const Config& config,
             const std::string& method_name, const std::string& dataset_path,
             const std::string& bucket_key) {
    Method method = method_from_string(method_name.empty()
                                           ? config.get("eval.method")
                                           : method_name);
    auto loaded = load_dataset(dataset_path);
    for (const auto& error : loaded.line_errors) {
        std::cerr << "warning: " << error << "\n";
    }

    if (args.dry_run) {
        long total = 0;
        for (const auto& instance : loaded.instances) {
            total += planned_calls(method, instance);
        }
        emit(args, json{{"type", "dry_run"},
                        {"subcommand", "eval"},
                        {"method", to_string(method)},
                        {"instances", loaded.instances.size()},
                        {"planned_backend_calls", total}});
        return kExitOk;
    }

    Runtime runtime = make_runtime(config);
    auto engine = make_method(method, *runtime.backend, runtime.prompts,
                              runtime.flip_cfg, runtime.judge_cfg,
                              runtime.cache_ptr());
    EvalReport report = evaluate(*engine, loaded.instances,
                                 config.eval_options());

    json record = json::parse(report_to_json(report));
    record.update(config_header(config, runtime.prompts));
    record["dataset"] = dataset_path;
    record["rejected_lines"] = loaded.line_errors.size();
    if (!bucket_key.empty()) {
        BucketReport buckets = bucket_report(loaded.instances,
                                             report.per_instance, bucket_key);
        record["buckets"] = {{"key", bucket_key},
                             {"accuracy", buckets.accuracy},
                             {"counts", buckets.counts},
                             {"excluded", buckets.excluded}};
    }
    emit(args, record);
    std::cout << report_to_table(report);
    return kExitOk;
}

int cmd_bon(const GlobalArgs& args, const Config& config,
            const std::string& method_name, const std::string& tasks_path,
            const std::string& n_values_csv, int trials) {
    Method method = method_from_string(method_name.empty()
                                           ? config.get("eval.method")
                                           : method_name);
    auto tasks = load_bon_tasks(tasks_path);
    auto n_values = parse_n_values(n_values_csv.empty()
                                       ? config.get("bon.n_values")
                                       : n_values_csv);
    if (trials <= 0) trials = config.get_int("bon.trials");

    if (args.dry_run) {
        emit(args, json{{"type", "dry_run"},
                        {"subcommand", "bon"},
                        {"tasks", tasks.size()},
                        {"n_values", n_values},
                        {"trials", trials}});
        return kExitOk;
    }

    Runtime runtime = make_runtime(config);
    auto engine = make_method(method, *runtime.backend, runtime.prompts,
                              runtime.flip_cfg, runtime.judge_cfg,
                              runtime.cache_ptr());
    BonScorer scorer = [&](const InstructionContext& instruction,
                           const std::vector<CandidateResponse>& completions,
                           std::uint64_t seed) {
        return engine->assess(instruction, completions, seed);
    };
    auto options = config.eval_options();
    BonCurve curve = bon_curve(tasks, scorer, n_values, trials, options.seed,
                               options.workers);

    json record{{"type", "bon_curve"}, {"method", to_string(method)}};
    json accuracy = json::object();
    for (const auto& [n, acc] : curve.accuracy) {
        accuracy[std::to_string(n)] = acc;
    }
    record["accuracy"] = accuracy;
    record["excluded_tasks"] = curve.excluded_tasks;
    json rows = json::array();
    for (const auto& row : curve.rows) {
        rows.push_back({{"n", row.n}, {"trial", row.trial},
                        {"accuracy", row.accuracy}});
    }
    record["rows"] = rows;
    record.update(config_header(config, runtime.prompts));
    emit(args, record);

    std::cout << "n,trial,accuracy\n";
    for (const auto& row : curve.rows) {
        std::cout << row.n << "," << row.trial << "," << row.accuracy << "\n";
    }
    return kExitOk;
}

int cmd_attack(const GlobalArgs& args, const Config& config,
               const std::string& method_name, const std::string& dataset_path,
               const std::string& kind_name, const std::string& paraphrases_path) {
    Method method = method_from_string(method_name.empty()
                                           ? config.get("eval.method")
                                           : method_name);
    AttackKind kind = attack_kind_from_string(
        kind_name.empty() ? config.get("attack.kind") : kind_name);
    auto loaded = load_dataset(dataset_path);
    std::map<std::string, std::string> paraphrases;
    std::string para_path = paraphrases_path.empty()
                                ? config.get("attack.paraphrases")
                                : paraphrases_path;
    if (!para_path.empty()) paraphrases = read_paraphrases(para_path);

    if (args.dry_run) {
        long total = 0;
        for (const auto& instance : loaded.instances) {
            total += 2 * planned_calls(method, instance);  // clean + attacked
        }
        emit(args, json{{"type", "dry_run"},
                        {"subcommand", "attack"},
                        {"kind", to_string(kind)},
                        {"planned_backend_calls", total}});
        return kExitOk;
    }

    Runtime runtime = make_runtime(config);
    auto engine = make_method(method, *runtime.backend, runtime.prompts,
                              runtime.flip_cfg, runtime.judge_cfg,
                              runtime.cache_ptr());
    AttackDelta delta = attack_delta(*engine, loaded.instances, kind,
                                     paraphrases, config.eval_options());

    json record{{"type", "attack_delta"},
                {"method", to_string(method)},
                {"kind", to_string(kind)},
                {"clean_accuracy", delta.clean},
                {"attacked_accuracy", delta.attacked},
                {"drop", delta.drop},
                {"attacked_per_run", delta.attacked_per_run}};
    record.update(config_header(config, runtime.prompts));
    emit(args, record);
    std::cout << "clean " << delta.clean << "  attacked " << delta.attacked
              << "  drop " << delta.drop << "\n";
    return kExitOk;
}

int cmd_serve(const GlobalArgs& args, const Config& config) {
    ServiceConfig service_cfg = config.service_config();
    if (args.dry_run) {
        emit(args, json{{"type", "dry_run"},
                        {"subcommand", "serve"},
                        {"bind_address", service_cfg.bind_address},
                        {"port", service_cfg.port},
                        {"method", to_string(service_cfg.method)}});
        return kExitOk;
    }
    Runtime runtime = make_runtime(config);
    RewardService service(service_cfg, *runtime.backend, runtime.prompts,
                          runtime.flip_cfg, runtime.judge_cfg,
                          runtime.cache_ptr());
    std::cerr << "serving on " << service_cfg.bind_address << ":"
              << service_cfg.port << "\n";
    if (!service.run()) {
        throw ConfigError("cannot bind " + service_cfg.bind_address + ":" +
                          std::to_string(service_cfg.port));
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"reward scoring by instruction inversion, with judge baselines"};
    app.require_subcommand(1);

    GlobalArgs args;
    app.add_option("--config", args.config_path, "config file (ini)");
    app.add_option("--set", args.overrides, "override: section.key=value");
    app.add_option("--output", args.output_path, "write machine-readable records here");
    app.add_flag("--dry-run", args.dry_run, "print the request plan; no backend calls");

    std::string method, user_prompt, system_prompt, response, responses_file;
    std::string dataset, bucket_key, tasks_path, n_values_csv;
    std::string attack_kind_name, paraphrases_path;
    std::string metric_kind_name, metric_a, metric_b;
    int trials = 0, runs = 0, workers = 0;
    std::uint64_t seed = 0;
    bool runs_set = false, seed_set = false, workers_set = false;

    auto add_common = [&](CLI::App* cmd, bool with_method = true) {
        if (with_method) cmd->add_option("--method", method, "flip|pointwise|listwise|pairwise");
        cmd->add_option("--runs", runs, "evaluation runs")->each([&](const std::string&) { runs_set = true; });
        cmd->add_option("--seed", seed, "base seed")->each([&](const std::string&) { seed_set = true; });
        cmd->add_option("--workers", workers, "concurrent workers")->each([&](const std::string&) { workers_set = true; });
    };

    auto* score_cmd = app.add_subcommand("score", "reward one response");
    score_cmd->add_option("--method", method, "flip|pointwise");
    score_cmd->add_option("--user-prompt", user_prompt)->required();
    score_cmd->add_option("--system-prompt", system_prompt);
    score_cmd->add_option("--response", response)->required();

    auto* rank_cmd = app.add_subcommand("rank", "rank candidate responses");
    rank_cmd->add_option("--method", method, "flip|pointwise|listwise|pairwise");
    rank_cmd->add_option("--user-prompt", user_prompt)->required();
    rank_cmd->add_option("--system-prompt", system_prompt);
    rank_cmd->add_option("--responses-file", responses_file, "jsonl with {\"text\": ...}")
        ->required();

    auto* eval_cmd = app.add_subcommand("eval", "best-of-n accuracy over a dataset");
    add_common(eval_cmd);
    eval_cmd->add_option("--dataset", dataset)->required();
    eval_cmd->add_option("--bucket", bucket_key, "bucket accuracies by this meta key");

    auto* bon_cmd = app.add_subcommand("bon", "accuracy-vs-N curve");
    add_common(bon_cmd);
    bon_cmd->add_option("--tasks", tasks_path)->required();
    bon_cmd->add_option("--n-values", n_values_csv, "comma-separated N list");
    bon_cmd->add_option("--trials", trials);

    auto* attack_cmd = app.add_subcommand("attack", "adversarial-injection delta");
    add_common(attack_cmd);
    attack_cmd->add_option("--dataset", dataset)->required();
    attack_cmd->add_option("--kind", attack_kind_name,
                           "highest_score|highest_rank|always_choose|paraphrase_injection");
    attack_cmd->add_option("--paraphrases", paraphrases_path, "jsonl: {id, text}");

    auto* metrics_cmd = app.add_subcommand("metrics", "compute a similarity metric");
    metrics_cmd->add_option("--kind", metric_kind_name)->required();
    metrics_cmd->add_option("--a", metric_a)->required();
    metrics_cmd->add_option("--b", metric_b)->required();

    auto* serve_cmd = app.add_subcommand("serve", "run the HTTP scoring service");
    int serve_port = -1;
    serve_cmd->add_option("--port", serve_port, "override service.port")
        ->each([&](const std::string& v) { args.overrides.push_back("service.port=" + v); });

    CLI11_PARSE(app, argc, argv);

    try {
        Config config = resolve_config(args);
        if (runs_set) config.set("eval.runs", std::to_string(runs));
        if (seed_set) config.set("eval.seed", std::to_string(seed));
        if (workers_set) config.set("eval.workers", std::to_string(workers));

        if (metrics_cmd->parsed()) {
            return cmd_metrics(args, metric_kind_name, metric_a, metric_b);
        }
        if (score_cmd->parsed()) {
            return cmd_score(args, config, method, user_prompt, system_prompt,
                             response);
        }
        if (rank_cmd->parsed()) {
            return cmd_rank(args, config, method, user_prompt, system_prompt,
                            responses_file);
        }
        if (eval_cmd->parsed()) {
            return cmd_eval(args, config, method, dataset, bucket_key);
        }
        if (bon_cmd->parsed()) {
            return cmd_bon(args, config, method, tasks_path, n_values_csv, trials);
        }
        if (attack_cmd->parsed()) {
            return cmd_attack(args, config, method, dataset, attack_kind_name,
                              paraphrases_path);
        }
        if (serve_cmd->parsed()) {
            return cmd_serve(args, config);
        }
        std::cerr << "no subcommand\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DatasetError& e) {
        std::cerr << "dataset error: " << e.what() << "\n";
        return kExitDataset;
    } catch (const BackendError& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}
