#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adarank/budget.hpp"
#include "adarank/snapshot.hpp"
#include "adarank/task.hpp"

namespace adarank {

// Every knob of one training run. Loaded from JSON (unknown keys rejected),
// then overridden from the command line.
struct ExperimentConfig {
  std::string optimizer = "ivon";     // "ivon" | "adam"
  std::string scorer = "snr_mean";    // see parse_scorer
  bool adaptive = true;               // false: fixed-rank LoRA, allocator off

  std::size_t target_rank = 1;        // per layer; b_T = layers * target_rank by default
  std::size_t init_rank = 3;          // per layer; 0 means round(1.5 * target_rank)
  std::size_t target_budget = 0;      // total b_T override; 0 means layers * target_rank

  std::size_t total_steps = 4000;
  std::size_t warmup_steps = 1000;
  std::size_t final_steps = 1000;
  std::size_t allocation_interval = 50;

  std::optional<double> lr;           // default: 0.2 for ivon, 5e-3 for adam
  std::optional<double> warmup_lr;    // held during warm-up; default 1.0 for ivon, lr for adam

  double ivon_beta1 = 0.9;
  double ivon_beta2 = 0.999;
  std::optional<double> ivon_ess;     // default: training-set size
  double ivon_delta = 1e-4;
  double ivon_h_init = 1.0;
  std::size_t mc_samples = 1;

  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  double gamma_orth = 0.1;
  double init_std = 0.02;
  double sens_beta1 = 0.85;
  double sens_beta2 = 0.85;
  double score_ema = 0.0;             // optional EMA on any metric; 0 = off

  std::size_t batch_size = 32;
  std::size_t eval_interval = 50;
  std::size_t log_interval = 50;
  std::size_t rank_csv_interval = 0;  // 0: only the final table
  bool trace_scores = false;

  TaskSpec task;                      // task.seed defaults to `seed`
  std::optional<std::uint64_t> task_seed;
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string output_dir;             // empty: write nothing
  std::string kernels = "auto";

  // Throws ConfigError on any invalid combination.
  void validate() const;

  double resolved_lr() const;
  double resolved_warmup_lr() const;
  std::size_t resolved_init_rank() const;
  std::size_t resolved_target_budget() const;
  TaskSpec resolved_task() const;
  BudgetSchedule schedule() const;
  // Short label such as "ivon/snr_mean" or "adam/lora".
  std::string label() const;

  static ExperimentConfig from_json(const Json& j);
  // Applies the keys of `j` on top of this config.
  void merge_json(const Json& j);
  Json to_json() const;
};

// Every key accepted by ExperimentConfig::merge_json, sorted.
std::vector<std::string> config_keys();

// Resolves `output_dir` against $ADARANK_OUTPUT_ROOT when it is relative.
std::filesystem::path resolve_output_dir(const std::string& output_dir);

// Learning rate at step t (1-based): warm-up rate through warmup_steps, then
// linear decay from lr toward 0 at total_steps.
double learning_rate_at(const ExperimentConfig& config, std::size_t t);

struct StepRecord {
  std::size_t step;
  double lr;
  double train_loss;  // mean task loss since the previous record
  std::size_t active_rank;
};

struct EvalRecord {
  std::size_t step;
  double val_metric;
  double val_loss;
};

struct AllocationRecord {
  std::size_t step;
  std::size_t budget;
  std::size_t active_rank;
  double score_min;
  double score_mean;
  double score_max;
};

struct TraceSnapshot {
  std::size_t step;
  std::map<std::string, std::vector<double>> triplet_scores;
};

struct RunMetrics {
  std::string label;
  std::string metric;           // "rmse" | "accuracy"
  bool higher_is_better = false;
  std::vector<StepRecord> steps;
  std::vector<EvalRecord> evals;
  std::vector<AllocationRecord> allocations;
  std::vector<TraceSnapshot> traces;
  std::vector<RankCell> final_ranks;
  std::vector<RankCell> best_ranks;
  double best_val = 0.0;
  std::size_t best_step = 0;
  double final_val = 0.0;
  std::size_t active_parameters = 0;
  std::optional<double> hessian_grad_spearman;  // IVON runs only
};

struct RunResult {
  ExperimentConfig config;
  RunMetrics metrics;
};

RunResult run_experiment(const ExperimentConfig& config);

// One JSON object per line: step, eval, allocation records in step order,
// then a final summary record.
void write_metrics_jsonl(std::ostream& out, const RunMetrics& m);

Json run_summary_json(const RunResult& run);

}  // namespace adarank
