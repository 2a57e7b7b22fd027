#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "adarank/experiment.hpp"

namespace adarank {

// Per-run numbers the summary table needs; built from a RunResult or read
// back from a run's summary.json.
struct RunSummary {
  std::string optimizer;
  std::string scorer;  // "lora" for fixed-rank runs
  std::uint64_t seed = 0;
  Json task_spec;
  std::string metric;
  bool higher_is_better = false;
  double best_val = 0.0;
  std::vector<std::size_t> final_ranks;

  std::string label() const { return optimizer + "/" + scorer; }
};

RunSummary summarize(const RunResult& run);
RunSummary summary_from_json(const Json& j);

struct SummaryRow {
  std::string optimizer;
  std::string scorer;
  std::size_t runs = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation (n - 1)
  std::string mark;     // "best", "second" or empty
};

struct SummaryTable {
  std::string metric;
  bool higher_is_better = false;
  std::vector<SummaryRow> rows;  // in first-seen order
};

// Groups runs by optimizer/scorer, reports mean and std of the best
// validation metric and marks the best and second-best rows. Throws
// std::invalid_argument when groups were run on different tasks or seeds.
SummaryTable compare_scorers(const std::vector<RunSummary>& runs);

void write_summary_csv(std::ostream& out, const SummaryTable& table);
void render_summary(std::ostream& out, const SummaryTable& table);

// Loads every */summary.json under `dir`, sorted by path.
std::vector<RunSummary> load_run_summaries(const std::filesystem::path& dir);

struct TraceCorrelation {
  std::size_t step;
  std::optional<double> spearman;  // empty when undefined
};

// Spearman correlation between the sensitivity and snr_mean triplet scores at
// every traced allocation step. Throws std::invalid_argument if either trace
// is missing.
std::vector<TraceCorrelation> score_trace_report(const std::vector<TraceSnapshot>& traces);
std::vector<TraceSnapshot> load_score_trace(const std::filesystem::path& path);

}  // namespace adarank
