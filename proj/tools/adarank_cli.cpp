// adarank: train, sweep and report adaptive-rank adapter experiments.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "adarank/errors.hpp"
#include "adarank/experiment.hpp"
#include "adarank/importance.hpp"
#include "adarank/report.hpp"
#include "adarank/snapshot.hpp"

namespace fs = std::filesystem;
using namespace adarank;

namespace {

// Config sources: defaults < --config file < one flag per config key.
struct ConfigFlags {
  std::string config_file;
  std::map<std::string, std::string> values;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "JSON config file")->check(CLI::ExistingFile);
    for (const auto& key : config_keys()) {
      app->add_option("--" + key, values[key], "config key '" + key + "' (JSON value or bare string)");
    }
  }

  ExperimentConfig resolve() const {
    ExperimentConfig c;
    if (!config_file.empty()) c.merge_json(read_json_file(config_file));
    Json overrides = Json::object();
    for (const auto& [key, text] : values) {
      if (text.empty()) continue;
      try {
        overrides[key] = Json::parse(text);
      } catch (const Json::parse_error&) {
        overrides[key] = text;
      }
    }
    c.merge_json(overrides);
    c.validate();
    return c;
  }
};

void print_run(const RunResult& r) {
  const auto& m = r.metrics;
  std::cout << m.label << " seed=" << r.config.seed << " best_" << m.metric << '=' << std::setprecision(6)
            << m.best_val << " (step " << m.best_step << ") final_" << m.metric << '=' << m.final_val
            << " ranks=";
  for (std::size_t i = 0; i < m.final_ranks.size(); ++i) {
    std::cout << (i ? "," : "") << m.final_ranks[i].rank;
  }
  std::cout << '\n';
}

struct Variant {
  std::string optimizer;
  std::string scorer;  // "lora" selects fixed-rank mode
};

std::vector<Variant> parse_variants(const std::string& text) {
  std::vector<Variant> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError("variant '" + item + "' must look like optimizer:scorer");
    out.push_back({item.substr(0, colon), item.substr(colon + 1)});
  }
  return out;
}

void write_table(const fs::path& dir, const SummaryTable& table) {
  {
    std::ofstream csv(dir / "summary.csv");
    write_summary_csv(csv, table);
  }
  std::ofstream txt(dir / "summary.txt");
  render_summary(txt, table);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive-rank adapters with Bayesian importance scores"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "Train one experiment");
  ConfigFlags run_flags;
  run_flags.attach(run_cmd);

  auto* sweep_cmd = app.add_subcommand("sweep", "Run an optimizer:scorer x seed grid and summarize it");
  ConfigFlags sweep_flags;
  sweep_flags.attach(sweep_cmd);
  std::string variants_text =
      "adam:sensitivity,ivon:sensitivity,ivon:snr_mean,ivon:snr_abs,ivon:magnitude,ivon:inv_sigma,adam:lora";
  sweep_cmd->add_option("--variants", variants_text, "Comma-separated optimizer:scorer list ('lora' = fixed rank)");

  auto* report_cmd = app.add_subcommand("report", "Aggregate the runs of a sweep directory");
  std::string report_dir;
  report_cmd->add_option("--dir", report_dir, "Sweep output directory")->required();

  auto* trace_cmd = app.add_subcommand("trace", "Sensitivity vs snr_mean rank correlation per allocation step");
  ConfigFlags trace_flags;
  trace_flags.attach(trace_cmd);
  std::string trace_from;
  trace_cmd->add_option("--from", trace_from, "Existing score_trace.jsonl instead of training");

  auto* score_cmd = app.add_subcommand("score", "Triplet scores of a saved adapter snapshot");
  std::string adapters_file, state_file, score_name = "snr_mean";
  score_cmd->add_option("--adapters", adapters_file, "adapters.json")->required()->check(CLI::ExistingFile);
  score_cmd->add_option("--state", state_file, "optimizer.json")->required()->check(CLI::ExistingFile);
  score_cmd->add_option("--scorer", score_name, "Scorer name");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      const ExperimentConfig c = run_flags.resolve();
      print_run(run_experiment(c));
      if (!c.output_dir.empty()) std::cout << "artifacts: " << resolve_output_dir(c.output_dir).string() << '\n';
    } else if (sweep_cmd->parsed()) {
      const ExperimentConfig base = sweep_flags.resolve();
      const fs::path root = resolve_output_dir(base.output_dir.empty() ? "sweep" : base.output_dir);
      std::vector<RunSummary> summaries;
      for (const auto& v : parse_variants(variants_text)) {
        for (std::uint64_t seed : base.seeds) {
          ExperimentConfig c = base;
          c.optimizer = v.optimizer;
          c.adaptive = v.scorer != "lora";
          if (c.adaptive) {
            c.scorer = v.scorer;
          } else {
            c.init_rank = 0;
            c.target_budget = 0;
          }
          c.seed = seed;
          c.output_dir = (root / (v.optimizer + "_" + v.scorer) / ("seed_" + std::to_string(seed))).string();
          const RunResult r = run_experiment(c);
          print_run(r);
          summaries.push_back(summarize(r));
        }
      }
      const SummaryTable table = compare_scorers(summaries);
      write_table(root, table);
      render_summary(std::cout, table);
    } else if (report_cmd->parsed()) {
      const SummaryTable table = compare_scorers(load_run_summaries(report_dir));
      write_table(report_dir, table);
      render_summary(std::cout, table);
    } else if (trace_cmd->parsed()) {
      std::vector<TraceSnapshot> traces;
      std::optional<fs::path> out_dir;
      if (!trace_from.empty()) {
        traces = load_score_trace(trace_from);
      } else {
        ExperimentConfig c = trace_flags.resolve();
        if (c.optimizer != "ivon") throw ConfigError("trace needs optimizer=ivon");
        c.trace_scores = true;
        const RunResult r = run_experiment(c);
        print_run(r);
        traces = r.metrics.traces;
        if (!c.output_dir.empty()) out_dir = resolve_output_dir(c.output_dir);
      }
      const auto report = score_trace_report(traces);
      std::ostringstream csv;
      csv << "step,spearman\n";
      for (const auto& row : report) {
        csv << row.step << ',';
        if (row.spearman) csv << std::setprecision(6) << *row.spearman; else csv << "undefined";
        csv << '\n';
      }
      std::cout << csv.str();
      if (out_dir) std::ofstream(*out_dir / "trace_report.csv") << csv.str();
    } else if (score_cmd->parsed()) {
      const auto layers = adapters_from_json(read_json_file(adapters_file));
      const OptimizerCheckpoint ckpt = checkpoint_from_json(read_json_file(state_file));
      const ScorerKind kind = parse_scorer(score_name);
      std::vector<double> per_scalar;
      if (kind == ScorerKind::sensitivity) {
        if (!ckpt.importance) throw ConfigError("checkpoint has no sensitivity state");
        per_scalar = ckpt.importance->scores();
      } else {
        if (!ckpt.ivon) throw ConfigError("scorer '" + score_name + "' needs an ivon checkpoint");
        per_scalar = PosteriorScorer(kind).scores(Posterior{ckpt.ivon->mu, posterior_sigma(*ckpt.ivon)});
      }
      std::cout << "layer,triplet,score,active\n" << std::setprecision(10);
      std::size_t offset = 0;
      for (std::size_t k = 0; k < layers.size(); ++k) {
        const std::size_t n = layers[k].parameter_count();
        if (offset + n > per_scalar.size()) throw ShapeError("checkpoint does not match snapshot");
        for (const auto& t : aggregate_triplet(layers[k], k, std::span(per_scalar).subspan(offset, n))) {
          std::cout << k + 1 << ',' << t.triplet_index << ',' << t.score << ','
                    << (layers[k].mask()[t.triplet_index] ? 1 : 0) << '\n';
        }
        offset += n;
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
