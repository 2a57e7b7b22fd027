#include <doctest.h>

#include <adarank/errors.hpp>
#include <adarank/experiment.hpp>
#include <adarank/kernels.hpp>
#include <adarank/report.hpp>
#include <adarank/snapshot.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "support.hpp"

using namespace adarank;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.total_steps = 300;
  c.warmup_steps = 60;
  c.final_steps = 60;
  c.allocation_interval = 20;
  c.eval_interval = 50;
  c.log_interval = 50;
  c.task.n_train = 256;
  c.task.n_val = 64;
  c.task.width = 8;
  return c;
}

std::string jsonl(const RunMetrics& m) {
  std::ostringstream out;
  write_metrics_jsonl(out, m);
  return out.str();
}

RunSummary fake_run(const std::string& opt, const std::string& scorer, std::uint64_t seed, double val) {
  RunSummary r;
  r.optimizer = opt;
  r.scorer = scorer;
  r.seed = seed;
  r.task_spec = Json{{"seed", seed}};
  r.metric = "rmse";
  r.best_val = val;
  return r;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("adarank_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("posterior scorer with adam is a configuration error") {
  ExperimentConfig c = small_config();
  c.optimizer = "adam";
  c.scorer = "snr_mean";
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(run_experiment(c), ConfigError);
  c.scorer = "sensitivity";
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("config keys") {
  ExperimentConfig c;
  CHECK_THROWS_AS(c.merge_json(Json{{"learning_rate", 0.1}}), ConfigError);
  c.merge_json(Json{{"scorer", "magnitude"}, {"planted_ranks", {2, 0}}, {"lr", 0.3}});
  CHECK(c.scorer == "magnitude");
  CHECK(c.task.planted_ranks == std::vector<std::size_t>{2, 0});
  CHECK(c.resolved_lr() == 0.3);
  const ExperimentConfig back = ExperimentConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  const auto keys = config_keys();
  CHECK(std::is_sorted(keys.begin(), keys.end()));
  const Json j = c.to_json();
  for (const auto& [k, v] : j.items()) CHECK(std::find(keys.begin(), keys.end(), k) != keys.end());
}

TEST_CASE("learning rate schedule") {
  ExperimentConfig c = small_config();
  c.lr = 0.4;
  c.warmup_lr = 2.0;
  CHECK(learning_rate_at(c, 1) == 2.0);
  CHECK(learning_rate_at(c, 60) == 2.0);
  CHECK(learning_rate_at(c, 61) == doctest::Approx(0.4));
  CHECK(learning_rate_at(c, 300) == doctest::Approx(0.4 / 240.0));
}

TEST_CASE("adaptive run follows the budget schedule") {
  for (const char* opt : {"ivon", "adam"}) {
    ExperimentConfig c = small_config();
    c.optimizer = opt;
    c.scorer = "sensitivity";
    const auto run = run_experiment(c);
    const auto sched = c.schedule();
    REQUIRE_FALSE(run.metrics.allocations.empty());
    for (const auto& a : run.metrics.allocations) {
      CHECK(a.budget == budget_at(sched, a.step));
      CHECK(a.active_rank == a.budget);
    }
    std::size_t total = 0;
    for (const auto& cell : run.metrics.final_ranks) total += cell.rank;
    CHECK(total == sched.b_target);
    std::size_t active = 0;
    for (const auto& cell : run.metrics.final_ranks) active += cell.rank * (2 * c.task.width + 1);
    CHECK(run.metrics.active_parameters == active);
  }
}

TEST_CASE("fixed-rank run never allocates") {
  ExperimentConfig c = small_config();
  c.optimizer = "adam";
  c.adaptive = false;
  const auto run = run_experiment(c);
  CHECK(run.metrics.allocations.empty());
  for (const auto& s : run.metrics.steps) CHECK(s.active_rank == c.task.layers() * c.target_rank);
  CHECK(c.label() == "adam/lora");
}

TEST_CASE("classification run reports accuracy") {
  ExperimentConfig c = small_config();
  c.task.kind = TaskKind::classification;
  const auto run = run_experiment(c);
  CHECK(run.metrics.metric == "accuracy");
  CHECK(run.metrics.higher_is_better);
  CHECK(run.metrics.best_val >= 0.0);
  CHECK(run.metrics.best_val <= 1.0);
}

TEST_CASE("runs are deterministic") {
  ExperimentConfig c = small_config();
  c.trace_scores = true;
  const auto a = run_experiment(c), b = run_experiment(c);
  CHECK(jsonl(a.metrics) == jsonl(b.metrics));
  c.seed = 2;
  CHECK(jsonl(run_experiment(c).metrics) != jsonl(a.metrics));
}

TEST_CASE("kernel variants give identical runs") {
  if (!kernels::available(kernels::Isa::avx2)) return;
  ExperimentConfig c = small_config();
  c.kernels = "scalar";
  const auto a = run_experiment(c);
  c.kernels = "avx2";
  const auto b = run_experiment(c);
  kernels::select(kernels::detect());
  // Elementwise kernels are bit-identical; the dot reduction may differ in the
  // last bits, so compare the decisions and the metric loosely.
  CHECK(a.metrics.final_ranks.size() == b.metrics.final_ranks.size());
  CHECK(a.metrics.best_val == doctest::Approx(b.metrics.best_val).epsilon(1e-6));
}

TEST_CASE("run directory outputs") {
  const fs::path dir = scratch_dir("run");
  ExperimentConfig c = small_config();
  c.trace_scores = true;
  c.output_dir = dir.string();
  const auto run = run_experiment(c);
  for (const char* f : {"config.json", "metrics.jsonl", "ranks_final.csv", "ranks_best.csv", "adapters.json",
                        "optimizer.json", "summary.json", "score_trace.jsonl"})
    CHECK_MESSAGE(fs::exists(dir / f), f);

  const auto summaries = load_run_summaries(dir);
  REQUIRE(summaries.size() == 1);
  CHECK(summaries[0].label() == "ivon/snr_mean");
  CHECK(summaries[0].best_val == run.metrics.best_val);

  const auto traces = load_score_trace(dir / "score_trace.jsonl");
  CHECK(traces.size() == run.metrics.traces.size());
  CHECK(score_trace_report(traces).size() == traces.size());

  const auto layers = adapters_from_json(read_json_file(dir / "adapters.json"));
  CHECK(layers.size() == c.task.layers());
  const auto ckpt = checkpoint_from_json(read_json_file(dir / "optimizer.json"));
  CHECK(ckpt.ivon.has_value());
  fs::remove_all(dir);
}

TEST_CASE("compare_scorers") {
  const auto single = compare_scorers({fake_run("ivon", "snr_mean", 1, 0.5)});
  REQUIRE(single.rows.size() == 1);
  CHECK(single.rows[0].mark == "best");

  std::vector<RunSummary> runs;
  for (std::uint64_t s : {1, 2, 3}) {
    runs.push_back(fake_run("ivon", "magnitude", s, 0.1 * s));
    runs.push_back(fake_run("ivon", "inv_sigma", s, 0.1 * s));
    runs.push_back(fake_run("adam", "lora", s, 0.2 * s));
  }
  const auto t = compare_scorers(runs);
  REQUIRE(t.rows.size() == 3);
  CHECK(t.rows[0].mean == t.rows[1].mean);
  CHECK(t.rows[0].stddev == t.rows[1].stddev);
  CHECK(t.rows[0].mean == doctest::Approx(0.2));
  CHECK(t.rows[2].mark.empty());

  runs.push_back(fake_run("adam", "lora", 4, 0.3));
  CHECK_THROWS_AS(compare_scorers(runs), std::invalid_argument);

  std::ostringstream csv;
  write_summary_csv(csv, t);
  CHECK(csv.str().rfind("optimizer,scorer,", 0) == 0);
}

TEST_CASE("score trace correlation") {
  Rng rng(31);
  TraceSnapshot same{10, {{"sensitivity", testing::random_vector(rng, 50)}}};
  same.triplet_scores["snr_mean"] = same.triplet_scores["sensitivity"];
  CHECK(*score_trace_report({same})[0].spearman == doctest::Approx(1.0));

  TraceSnapshot indep{20, {{"sensitivity", testing::random_vector(rng, 200)},
                           {"snr_mean", testing::random_vector(rng, 200)}}};
  CHECK(std::abs(*score_trace_report({indep})[0].spearman) < 0.2);

  TraceSnapshot missing{30, {{"magnitude", {1.0, 2.0}}}};
  CHECK_THROWS_AS(score_trace_report({missing}), std::invalid_argument);
}

TEST_CASE("snapshot round trips are exact") {
  Rng rng(41);
  std::vector<AdapterLayer> layers{AdapterLayer(testing::random_matrix(rng, 3, 4), testing::random_matrix(rng, 3, 2),
                                                {0.1 / 3.0, -7e-300}, testing::random_matrix(rng, 2, 4), 0.25)};
  layers[0].set_mask({true, false});
  const std::vector<std::string> modules{"dense"};
  const auto back = adapters_from_json(adapters_to_json(layers, modules));
  REQUIRE(back.size() == 1);
  CHECK(back[0].w0() == layers[0].w0());
  CHECK(back[0].p() == layers[0].p());
  CHECK(back[0].q() == layers[0].q());
  CHECK(back[0].lambda() == layers[0].lambda());
  CHECK(back[0].mask() == layers[0].mask());
  CHECK(back[0].gamma_orth() == 0.25);

  IvonHyper hyper;
  hyper.ess = 300.0;
  GaussianState st = GaussianState::create(testing::random_vector(rng, 5), hyper);
  st.step = 17;
  const auto gs = gaussian_state_from_json(gaussian_state_to_json(st));
  CHECK(gs.mu == st.mu);
  CHECK(gs.h == st.h);
  CHECK(gs.step == 17);
  CHECK(gs.lambda_ess == 300.0);

  ImportanceState imp = ImportanceState::create(3);
  update_sensitivity_ema(imp, std::vector<double>{0.3, 1.0 / 7.0, 2.0});
  const auto ib = importance_from_json(importance_to_json(imp));
  CHECK(ib.i_bar == imp.i_bar);
  CHECK(ib.u_bar == imp.u_bar);

  CHECK_THROWS(adapters_from_json(Json{{"format", "other/1"}}));
}

}
