// Runs every acceptance criterion and prints one PASS/FAIL line for each.
// Exit status is the number of failed criteria.

#include <adarank/adapter.hpp>
#include <adarank/budget.hpp>
#include <adarank/experiment.hpp>
#include <adarank/importance.hpp>
#include <adarank/numerics.hpp>
#include <adarank/optimizer.hpp>
#include <adarank/report.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

#include "scenarios.hpp"
#include "support.hpp"

using namespace adarank;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int failures = 0;

void report(int id, const char* title, const std::function<Outcome()>& body, double limit_s = 0.0) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (limit_s > 0.0 && secs > limit_s) {
    o.pass = false;
    o.detail += fmt(" [over time limit %.0f s]", limit_s);
  }
  if (!o.pass) ++failures;
  std::printf("criterion %d %-28s %s  %s (%.1f s)\n", id, title, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
  std::fflush(stdout);
}

// 1 -------------------------------------------------------------------------

Outcome gradient_correctness() {
  Rng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d_in = 1 + rng.uniform_index(16), d_out = 1 + rng.uniform_index(16);
    const std::size_t r = 1 + rng.uniform_index(4), batch = 1 + rng.uniform_index(8);
    AdapterLayer layer(testing::random_matrix(rng, d_in, d_out), testing::random_matrix(rng, d_in, r, 0.5),
                       testing::random_vector(rng, r), testing::random_matrix(rng, r, d_out, 0.5),
                       0.05 + rng.uniform());
    const Matrix x = testing::random_matrix(rng, batch, d_in);
    const Matrix y = testing::random_matrix(rng, batch, d_out);

    // Task loss 0.5 * mean_b ||x W - y||^2 plus gamma * R.
    auto loss = [&](std::span<const double> flat) {
      AdapterLayer l = layer;
      l.write_parameters(flat);
      const Matrix e = forward(l, x) - y;
      return 0.5 * frobenius_sq(e) / static_cast<double>(batch) + l.gamma_orth() * orthogonality_penalty(l);
    };
    const Matrix upstream = (1.0 / static_cast<double>(batch)) * (forward(layer, x) - y);
    std::vector<double> analytic(layer.parameter_count());
    backward(layer, x, upstream).flatten_into(analytic);

    Matrix flat(1, layer.parameter_count());
    layer.read_parameters(flat.values());
    const Matrix fd = finite_diff_grad([&](const Matrix& m) { return loss(m.values()); }, flat, 1e-6);

    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      num += std::pow(analytic[i] - fd.values()[i], 2);
      den += std::pow(fd.values()[i], 2);
    }
    worst = std::max(worst, std::sqrt(num) / std::max(std::sqrt(den), 1e-12));
  }
  return {worst <= 1e-5, fmt("50 layers, worst relative error %.2e (limit 1e-5)", worst)};
}

// 2 -------------------------------------------------------------------------

Outcome snr_abs_closed_form() {
  bool ok = true;
  std::string detail;
  std::uint64_t seed = 100;
  for (double ratio : {0.0, 0.5, 1.0, 2.0, 5.0}) {
    const double f = snr_abs(std::vector<double>{ratio}, std::vector<double>{1.0})[0];
    const double mc = testing::folded_snr_monte_carlo(ratio, 1.0, 1'000'000, seed++);
    const double rel = std::abs(f / mc - 1.0);
    ok = ok && rel < 0.01;
    detail += fmt("%g:%.1e ", ratio, rel);
  }
  const double at0 = snr_abs(std::vector<double>{0.0}, std::vector<double>{1.0})[0];
  const double exact = std::sqrt(2.0 / std::numbers::pi) / std::sqrt(1.0 - 2.0 / std::numbers::pi);
  ok = ok && std::abs(at0 - exact) <= 1e-6;
  return {ok, "MC rel err by mu/sigma " + detail + fmt("| mu=0 diff %.1e", std::abs(at0 - exact))};
}

// 3 -------------------------------------------------------------------------

Outcome ivon_fixed_point() {
  const auto run = testing::run_quadratic_ivon(7);
  const double mu_target = 2.0 / 2.1, sigma_target = 1.0 / std::sqrt(100.0 * 2.1);
  const double mu_err = std::abs(run.mu - mu_target);
  const double sigma_rel = std::abs(run.sigma / sigma_target - 1.0);
  return {mu_err <= 1e-3 && sigma_rel <= 0.05 && run.steps <= 5000,
          fmt("mu %.6f (|err| %.1e), sigma %.5f (rel %.1e), %zu steps", run.mu, mu_err, run.sigma, sigma_rel,
              run.steps)};
}

// 4 -------------------------------------------------------------------------

Outcome schedule_contract() {
  const ExperimentConfig defaults;
  const std::vector<BudgetSchedule> schedules{defaults.schedule(), {108, 72, 100, 200, 1000}, {30, 2, 0, 0, 997},
                                              BudgetSchedule::with_default_init(10, 17, 33, 500)};
  for (const auto& s : schedules) {
    if (budget_at(s, s.t_warmup) != s.b_init || budget_at(s, s.decay_end()) != s.b_target)
      return {false, "boundary mismatch"};
    for (std::size_t t = 1; t <= s.t_total; ++t)
      if (budget_at(s, t) > budget_at(s, t - 1)) return {false, fmt("increase at t=%zu", t)};
  }
  ExperimentConfig c;
  c.seed = 1;
  const auto run = run_experiment(c);
  const auto sched = c.schedule();
  for (const auto& a : run.metrics.allocations) {
    if (a.budget != budget_at(sched, a.step) || a.active_rank != a.budget)
      return {false, fmt("step %zu: active %zu, scheduled %zu", a.step, a.active_rank, budget_at(sched, a.step))};
  }
  return {!run.metrics.allocations.empty(),
          fmt("%zu schedules scanned; %zu allocations in end-to-end run all at budget", schedules.size(),
              run.metrics.allocations.size())};
}

// 5, 6 ----------------------------------------------------------------------

struct Variant {
  std::string optimizer;
  std::string scorer;  // "lora" for the fixed-rank baseline
};

struct SweepResults {
  std::vector<std::string> labels;
  std::map<std::string, std::vector<RunResult>> runs;
};

const SweepResults& planted_sweep() {
  static const SweepResults results = [] {
    const std::vector<Variant> variants{{"adam", "sensitivity"}, {"ivon", "sensitivity"}, {"ivon", "snr_mean"},
                                        {"ivon", "snr_abs"},     {"ivon", "magnitude"},   {"ivon", "inv_sigma"},
                                        {"adam", "lora"}};
    SweepResults out;
    for (const auto& v : variants) {
      ExperimentConfig c;
      c.optimizer = v.optimizer;
      c.adaptive = v.scorer != "lora";
      if (c.adaptive) c.scorer = v.scorer;
      else c.scorer = "sensitivity";
      out.labels.push_back(c.label());
      for (std::uint64_t seed : c.seeds) {
        c.seed = seed;
        out.runs[c.label()].push_back(run_experiment(c));
      }
    }
    return out;
  }();
  return results;
}

std::size_t final_rank(const RunResult& r, std::size_t layer) { return r.metrics.final_ranks.at(layer).rank; }

Outcome allocation_recovery() {
  const auto& sweep = planted_sweep();
  const std::vector<std::size_t> planted = TaskSpec{}.planted_ranks;
  std::size_t top = 0;
  std::vector<std::size_t> zero;
  for (std::size_t k = 0; k < planted.size(); ++k) {
    if (planted[k] == 3) top = k;
    if (planted[k] == 0) zero.push_back(k);
  }
  bool ok = true;
  std::string detail;
  for (const auto& label : sweep.labels) {
    if (label == "adam/lora") continue;
    std::size_t hits = 0;
    for (const auto& r : sweep.runs.at(label)) {
      bool hit = true;
      for (std::size_t z : zero) hit = hit && final_rank(r, top) > final_rank(r, z);
      hits += hit;
    }
    ok = ok && hits >= 4;
    detail += fmt("%s %zu/5  ", label.c_str(), hits);
  }
  return {ok, detail};
}

Outcome directional_reproduction() {
  const auto& sweep = planted_sweep();
  auto stats = [](const std::vector<RunResult>& rs) {
    double m = 0.0;
    for (const auto& r : rs) m += r.metrics.best_val;
    m /= static_cast<double>(rs.size());
    double ss = 0.0;
    for (const auto& r : rs) ss += std::pow(r.metrics.best_val - m, 2);
    return std::pair{m, ss / static_cast<double>(rs.size() - 1)};
  };
  const auto [lora_mean, lora_var] = stats(sweep.runs.at("adam/lora"));
  const bool higher = sweep.runs.at("adam/lora").front().metrics.higher_is_better;
  bool ok = true;
  std::string detail = fmt("lora %.4f; ", lora_mean);
  for (const auto& label : sweep.labels) {
    if (label == "adam/lora") continue;
    const auto& rs = sweep.runs.at(label);
    const auto [mean, var] = stats(rs);
    const double se = std::sqrt(var / rs.size() + lora_var / sweep.runs.at("adam/lora").size());
    const double gap = higher ? lora_mean - mean : mean - lora_mean;  // > 0: adaptive worse
    ok = ok && gap <= se;
    detail += fmt("%s %.4f  ", label.c_str(), mean);
  }
  return {ok, detail};
}

// 7 -------------------------------------------------------------------------

Outcome masking_reactivation() {
  Rng rng(77);
  std::vector<AdapterLayer> layers;
  for (int i = 0; i < 2; ++i)
    layers.emplace_back(testing::random_matrix(rng, 6, 6), testing::random_matrix(rng, 6, 3),
                        testing::random_vector(rng, 3), testing::random_matrix(rng, 3, 6));
  const Matrix x = testing::random_matrix(rng, 5, 6);
  const Matrix before = forward(layers[0], x);
  set_mask(layers[0], {false, true, false});
  const bool changed = !(forward(layers[0], x) == before);
  set_mask(layers[0], {true, true, true});
  const bool round_trip = forward(layers[0], x) == before;

  // Triplet (0, 0) scores low, is pruned, then recovers.
  const std::vector<std::vector<double>> stream{
      {0.9, 0.8, 0.7, 0.6, 0.5, 0.4}, {0.05, 0.8, 0.7, 0.6, 0.5, 0.4}, {0.05, 0.8, 0.7, 0.6, 0.5, 0.4},
      {0.95, 0.8, 0.7, 0.6, 0.5, 0.1}};
  std::vector<bool> kept_00;
  for (std::size_t t = 0; t < stream.size(); ++t) {
    std::vector<TripletScore> s;
    for (std::size_t i = 0; i < 6; ++i) s.push_back({i / 3, i % 3, stream[t][i]});
    const auto d = allocate(s, 4, t);
    apply_allocation(d, layers);
    kept_00.push_back(layers[0].mask()[0]);
  }
  const bool reentered = kept_00[0] && !kept_00[1] && !kept_00[2] && kept_00[3];
  set_mask(layers[0], {true, true, true});
  const bool after = forward(layers[0], x) == before;
  return {changed && round_trip && reentered && after,
          fmt("round trip bit-identical: %s; triplet (0,0) kept per step %d%d%d%d", round_trip ? "yes" : "no",
              int(kept_00[0]), int(kept_00[1]), int(kept_00[2]), int(kept_00[3]))};
}

// 8 -------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "adarank_acceptance_determinism";
  fs::remove_all(root);
  std::string files[2];
  for (int i = 0; i < 2; ++i) {
    const fs::path out = root / ("run" + std::to_string(i));
    const std::string cmd = std::string("\"") + ADARANK_CLI + "\" run --seed 3 --total_steps 1500 --warmup_steps 300"
                            " --final_steps 300 --output_dir \"" + out.string() + "\" > /dev/null";
    if (std::system(cmd.c_str()) != 0) return {false, "cli run failed: " + cmd};
    files[i] = slurp(out / "metrics.jsonl");
  }
  fs::remove_all(root);
  const bool same = !files[0].empty() && files[0] == files[1];
  return {same, fmt("metrics.jsonl %zu bytes, byte-identical: %s", files[0].size(), same ? "yes" : "no")};
}

// 9 -------------------------------------------------------------------------

template <class S>
concept AcceptsPosterior = requires(const S& s, const Posterior& p) { s.scores(p); };
template <class S>
concept AcceptsGradientSpan = requires(const S& s, std::span<const double> g) { s.scores(g); };
template <class S>
concept AcceptsGradientStream = requires(S& s, std::span<const double> a, std::span<const double> b) {
  s.observe(a, b);
};
template <class S>
concept ConstructibleWithGradients = std::is_constructible_v<S, ScorerKind, std::span<const double>>;

Outcome scorer_cost_structure() {
  constexpr bool shape = AcceptsPosterior<PosteriorScorer> && !AcceptsGradientSpan<PosteriorScorer> &&
                         !AcceptsGradientStream<PosteriorScorer> && !ConstructibleWithGradients<PosteriorScorer>;
  constexpr bool sensitivity_needs_grads = AcceptsGradientStream<SensitivityScorer>;
  bool routed = true;
  std::string names;
  const Posterior post{{0.3, -1.2, 0.0}, {0.1, 0.5, 2.0}};
  for (ScorerKind k : all_scorers()) {
    if (k == ScorerKind::sensitivity) continue;
    routed = routed && uses_posterior(k) && PosteriorScorer(k).scores(post).size() == 3;
    names += std::string(scorer_name(k)) + " ";
  }
  return {shape && sensitivity_needs_grads && routed && !uses_posterior(ScorerKind::sensitivity),
          "posterior-only interface for " + names};
}

}  // namespace

int main() {
  report(1, "gradient correctness", gradient_correctness, 10.0);
  report(2, "SNR(|theta|) closed form", snr_abs_closed_form, 30.0);
  report(3, "IVON fixed point", ivon_fixed_point, 5.0);
  report(4, "schedule contract", schedule_contract);
  report(5, "allocation recovery", allocation_recovery, 300.0);
  report(6, "adaptive vs fixed rank", directional_reproduction);
  report(7, "masking/reactivation", masking_reactivation);
  report(8, "determinism", determinism);
  report(9, "scorer cost structure", scorer_cost_structure);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures;
}
