#include "adarank/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>

#include "adarank/errors.hpp"
#include "adarank/importance.hpp"
#include "adarank/kernels.hpp"
#include "adarank/optimizer.hpp"

namespace adarank {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

void ExperimentConfig::validate() const {
  if (optimizer != "ivon" && optimizer != "adam") {
    throw ConfigError("unknown optimizer '" + optimizer + "' (expected ivon or adam)");
  }
  const ScorerKind kind = parse_scorer(scorer);
  if (adaptive && optimizer == "adam" && uses_posterior(kind)) {
    throw ConfigError("scorer '" + scorer +
                      "' needs a posterior; it is only available with optimizer=ivon");
  }
  resolved_task().validate();
  if (target_rank == 0) throw ConfigError("target_rank must be positive");
  const std::size_t r0 = resolved_init_rank();
  if (r0 > task.width) throw ConfigError("init_rank exceeds layer width");
  if (!adaptive && r0 != target_rank) {
    throw ConfigError("fixed-rank mode needs init_rank == target_rank (or init_rank = 0)");
  }
  if (adaptive) schedule().validate();
  if (total_steps == 0) throw ConfigError("total_steps must be positive");
  if (warmup_steps + final_steps >= total_steps) {
    throw ConfigError("warmup_steps + final_steps must be < total_steps");
  }
  if (allocation_interval == 0) throw ConfigError("allocation_interval must be positive");
  if (batch_size == 0 || batch_size > task.n_train) throw ConfigError("batch_size must be in [1, n_train]");
  if (eval_interval == 0 || log_interval == 0) throw ConfigError("eval/log intervals must be positive");
  if (mc_samples == 0) throw ConfigError("mc_samples must be positive");
  const double rate = resolved_lr();
  if (!(rate > 0.0) || !std::isfinite(rate)) throw ConfigError("lr must be positive");
  if (!(resolved_warmup_lr() > 0.0)) throw ConfigError("warmup_lr must be positive");
  auto in_unit = [](double b) { return b > 0.0 && b < 1.0; };
  if (!in_unit(ivon_beta1) || !in_unit(ivon_beta2) || !in_unit(adam_beta1) || !in_unit(adam_beta2)) {
    throw ConfigError("optimizer betas must lie in (0, 1)");
  }
  if (!in_unit(sens_beta1) || !in_unit(sens_beta2)) throw ConfigError("sens_beta1/2 must lie in (0, 1)");
  if (!(score_ema >= 0.0 && score_ema < 1.0)) throw ConfigError("score_ema must lie in [0, 1)");
  if (!(ivon_delta > 0.0) || !(ivon_h_init >= 0.0)) throw ConfigError("ivon_delta > 0 and ivon_h_init >= 0 required");
  if (ivon_ess && !(*ivon_ess > 0.0)) throw ConfigError("ivon_ess must be positive");
  if (!(gamma_orth >= 0.0) || !(init_std > 0.0)) throw ConfigError("gamma_orth >= 0 and init_std > 0 required");
  kernels::parse_isa(kernels);
}

double ExperimentConfig::resolved_lr() const {
  if (lr) return *lr;
  return optimizer == "ivon" ? 0.2 : 5e-3;
}

double ExperimentConfig::resolved_warmup_lr() const {
  if (warmup_lr) return *warmup_lr;
  return optimizer == "ivon" ? 1.0 : resolved_lr();
}

std::size_t ExperimentConfig::resolved_init_rank() const {
  if (!adaptive) return target_rank;
  if (init_rank != 0) return init_rank;
  return static_cast<std::size_t>(std::llround(1.5 * static_cast<double>(target_rank)));
}

std::size_t ExperimentConfig::resolved_target_budget() const {
  if (!adaptive) return task.layers() * target_rank;
  return target_budget != 0 ? target_budget : task.layers() * target_rank;
}

TaskSpec ExperimentConfig::resolved_task() const {
  TaskSpec t = task;
  t.seed = task_seed.value_or(seed);
  return t;
}

BudgetSchedule ExperimentConfig::schedule() const {
  const std::size_t b0 = task.layers() * resolved_init_rank();
  return BudgetSchedule{b0, resolved_target_budget(), warmup_steps, final_steps, total_steps};
}

std::string ExperimentConfig::label() const {
  return optimizer + "/" + (adaptive ? scorer : std::string("lora"));
}

namespace {

template <typename T>
T get_as(const Json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

using Setter = std::function<void(ExperimentConfig&, const Json&, const std::string&)>;

template <typename T, typename M>
Setter field(M member) {
  return [member](ExperimentConfig& c, const Json& v, const std::string& key) {
    c.*member = get_as<T>(v, key);
  };
}

template <typename T, typename M>
Setter optional_field(M member) {
  return [member](ExperimentConfig& c, const Json& v, const std::string& key) {
    if (v.is_null()) {
      c.*member = std::nullopt;
    } else {
      c.*member = get_as<T>(v, key);
    }
  };
}

const std::map<std::string, Setter>& setters() {
  using C = ExperimentConfig;
  static const std::map<std::string, Setter> table{
      {"optimizer", field<std::string>(&C::optimizer)},
      {"scorer", field<std::string>(&C::scorer)},
      {"adaptive", field<bool>(&C::adaptive)},
      {"target_rank", field<std::size_t>(&C::target_rank)},
      {"init_rank", field<std::size_t>(&C::init_rank)},
      {"target_budget", field<std::size_t>(&C::target_budget)},
      {"total_steps", field<std::size_t>(&C::total_steps)},
      {"warmup_steps", field<std::size_t>(&C::warmup_steps)},
      {"final_steps", field<std::size_t>(&C::final_steps)},
      {"allocation_interval", field<std::size_t>(&C::allocation_interval)},
      {"lr", optional_field<double>(&C::lr)},
      {"warmup_lr", optional_field<double>(&C::warmup_lr)},
      {"ivon_beta1", field<double>(&C::ivon_beta1)},
      {"ivon_beta2", field<double>(&C::ivon_beta2)},
      {"ivon_ess", optional_field<double>(&C::ivon_ess)},
      {"ivon_delta", field<double>(&C::ivon_delta)},
      {"ivon_h_init", field<double>(&C::ivon_h_init)},
      {"mc_samples", field<std::size_t>(&C::mc_samples)},
      {"adam_beta1", field<double>(&C::adam_beta1)},
      {"adam_beta2", field<double>(&C::adam_beta2)},
      {"adam_eps", field<double>(&C::adam_eps)},
      {"gamma_orth", field<double>(&C::gamma_orth)},
      {"init_std", field<double>(&C::init_std)},
      {"sens_beta1", field<double>(&C::sens_beta1)},
      {"sens_beta2", field<double>(&C::sens_beta2)},
      {"score_ema", field<double>(&C::score_ema)},
      {"batch_size", field<std::size_t>(&C::batch_size)},
      {"eval_interval", field<std::size_t>(&C::eval_interval)},
      {"log_interval", field<std::size_t>(&C::log_interval)},
      {"rank_csv_interval", field<std::size_t>(&C::rank_csv_interval)},
      {"trace_scores", field<bool>(&C::trace_scores)},
      {"task", [](C& c, const Json& v, const std::string& k) {
         c.task.kind = parse_task_kind(get_as<std::string>(v, k));
       }},
      {"width", [](C& c, const Json& v, const std::string& k) { c.task.width = get_as<std::size_t>(v, k); }},
      {"planted_ranks", [](C& c, const Json& v, const std::string& k) {
         c.task.planted_ranks = get_as<std::vector<std::size_t>>(v, k);
       }},
      {"delta_scale", [](C& c, const Json& v, const std::string& k) { c.task.delta_scale = get_as<double>(v, k); }},
      {"noise", [](C& c, const Json& v, const std::string& k) { c.task.noise = get_as<double>(v, k); }},
      {"n_train", [](C& c, const Json& v, const std::string& k) { c.task.n_train = get_as<std::size_t>(v, k); }},
      {"n_val", [](C& c, const Json& v, const std::string& k) { c.task.n_val = get_as<std::size_t>(v, k); }},
      {"task_seed", optional_field<std::uint64_t>(&C::task_seed)},
      {"seed", field<std::uint64_t>(&C::seed)},
      {"seeds", field<std::vector<std::uint64_t>>(&C::seeds)},
      {"output_dir", field<std::string>(&C::output_dir)},
      {"kernels", field<std::string>(&C::kernels)},
  };
  return table;
}

}  // namespace

void ExperimentConfig::merge_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  const auto& table = setters();
  for (const auto& [key, value] : j.items()) {
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(*this, value, key);
  }
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : setters()) keys.push_back(k);
  return keys;
}

ExperimentConfig ExperimentConfig::from_json(const Json& j) {
  ExperimentConfig c;
  c.merge_json(j);
  return c;
}

Json ExperimentConfig::to_json() const {
  auto opt = [](const auto& o) -> Json { return o ? Json(*o) : Json(nullptr); };
  return Json{
      {"optimizer", optimizer},
      {"scorer", scorer},
      {"adaptive", adaptive},
      {"target_rank", target_rank},
      {"init_rank", init_rank},
      {"target_budget", target_budget},
      {"total_steps", total_steps},
      {"warmup_steps", warmup_steps},
      {"final_steps", final_steps},
      {"allocation_interval", allocation_interval},
      {"lr", opt(lr)},
      {"warmup_lr", opt(warmup_lr)},
      {"ivon_beta1", ivon_beta1},
      {"ivon_beta2", ivon_beta2},
      {"ivon_ess", opt(ivon_ess)},
      {"ivon_delta", ivon_delta},
      {"ivon_h_init", ivon_h_init},
      {"mc_samples", mc_samples},
      {"adam_beta1", adam_beta1},
      {"adam_beta2", adam_beta2},
      {"adam_eps", adam_eps},
      {"gamma_orth", gamma_orth},
      {"init_std", init_std},
      {"sens_beta1", sens_beta1},
      {"sens_beta2", sens_beta2},
      {"score_ema", score_ema},
      {"batch_size", batch_size},
      {"eval_interval", eval_interval},
      {"log_interval", log_interval},
      {"rank_csv_interval", rank_csv_interval},
      {"trace_scores", trace_scores},
      {"task", task_kind_name(task.kind)},
      {"width", task.width},
      {"planted_ranks", task.planted_ranks},
      {"delta_scale", task.delta_scale},
      {"noise", task.noise},
      {"n_train", task.n_train},
      {"n_val", task.n_val},
      {"task_seed", opt(task_seed)},
      {"seed", seed},
      {"seeds", seeds},
      {"output_dir", output_dir},
      {"kernels", kernels},
  };
}

std::filesystem::path resolve_output_dir(const std::string& output_dir) {
  std::filesystem::path p(output_dir);
  if (p.is_absolute()) return p;
  if (const char* root = std::getenv("ADARANK_OUTPUT_ROOT"); root != nullptr && *root != '\0') {
    return std::filesystem::path(root) / p;
  }
  return p;
}

double learning_rate_at(const ExperimentConfig& c, std::size_t t) {
  if (t <= c.warmup_steps) return c.resolved_warmup_lr();
  const double span = static_cast<double>(c.total_steps - c.warmup_steps);
  const double remaining = static_cast<double>(c.total_steps - t + 1);
  return c.resolved_lr() * remaining / span;
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

namespace {

class BatchSampler {
 public:
  BatchSampler(std::size_t n, std::size_t batch, Rng rng)
      : order_(n), batch_(batch), rng_(std::move(rng)) {
    std::iota(order_.begin(), order_.end(), 0);
    shuffle();
  }

  std::span<const std::size_t> next() {
    if (pos_ + batch_ > order_.size()) shuffle();
    auto out = std::span<const std::size_t>(order_).subspan(pos_, batch_);
    pos_ += batch_;
    return out;
  }

 private:
  void shuffle() {
    for (std::size_t i = order_.size(); i > 1; --i) {
      std::swap(order_[i - 1], order_[rng_.uniform_index(i)]);
    }
    pos_ = 0;
  }

  std::vector<std::size_t> order_;
  std::size_t batch_;
  Rng rng_;
  std::size_t pos_ = 0;
};

std::unique_ptr<Optimizer> make_optimizer(const ExperimentConfig& c, std::vector<double> init) {
  if (c.optimizer == "ivon") {
    IvonHyper h;
    h.lr = c.resolved_lr();
    h.beta1 = c.ivon_beta1;
    h.beta2 = c.ivon_beta2;
    h.ess = c.ivon_ess.value_or(static_cast<double>(c.task.n_train));
    h.delta = c.ivon_delta;
    h.h_init = c.ivon_h_init;
    return std::make_unique<IvonOptimizer>(std::move(init), h);
  }
  return std::make_unique<AdamOptimizer>(std::move(init), c.resolved_lr(), c.adam_beta1,
                                         c.adam_beta2, c.adam_eps);
}

std::vector<TripletScore> triplet_scores(const AdaptedNetwork& net,
                                         std::span<const double> per_scalar) {
  std::vector<TripletScore> out;
  for (std::size_t k = 0; k < net.layers().size(); ++k) {
    const auto& layer = net.layers()[k];
    auto part = aggregate_triplet(layer, k, per_scalar.subspan(net.offset(k), layer.parameter_count()));
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

std::vector<double> score_values(const std::vector<TripletScore>& ts) {
  std::vector<double> v;
  v.reserve(ts.size());
  for (const auto& t : ts) v.push_back(t.score);
  return v;
}

void write_ranks(const std::filesystem::path& path, const std::vector<RankCell>& cells) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_rank_csv(out, cells);
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  kernels::select(kernels::parse_isa(config.kernels));

  RunResult result{config, {}};
  RunMetrics& metrics = result.metrics;
  const TaskSpec spec = config.resolved_task();
  const SyntheticTask task = generate_task(spec);
  metrics.label = config.label();
  metrics.metric = std::string(metric_name(spec.kind));
  metrics.higher_is_better = higher_is_better(spec.kind);

  const Rng root(config.seed);
  Rng init_rng = root.fork(10);
  Rng sample_rng = root.fork(12);
  BatchSampler batches(task.train.size(), config.batch_size, root.fork(11));

  AdaptedNetwork net = AdaptedNetwork::for_task(task, config.resolved_init_rank(), init_rng,
                                                config.gamma_orth, config.init_std);
  const std::size_t n_params = net.parameter_count();
  std::unique_ptr<Optimizer> opt = make_optimizer(config, net.read_parameters());
  const bool is_ivon = opt->posterior().has_value();

  const ScorerKind kind = parse_scorer(config.scorer);
  const bool track_sensitivity = kind == ScorerKind::sensitivity || config.trace_scores;
  SensitivityScorer sens(n_params, config.sens_beta1, config.sens_beta2);
  ScoreSmoother smoother(config.score_ema);
  GradientHistory history(n_params);
  const BudgetSchedule schedule = config.schedule();

  std::optional<std::filesystem::path> out_dir;
  if (!config.output_dir.empty()) {
    out_dir = resolve_output_dir(config.output_dir);
    std::filesystem::create_directories(*out_dir);
    if (config.rank_csv_interval > 0) std::filesystem::create_directories(*out_dir / "ranks");
  }

  std::vector<double> grad(n_params), grad_mean(n_params);
  std::vector<double> best_params;
  std::vector<std::vector<bool>> best_masks;
  bool have_best = false;
  double loss_acc = 0.0;
  std::size_t loss_count = 0;

  for (std::size_t t = 1; t <= config.total_steps; ++t) {
    const double lr = learning_rate_at(config, t);
    const Dataset batch = gather(task.train, batches.next());
    const auto masked = net.masked_lambda_indices();

    std::fill(grad_mean.begin(), grad_mean.end(), 0.0);
    double task_loss = 0.0;
    for (std::size_t s = 0; s < config.mc_samples; ++s) {
      net.write_parameters(opt->sample(sample_rng));
      task_loss += net.loss_and_gradient(batch, grad).task;
      for (std::size_t i = 0; i < n_params; ++i) grad_mean[i] += grad[i];
      // Masked singular values stay frozen; their raw gradient is kept for scoring.
      for (std::size_t i : masked) grad[i] = 0.0;
      opt->accumulate(grad);
    }
    if (config.mc_samples > 1) {
      const double inv = 1.0 / static_cast<double>(config.mc_samples);
      for (double& g : grad_mean) g *= inv;
    }
    loss_acc += task_loss / static_cast<double>(config.mc_samples);
    ++loss_count;

    opt->step(lr);
    net.write_parameters(opt->parameters());
    if (track_sensitivity) sens.observe(opt->parameters(), grad_mean);
    if (is_ivon) {
      std::vector<double> masked_grad = grad_mean;
      for (std::size_t i : masked) masked_grad[i] = 0.0;
      history.record(masked_grad);
    }

    const bool allocation_due =
        config.adaptive && t > schedule.t_warmup &&
        ((t - schedule.t_warmup) % config.allocation_interval == 0 || t == schedule.decay_end());
    if (allocation_due) {
      std::vector<double> per_scalar = kind == ScorerKind::sensitivity
                                           ? sens.scores()
                                           : PosteriorScorer(kind).scores(*opt->posterior());
      per_scalar = smoother.apply(per_scalar);
      const auto ts = triplet_scores(net, per_scalar);
      const std::size_t budget = budget_at(schedule, t);
      const AllocationDecision decision = allocate(ts, budget, t);
      apply_allocation(decision, net.layers());
      const auto values = score_values(ts);
      const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
      metrics.allocations.push_back(
          {t, budget, net.active_rank(), *lo,
           std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size()),
           *hi});

      if (config.trace_scores) {
        TraceSnapshot snap{t, {}};
        snap.triplet_scores["sensitivity"] = score_values(triplet_scores(net, sens.scores()));
        if (const auto post = opt->posterior()) {
          for (ScorerKind k : all_scorers()) {
            if (!uses_posterior(k)) continue;
            snap.triplet_scores[std::string(scorer_name(k))] =
                score_values(triplet_scores(net, PosteriorScorer(k).scores(*post)));
          }
        }
        metrics.traces.push_back(std::move(snap));
      }
    }

    if (t % config.log_interval == 0 || t == config.total_steps) {
      metrics.steps.push_back({t, lr, loss_acc / static_cast<double>(loss_count), net.active_rank()});
      loss_acc = 0.0;
      loss_count = 0;
    }

    if (t % config.eval_interval == 0 || t == config.total_steps) {
      const double val = net.metric(task.val);
      metrics.evals.push_back({t, val, net.loss(task.val).task});
      // Only checkpoints that already satisfy the target budget are eligible.
      const bool eligible = !config.adaptive || t >= schedule.decay_end();
      const bool better = !have_best || (metrics.higher_is_better ? val > metrics.best_val
                                                                  : val < metrics.best_val);
      if (eligible && better) {
        have_best = true;
        metrics.best_val = val;
        metrics.best_step = t;
        best_params.assign(opt->parameters().begin(), opt->parameters().end());
        best_masks.clear();
        for (const auto& l : net.layers()) best_masks.push_back(l.mask());
        metrics.best_ranks = rank_distribution(net.layers(), net.module_names());
      }
      if (t == config.total_steps) metrics.final_val = val;
    }

    if (out_dir && config.rank_csv_interval > 0 && t % config.rank_csv_interval == 0) {
      std::ostringstream name;
      name << "step_" << t << ".csv";
      write_ranks(*out_dir / "ranks" / name.str(), rank_distribution(net.layers(), net.module_names()));
    }
  }

  metrics.final_ranks = rank_distribution(net.layers(), net.module_names());
  metrics.active_parameters = net.active_parameter_count();
  if (is_ivon && history.count() >= 100) {
    const auto& ivon = static_cast<const IvonOptimizer&>(*opt);
    metrics.hessian_grad_spearman = hessian_vs_squared_grad_diagnostic(ivon.state(), history).spearman;
  }

  if (out_dir) {
    write_json_file(*out_dir / "config.json", config.to_json());
    {
      std::ofstream out(*out_dir / "metrics.jsonl");
      write_metrics_jsonl(out, metrics);
    }
    write_ranks(*out_dir / "ranks_final.csv", metrics.final_ranks);
    write_ranks(*out_dir / "ranks_best.csv", metrics.best_ranks);

    AdaptedNetwork best = net;
    if (have_best) {
      best.write_parameters(best_params);
      for (std::size_t k = 0; k < best_masks.size(); ++k) best.layers()[k].set_mask(best_masks[k]);
    }
    write_json_file(*out_dir / "adapters.json", adapters_to_json(best.layers(), best.module_names()));

    Json ckpt = is_ivon
                    ? gaussian_state_to_json(static_cast<const IvonOptimizer&>(*opt).state())
                    : adam_state_to_json(opt->parameters(),
                                         static_cast<const AdamOptimizer&>(*opt).state());
    if (track_sensitivity) ckpt["importance"] = importance_to_json(sens.state());
    write_json_file(*out_dir / "optimizer.json", ckpt);
    write_json_file(*out_dir / "summary.json", run_summary_json(result));

    if (!metrics.traces.empty()) {
      std::ofstream out(*out_dir / "score_trace.jsonl");
      for (const auto& snap : metrics.traces) {
        out << Json{{"step", snap.step}, {"scores", snap.triplet_scores}}.dump() << '\n';
      }
    }
  }
  return result;
}

void write_metrics_jsonl(std::ostream& out, const RunMetrics& m) {
  struct Line {
    std::size_t step;
    int order;
    Json record;
  };
  std::vector<Line> lines;
  for (const auto& s : m.steps) {
    lines.push_back({s.step, 0, Json{{"type", "step"}, {"step", s.step}, {"lr", s.lr},
                                     {"train_loss", s.train_loss}, {"active_rank", s.active_rank}}});
  }
  for (const auto& a : m.allocations) {
    lines.push_back({a.step, 1, Json{{"type", "allocation"}, {"step", a.step}, {"budget", a.budget},
                                     {"active_rank", a.active_rank}, {"score_min", a.score_min},
                                     {"score_mean", a.score_mean}, {"score_max", a.score_max}}});
  }
  for (const auto& e : m.evals) {
    lines.push_back({e.step, 2, Json{{"type", "eval"}, {"step", e.step}, {"val_metric", e.val_metric},
                                     {"val_loss", e.val_loss}}});
  }
  std::stable_sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) {
    return a.step != b.step ? a.step < b.step : a.order < b.order;
  });
  for (const auto& l : lines) out << l.record.dump() << '\n';
  Json summary{{"type", "summary"},     {"label", m.label},         {"metric", m.metric},
               {"best_val", m.best_val}, {"best_step", m.best_step}, {"final_val", m.final_val},
               {"active_parameters", m.active_parameters}};
  Json ranks = Json::array();
  for (const auto& c : m.final_ranks) ranks.push_back(c.rank);
  summary["final_ranks"] = std::move(ranks);
  out << summary.dump() << '\n';
}

Json run_summary_json(const RunResult& run) {
  const RunMetrics& m = run.metrics;
  auto ranks = [](const std::vector<RankCell>& cells) {
    Json a = Json::array();
    for (const auto& c : cells) a.push_back(c.rank);
    return a;
  };
  return Json{{"label", m.label},
              {"optimizer", run.config.optimizer},
              {"scorer", run.config.adaptive ? run.config.scorer : std::string("lora")},
              {"adaptive", run.config.adaptive},
              {"seed", run.config.seed},
              {"task_spec", Json{{"task", task_kind_name(run.config.task.kind)},
                                 {"width", run.config.task.width},
                                 {"planted_ranks", run.config.task.planted_ranks},
                                 {"delta_scale", run.config.task.delta_scale},
                                 {"noise", run.config.task.noise},
                                 {"n_train", run.config.task.n_train},
                                 {"n_val", run.config.task.n_val},
                                 {"seed", run.config.resolved_task().seed}}},
              {"metric", m.metric},
              {"higher_is_better", m.higher_is_better},
              {"best_val", m.best_val},
              {"best_step", m.best_step},
              {"final_val", m.final_val},
              {"final_ranks", ranks(m.final_ranks)},
              {"best_ranks", ranks(m.best_ranks)},
              {"active_parameters", m.active_parameters},
              {"hessian_grad_spearman",
               m.hessian_grad_spearman ? Json(*m.hessian_grad_spearman) : Json(nullptr)}};
}

}  // namespace adarank
