#include "adarank/importance.hpp"

#include <cmath>
#include <string>

#include "adarank/errors.hpp"
#include "adarank/kernels.hpp"
#include "adarank/numerics.hpp"

namespace adarank {
namespace {

constexpr double kRadicandFloor = 1e-24;

void require_same(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw ShapeError(std::string(what) + ": length mismatch");
}

void require_positive(std::span<const double> sigma, const char* what) {
  for (double s : sigma) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw NumericError(std::string(what) + ": sigma must be finite and positive");
    }
  }
}

}  // namespace

ScorerKind parse_scorer(std::string_view name) {
  for (ScorerKind k : all_scorers()) {
    if (scorer_name(k) == name) return k;
  }
  throw ConfigError("unknown scorer '" + std::string(name) +
                    "' (expected sensitivity, snr_mean, snr_abs, magnitude or inv_sigma)");
}

std::string_view scorer_name(ScorerKind kind) {
  switch (kind) {
    case ScorerKind::sensitivity: return "sensitivity";
    case ScorerKind::snr_mean: return "snr_mean";
    case ScorerKind::snr_abs: return "snr_abs";
    case ScorerKind::magnitude: return "magnitude";
    case ScorerKind::inv_sigma: return "inv_sigma";
  }
  return "unknown";
}

bool uses_posterior(ScorerKind kind) { return kind != ScorerKind::sensitivity; }

const std::vector<ScorerKind>& all_scorers() {
  static const std::vector<ScorerKind> kinds{ScorerKind::sensitivity, ScorerKind::snr_mean,
                                             ScorerKind::snr_abs, ScorerKind::magnitude,
                                             ScorerKind::inv_sigma};
  return kinds;
}

std::vector<double> sensitivity(std::span<const double> theta, std::span<const double> grad) {
  require_same(theta.size(), grad.size(), "sensitivity");
  std::vector<double> out(theta.size());
  kernels::active().abs_product(theta, grad, out);
  return out;
}

std::vector<double> snr_mean(std::span<const double> mu, std::span<const double> sigma) {
  require_same(mu.size(), sigma.size(), "snr_mean");
  require_positive(sigma, "snr_mean");
  std::vector<double> out(mu.size());
  kernels::active().abs_ratio(mu, sigma, out);
  return out;
}

std::vector<double> snr_abs(std::span<const double> mu, std::span<const double> sigma) {
  require_same(mu.size(), sigma.size(), "snr_abs");
  require_positive(sigma, "snr_abs");
  static const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * M_PI);
  std::vector<double> out(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double m = mu[i];
    const double s = sigma[i];
    const double z = m / s;
    const double mean_abs =
        m * (2.0 * normal_cdf(z) - 1.0) + 2.0 * s * inv_sqrt_2pi * std::exp(-0.5 * z * z);
    double radicand = s * s + m * m - mean_abs * mean_abs;
    if (radicand < kRadicandFloor) radicand = kRadicandFloor;
    out[i] = mean_abs / std::sqrt(radicand);
  }
  return out;
}

std::vector<double> magnitude(std::span<const double> mu) {
  std::vector<double> out(mu.size());
  kernels::active().abs(mu, out);
  return out;
}

std::vector<double> inv_sigma(std::span<const double> sigma) {
  require_positive(sigma, "inv_sigma");
  std::vector<double> out(sigma.size());
  kernels::active().reciprocal(sigma, out);
  return out;
}

ImportanceState ImportanceState::create(std::size_t n, double beta1, double beta2) {
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    throw ConfigError("sensitivity EMA betas must lie in (0, 1)");
  }
  ImportanceState s;
  s.i_bar.assign(n, 0.0);
  s.u_bar.assign(n, 0.0);
  s.beta1 = beta1;
  s.beta2 = beta2;
  return s;
}

std::vector<double> ImportanceState::scores() const {
  std::vector<double> s(i_bar.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = i_bar[i] * u_bar[i];
  return s;
}

std::vector<double> update_sensitivity_ema(ImportanceState& state, std::span<const double> i_t) {
  require_same(i_t.size(), state.i_bar.size(), "update_sensitivity_ema");
  for (double v : i_t) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw NumericError("update_sensitivity_ema: sensitivity must be finite and >= 0");
    }
  }
  for (std::size_t i = 0; i < i_t.size(); ++i) {
    state.i_bar[i] = state.beta1 * state.i_bar[i] + (1.0 - state.beta1) * i_t[i];
    state.u_bar[i] =
        state.beta2 * state.u_bar[i] + (1.0 - state.beta2) * std::fabs(i_t[i] - state.i_bar[i]);
  }
  state.step += 1;
  return state.scores();
}

void SensitivityScorer::observe(std::span<const double> theta, std::span<const double> grad) {
  update_sensitivity_ema(state_, sensitivity(theta, grad));
}

PosteriorScorer::PosteriorScorer(ScorerKind kind) : kind_(kind) {
  if (!uses_posterior(kind)) {
    throw ConfigError("PosteriorScorer cannot compute '" + std::string(scorer_name(kind)) + "'");
  }
}

std::vector<double> PosteriorScorer::scores(const Posterior& posterior) const {
  switch (kind_) {
    case ScorerKind::snr_mean: return snr_mean(posterior.mu, posterior.sigma);
    case ScorerKind::snr_abs: return snr_abs(posterior.mu, posterior.sigma);
    case ScorerKind::magnitude: return magnitude(posterior.mu);
    case ScorerKind::inv_sigma: return inv_sigma(posterior.sigma);
    case ScorerKind::sensitivity: break;
  }
  throw ConfigError("unsupported posterior scorer");
}

std::vector<double> ScoreSmoother::apply(std::span<const double> scores) {
  if (beta_ <= 0.0) return {scores.begin(), scores.end()};
  if (state_.empty()) {
    state_.assign(scores.begin(), scores.end());
    return state_;
  }
  require_same(scores.size(), state_.size(), "ScoreSmoother");
  for (std::size_t i = 0; i < scores.size(); ++i) {
    state_[i] = beta_ * state_[i] + (1.0 - beta_) * scores[i];
  }
  return state_;
}

std::vector<TripletScore> aggregate_triplet(const AdapterLayer& layer, std::size_t layer_id,
                                            std::span<const double> per_scalar) {
  require_same(per_scalar.size(), layer.parameter_count(), "aggregate_triplet");
  const std::size_t r = layer.rank();
  const std::size_t d_in = layer.d_in();
  const std::size_t d_out = layer.d_out();
  const auto p_scores = per_scalar.subspan(0, d_in * r);
  const auto l_scores = per_scalar.subspan(layer.lambda_offset(), r);
  const auto q_scores = per_scalar.subspan(layer.q_offset(), r * d_out);

  std::vector<TripletScore> out;
  out.reserve(r);
  for (std::size_t i = 0; i < r; ++i) {
    double p_sum = 0.0;
    for (std::size_t k = 0; k < d_in; ++k) p_sum += p_scores[k * r + i];
    double q_sum = 0.0;
    for (std::size_t j = 0; j < d_out; ++j) q_sum += q_scores[i * d_out + j];
    const double score = l_scores[i] + p_sum / static_cast<double>(d_in) +
                         q_sum / static_cast<double>(d_out);
    if (!std::isfinite(score)) throw NumericError("aggregate_triplet: non-finite score");
    out.push_back({layer_id, i, score});
  }
  return out;
}

}  // namespace adarank
