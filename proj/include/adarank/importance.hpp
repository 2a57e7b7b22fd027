#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "adarank/adapter.hpp"
#include "adarank/optimizer.hpp"

namespace adarank {

// Scorer names are part of the CLI/config contract.
enum class ScorerKind { sensitivity, snr_mean, snr_abs, magnitude, inv_sigma };

ScorerKind parse_scorer(std::string_view name);
std::string_view scorer_name(ScorerKind kind);
// True for the metrics computed from the posterior (mu, sigma) alone.
bool uses_posterior(ScorerKind kind);
const std::vector<ScorerKind>& all_scorers();

// |theta * grad|
std::vector<double> sensitivity(std::span<const double> theta, std::span<const double> grad);
// |mu| / sigma
std::vector<double> snr_mean(std::span<const double> mu, std::span<const double> sigma);
// E|theta| / Std|theta| for theta ~ N(mu, sigma^2) (folded normal).
std::vector<double> snr_abs(std::span<const double> mu, std::span<const double> sigma);
std::vector<double> magnitude(std::span<const double> mu);
std::vector<double> inv_sigma(std::span<const double> sigma);

// Smoothed sensitivity and its uncertainty:
//   i_bar = beta1 * i_bar + (1 - beta1) * I
//   u_bar = beta2 * u_bar + (1 - beta2) * |I - i_bar|     (uses the new i_bar)
//   s     = i_bar * u_bar
struct ImportanceState {
  std::vector<double> i_bar;
  std::vector<double> u_bar;
  double beta1 = 0.85;
  double beta2 = 0.85;
  std::size_t step = 0;

  static ImportanceState create(std::size_t n, double beta1 = 0.85, double beta2 = 0.85);
  // i_bar * u_bar; all zeros before the first update.
  std::vector<double> scores() const;
};

std::vector<double> update_sensitivity_ema(ImportanceState& state, std::span<const double> i_t);

// Gradient-stream scorer. Needs the weights and the gradient every step.
class SensitivityScorer {
 public:
  explicit SensitivityScorer(std::size_t n, double beta1 = 0.85, double beta2 = 0.85)
      : state_(ImportanceState::create(n, beta1, beta2)) {}

  void observe(std::span<const double> theta, std::span<const double> grad);
  std::vector<double> scores() const { return state_.scores(); }
  const ImportanceState& state() const { return state_; }
  ImportanceState& state() { return state_; }

 private:
  ImportanceState state_;
};

// Posterior-state scorer. Reads only (mu, sigma) maintained by the optimizer;
// there is deliberately no way to hand it a gradient.
class PosteriorScorer {
 public:
  // Throws ConfigError for ScorerKind::sensitivity.
  explicit PosteriorScorer(ScorerKind kind);
  ScorerKind kind() const { return kind_; }
  std::vector<double> scores(const Posterior& posterior) const;

 private:
  ScorerKind kind_;
};

// Optional EMA applied on top of any metric. beta = 0 passes scores through.
class ScoreSmoother {
 public:
  explicit ScoreSmoother(double beta = 0.0) : beta_(beta) {}
  std::vector<double> apply(std::span<const double> scores);

 private:
  double beta_;
  std::vector<double> state_;
};

struct TripletScore {
  std::size_t layer_id;
  std::size_t triplet_index;
  double score;
};

// Triplet score = s(lambda_i) + mean_k s(P_ki) + mean_j s(Q_ij). `per_scalar`
// uses the layer's flat parameter layout [P | lambda | Q].
std::vector<TripletScore> aggregate_triplet(const AdapterLayer& layer, std::size_t layer_id,
                                            std::span<const double> per_scalar);

}  // namespace adarank
