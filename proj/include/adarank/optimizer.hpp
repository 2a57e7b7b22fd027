#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "adarank/rng.hpp"

namespace adarank {

// ---------------------------------------------------------------------------
// IVON: diagonal Gaussian posterior q(theta) = N(mu, sigma^2) with
// sigma = 1 / sqrt(ess * (h + delta)). Per step, given the gradient g taken at
// theta = mu + sigma * eps:
//
//   h_hat = g * (theta - mu) * ess * (h + delta)
//   m     = beta1 * m + (1 - beta1) * g
//   h     = beta2 * h + (1 - beta2) * h_hat
//           + 0.5 * (1 - beta2)^2 * (h - h_hat)^2 / (h + delta),  clipped at 0
//   mu    = mu - lr * (m / (1 - beta1^t) + delta * mu) / (h + delta)
// ---------------------------------------------------------------------------

struct IvonHyper {
  double lr = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.99999;
  double ess = 1.0;     // effective sample size, usually the training-set size
  double delta = 1e-4;  // weight decay folded into the preconditioner
  double h_init = 0.1;
};

struct GaussianState {
  std::vector<double> mu;
  std::vector<double> h;
  std::vector<double> m;
  double lambda_ess = 1.0;
  double delta = 1e-4;
  double lr = 0.1;
  double beta1_m = 0.9;
  double beta2_h = 0.99999;
  std::uint64_t step = 0;

  static GaussianState create(std::vector<double> mu0, const IvonHyper& hyper);
  std::size_t size() const { return mu.size(); }
  // Throws NumericError if hyperparameters or vectors are invalid.
  void validate() const;
};

struct PriorSpec {
  double prior_variance = 1.0;
};

// Posterior draw. `noise` is theta - mu, needed by the Hessian estimator.
struct ParameterSample {
  std::vector<double> theta;
  std::vector<double> noise;
};

// Exactly 1 / sqrt(lambda_ess * (h + delta)) entrywise.
std::vector<double> posterior_sigma(const GaussianState& state);

ParameterSample sample_parameters(const GaussianState& state, Rng& rng);

// One IVON update with the step size stored in `state`. Throws NumericError
// on non-finite gradients and DivergenceError if any |mu| exceeds 1e6.
void step(GaussianState& state, std::span<const double> grad, std::span<const double> noise);

// Same update with an explicit gradient-noise product, averaged over samples.
void step_with_products(GaussianState& state, std::span<const double> grad,
                        std::span<const double> grad_noise);

// KL(N(mu, sigma^2) || N(0, prior_variance I)) summed over coordinates.
double kl_to_prior(std::span<const double> mu, std::span<const double> sigma,
                   const PriorSpec& prior);

// Monte-Carlo E_q[loss] over n_samples draws plus the closed-form KL term.
double elbo_estimate(const GaussianState& state, const PriorSpec& prior,
                     const std::function<double(std::span<const double>)>& loss_at, Rng& rng,
                     int n_samples);

// Running mean of squared gradients, the empirical Fisher diagonal.
class GradientHistory {
 public:
  explicit GradientHistory(std::size_t n) : sum_sq_(n, 0.0) {}
  void record(std::span<const double> grad);
  std::size_t count() const { return count_; }
  std::vector<double> mean_squared() const;

 private:
  std::vector<double> sum_sq_;
  std::size_t count_ = 0;
};

struct HessianDiagnostic {
  std::vector<double> h;
  std::vector<double> mean_sq_grad;
  std::optional<double> spearman;  // empty when undefined (constant vectors)
};

// Requires at least 100 recorded gradients.
HessianDiagnostic hessian_vs_squared_grad_diagnostic(const GaussianState& state,
                                                     const GradientHistory& history);

// ---------------------------------------------------------------------------
// Adam baseline.
// ---------------------------------------------------------------------------

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;

  static AdamState create(std::size_t n, double lr);
};

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

// ---------------------------------------------------------------------------
// Common training-loop interface so the harness can swap optimizers.
//
//   for each Monte-Carlo sample: theta = sample(rng); grad = dL(theta); accumulate(grad)
//   step(lr)
// ---------------------------------------------------------------------------

struct Posterior {
  std::vector<double> mu;
  std::vector<double> sigma;
};

class Optimizer {
 public:
  virtual ~Optimizer() = default;

  virtual std::string_view name() const = 0;
  // Point at which the next gradient is evaluated.
  virtual std::span<const double> sample(Rng& rng) = 0;
  // Gradient taken at the most recent sample.
  virtual void accumulate(std::span<const double> grad) = 0;
  // Applies the averaged accumulated gradients and clears the accumulator.
  virtual void step(double lr) = 0;
  // Point estimate: posterior mean for IVON, the weights for Adam.
  virtual std::span<const double> parameters() const = 0;
  // Empty for optimizers that do not maintain a posterior.
  virtual std::optional<Posterior> posterior() const = 0;
};

class IvonOptimizer final : public Optimizer {
 public:
  IvonOptimizer(std::vector<double> mu0, const IvonHyper& hyper);

  std::string_view name() const override { return "ivon"; }
  std::span<const double> sample(Rng& rng) override;
  void accumulate(std::span<const double> grad) override;
  void step(double lr) override;
  std::span<const double> parameters() const override { return state_.mu; }
  std::optional<Posterior> posterior() const override;

  const GaussianState& state() const { return state_; }
  GaussianState& state() { return state_; }

 private:
  GaussianState state_;
  ParameterSample current_;
  std::vector<double> grad_sum_;
  std::vector<double> grad_noise_sum_;
  int pending_ = 0;
};

class AdamOptimizer final : public Optimizer {
 public:
  AdamOptimizer(std::vector<double> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);

  std::string_view name() const override { return "adam"; }
  std::span<const double> sample(Rng&) override { return params_; }
  void accumulate(std::span<const double> grad) override;
  void step(double lr) override;
  std::span<const double> parameters() const override { return params_; }
  std::optional<Posterior> posterior() const override { return std::nullopt; }

  const AdamState& state() const { return state_; }

 private:
  std::vector<double> params_;
  AdamState state_;
  std::vector<double> grad_sum_;
  int pending_ = 0;
};

}  // namespace adarank
