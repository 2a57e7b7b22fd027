#include "adarank/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "adarank/errors.hpp"
#include "adarank/kernels.hpp"
#include "adarank/matrix.hpp"
#include "adarank/numerics.hpp"

namespace adarank {
namespace {

constexpr double kDivergenceLimit = 1e6;

void require_len(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw ShapeError(std::string(what) + ": length " + std::to_string(got) + ", expected " +
                     std::to_string(want));
  }
}

void check_divergence(std::span<const double> mu) {
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (!(std::fabs(mu[i]) <= kDivergenceLimit)) {
      throw DivergenceError("IVON diverged: |mu[" + std::to_string(i) + "]| = " +
                            std::to_string(std::fabs(mu[i])) + " exceeds 1e6");
    }
  }
}

}  // namespace

GaussianState GaussianState::create(std::vector<double> mu0, const IvonHyper& hyper) {
  GaussianState s;
  const std::size_t n = mu0.size();
  s.mu = std::move(mu0);
  s.h.assign(n, hyper.h_init);
  s.m.assign(n, 0.0);
  s.lambda_ess = hyper.ess;
  s.delta = hyper.delta;
  s.lr = hyper.lr;
  s.beta1_m = hyper.beta1;
  s.beta2_h = hyper.beta2;
  s.validate();
  return s;
}

void GaussianState::validate() const {
  if (h.size() != mu.size() || m.size() != mu.size()) {
    throw ShapeError("GaussianState: mu, h and m lengths differ");
  }
  if (!(lambda_ess > 0.0) || !std::isfinite(lambda_ess)) throw NumericError("ess must be > 0");
  if (!(delta > 0.0) || !std::isfinite(delta)) throw NumericError("delta must be > 0");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw NumericError("learning rate must be > 0");
  if (!(beta1_m > 0.0 && beta1_m < 1.0)) throw NumericError("beta1 must lie in (0, 1)");
  if (!(beta2_h > 0.0 && beta2_h < 1.0)) throw NumericError("beta2 must lie in (0, 1)");
  check_finite(mu, "posterior mean");
  check_finite(m, "momentum");
  for (double v : h) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw NumericError("hessian estimate must be finite and >= 0");
  }
}

std::vector<double> posterior_sigma(const GaussianState& state) {
  std::vector<double> sigma(state.size());
  kernels::active().posterior_sigma(state.h, state.lambda_ess, state.delta, sigma);
  return sigma;
}

ParameterSample sample_parameters(const GaussianState& state, Rng& rng) {
  const auto sigma = posterior_sigma(state);
  const auto eps = standard_normals(rng, state.size());
  ParameterSample s{std::vector<double>(state.size()), std::vector<double>(state.size())};
  const auto& k = kernels::active();
  std::vector<double> zeros(state.size(), 0.0);
  k.affine_noise(zeros, sigma, eps, s.noise);
  k.affine_noise(state.mu, sigma, eps, s.theta);
  return s;
}

void step_with_products(GaussianState& state, std::span<const double> grad,
                        std::span<const double> grad_noise) {
  require_len(grad.size(), state.size(), "ivon step gradient");
  require_len(grad_noise.size(), state.size(), "ivon step gradient-noise product");
  check_finite(grad, "IVON gradient");
  check_finite(grad_noise, "IVON gradient-noise product");
  state.step += 1;
  const kernels::IvonCoeffs c{state.lr,    state.beta1_m,    state.beta2_h, state.delta,
                              state.lambda_ess,
                              1.0 - std::pow(state.beta1_m, static_cast<double>(state.step))};
  kernels::active().ivon_update(c, grad, grad_noise, state.mu, state.m, state.h);
  check_divergence(state.mu);
}

void step(GaussianState& state, std::span<const double> grad, std::span<const double> noise) {
  require_len(noise.size(), state.size(), "ivon step noise");
  require_len(grad.size(), state.size(), "ivon step gradient");
  std::vector<double> products(grad.size());
  for (std::size_t i = 0; i < grad.size(); ++i) products[i] = grad[i] * noise[i];
  step_with_products(state, grad, products);
}

double kl_to_prior(std::span<const double> mu, std::span<const double> sigma,
                   const PriorSpec& prior) {
  require_len(sigma.size(), mu.size(), "kl_to_prior sigma");
  const double s2 = prior.prior_variance;
  if (!(s2 > 0.0) || !std::isfinite(s2)) throw NumericError("prior variance must be finite and > 0");
  double kl = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double ratio = sigma[i] * sigma[i] / s2;
    kl += 0.5 * (ratio + mu[i] * mu[i] / s2 - 1.0 - std::log(ratio));
  }
  return kl;
}

double elbo_estimate(const GaussianState& state, const PriorSpec& prior,
                     const std::function<double(std::span<const double>)>& loss_at, Rng& rng,
                     int n_samples) {
  if (n_samples < 1) throw std::invalid_argument("elbo_estimate: n_samples must be >= 1");
  double total = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    const auto draw = sample_parameters(state, rng);
    const double l = loss_at(draw.theta);
    if (!std::isfinite(l)) throw NumericError("elbo_estimate: loss returned a non-finite value");
    total += l;
  }
  return total / n_samples + kl_to_prior(state.mu, posterior_sigma(state), prior);
}

void GradientHistory::record(std::span<const double> grad) {
  require_len(grad.size(), sum_sq_.size(), "gradient history");
  for (std::size_t i = 0; i < grad.size(); ++i) sum_sq_[i] += grad[i] * grad[i];
  ++count_;
}

std::vector<double> GradientHistory::mean_squared() const {
  std::vector<double> out(sum_sq_.size(), 0.0);
  if (count_ == 0) return out;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = sum_sq_[i] / static_cast<double>(count_);
  return out;
}

HessianDiagnostic hessian_vs_squared_grad_diagnostic(const GaussianState& state,
                                                     const GradientHistory& history) {
  if (history.count() < 100) {
    throw std::invalid_argument("hessian diagnostic needs >= 100 recorded gradients, have " +
                                std::to_string(history.count()));
  }
  HessianDiagnostic d{state.h, history.mean_squared(), std::nullopt};
  require_len(d.mean_sq_grad.size(), d.h.size(), "gradient history");
  d.spearman = spearman(d.h, d.mean_sq_grad);
  return d;
}

AdamState AdamState::create(std::size_t n, double lr) {
  AdamState s;
  s.m.assign(n, 0.0);
  s.v.assign(n, 0.0);
  s.lr = lr;
  return s;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
  require_len(grads.size(), params.size(), "adam gradient");
  require_len(state.m.size(), params.size(), "adam state");
  check_finite(grads, "Adam gradient");
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const kernels::AdamCoeffs c{state.lr, state.beta1, state.beta2, state.eps,
                              1.0 - std::pow(state.beta1, t), 1.0 - std::pow(state.beta2, t)};
  kernels::active().adam_update(c, grads, params, state.m, state.v);
}

IvonOptimizer::IvonOptimizer(std::vector<double> mu0, const IvonHyper& hyper)
    : state_(GaussianState::create(std::move(mu0), hyper)),
      grad_sum_(state_.size(), 0.0),
      grad_noise_sum_(state_.size(), 0.0) {}

std::span<const double> IvonOptimizer::sample(Rng& rng) {
  current_ = sample_parameters(state_, rng);
  return current_.theta;
}

void IvonOptimizer::accumulate(std::span<const double> grad) {
  require_len(grad.size(), state_.size(), "ivon accumulate");
  if (current_.noise.empty()) throw std::logic_error("IvonOptimizer: accumulate before sample");
  for (std::size_t i = 0; i < grad.size(); ++i) {
    grad_sum_[i] += grad[i];
    grad_noise_sum_[i] += grad[i] * current_.noise[i];
  }
  ++pending_;
  current_.noise.clear();
}

void IvonOptimizer::step(double lr) {
  if (pending_ == 0) throw std::logic_error("IvonOptimizer: step without gradients");
  if (pending_ > 1) {
    const double inv = 1.0 / pending_;
    for (double& v : grad_sum_) v *= inv;
    for (double& v : grad_noise_sum_) v *= inv;
  }
  state_.lr = lr;
  adarank::step_with_products(state_, grad_sum_, grad_noise_sum_);
  std::fill(grad_sum_.begin(), grad_sum_.end(), 0.0);
  std::fill(grad_noise_sum_.begin(), grad_noise_sum_.end(), 0.0);
  pending_ = 0;
}

std::optional<Posterior> IvonOptimizer::posterior() const {
  return Posterior{state_.mu, posterior_sigma(state_)};
}

AdamOptimizer::AdamOptimizer(std::vector<double> params, double lr, double beta1, double beta2,
                             double eps)
    : params_(std::move(params)),
      state_(AdamState::create(params_.size(), lr)),
      grad_sum_(params_.size(), 0.0) {
  state_.beta1 = beta1;
  state_.beta2 = beta2;
  state_.eps = eps;
}

void AdamOptimizer::accumulate(std::span<const double> grad) {
  require_len(grad.size(), params_.size(), "adam accumulate");
  for (std::size_t i = 0; i < grad.size(); ++i) grad_sum_[i] += grad[i];
  ++pending_;
}

void AdamOptimizer::step(double lr) {
  if (pending_ == 0) throw std::logic_error("AdamOptimizer: step without gradients");
  if (pending_ > 1) {
    const double inv = 1.0 / pending_;
    for (double& v : grad_sum_) v *= inv;
  }
  state_.lr = lr;
  adam_step(params_, grad_sum_, state_);
  std::fill(grad_sum_.begin(), grad_sum_.end(), 0.0);
  pending_ = 0;
}

}  // namespace adarank
