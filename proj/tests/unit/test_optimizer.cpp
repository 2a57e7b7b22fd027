#include <doctest.h>

#include <adarank/errors.hpp>
#include <adarank/optimizer.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "scenarios.hpp"
#include "support.hpp"

using namespace adarank;

namespace {

GaussianState state_with(std::vector<double> mu, double h, double ess, double delta) {
  IvonHyper hyper;
  hyper.ess = ess;
  hyper.delta = delta;
  hyper.h_init = h;
  return GaussianState::create(std::move(mu), hyper);
}

}  // namespace

TEST_SUITE("optimizer") {

TEST_CASE("posterior sigma formula") {
  CHECK(posterior_sigma(state_with({0.0}, 1.9, 100.0, 0.1))[0] ==
        doctest::Approx(0.0707107).epsilon(1e-6));
  CHECK(posterior_sigma(state_with({0.0}, 0.0, 100.0, 0.1))[0] ==
        doctest::Approx(1.0 / std::sqrt(10.0)).epsilon(1e-15));
}

TEST_CASE("huge h collapses samples onto mu") {
  Rng rng(1);
  const auto s = sample_parameters(state_with({1.5, -2.0}, 1e20, 1.0, 1e-4), rng);
  CHECK(std::abs(s.theta[0] - 1.5) < 1e-6);
  CHECK(std::abs(s.theta[1] + 2.0) < 1e-6);
}

TEST_CASE("samples are reproducible and have the posterior spread") {
  const GaussianState st = state_with(std::vector<double>(1, 0.3), 4.0, 10.0, 1e-4);
  Rng a(5), b(5);
  CHECK(sample_parameters(st, a).theta == sample_parameters(st, b).theta);

  Rng rng(6);
  const int n = 200000;
  double s1 = 0.0, s2 = 0.0, noise_err = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto d = sample_parameters(st, rng);
    noise_err = std::max(noise_err, std::abs(d.noise[0] - (d.theta[0] - 0.3)));
    s1 += d.theta[0];
    s2 += d.theta[0] * d.theta[0];
  }
  const double mean = s1 / n, sd = std::sqrt(s2 / n - mean * mean);
  const double sigma = posterior_sigma(st)[0];
  CHECK(noise_err < 1e-15);
  CHECK(std::abs(sd / sigma - 1.0) < 0.02);
  CHECK(std::abs(mean - 0.3) < 4.0 * sigma / std::sqrt(n));
}

TEST_CASE("zero gradient at mu = 0 is a fixed point") {
  GaussianState st = state_with({0.0, 0.0}, 0.5, 10.0, 1e-3);
  const std::vector<double> zero{0.0, 0.0};
  for (int t = 0; t < 100; ++t) step(st, zero, zero);
  CHECK(st.mu == std::vector<double>{0.0, 0.0});
  CHECK(st.step == 100);
}

TEST_CASE("one step matches a hand evaluation") {
  GaussianState st = state_with({0.5}, 0.2, 10.0, 0.01);
  st.lr = 0.05;
  st.beta1_m = 0.9;
  st.beta2_h = 0.99;
  const double g = 0.8, noise = 0.1;
  const double hh = g * noise * 10.0 * (0.2 + 0.01);
  const double h = 0.99 * 0.2 + 0.01 * hh + 0.5 * 0.01 * 0.01 * (0.2 - hh) * (0.2 - hh) / (0.2 + 0.01);
  const double m = 0.1 * g;
  const double mu = 0.5 - 0.05 * (m / 0.1 + 0.01 * 0.5) / (h + 0.01);
  step(st, std::vector<double>{g}, std::vector<double>{noise});
  CHECK(st.h[0] == doctest::Approx(h).epsilon(1e-14));
  CHECK(st.m[0] == doctest::Approx(m).epsilon(1e-14));
  CHECK(st.mu[0] == doctest::Approx(mu).epsilon(1e-14));
}

TEST_CASE("h never goes negative") {
  GaussianState st = state_with({0.0}, 0.01, 1.0, 1e-4);
  st.beta2_h = 0.5;
  step(st, std::vector<double>{1000.0}, std::vector<double>{-1000.0});
  CHECK(st.h[0] >= 0.0);
}

TEST_CASE("quadratic fixed point") {
  const auto run = testing::run_quadratic_ivon(123);
  CHECK(std::abs(run.mu - 2.0 / 2.1) < 1e-3);
  CHECK(std::abs(run.h / 2.0 - 1.0) < 0.05);
  CHECK(std::abs(run.sigma / (1.0 / std::sqrt(100.0 * 2.1)) - 1.0) < 0.05);
}

TEST_CASE("step rejects bad input and guards divergence") {
  GaussianState st = state_with({1.0}, 0.1, 1.0, 1e-4);
  CHECK_THROWS_AS(step(st, std::vector<double>{NAN}, std::vector<double>{0.0}), NumericError);
  CHECK_THROWS_AS(step(st, std::vector<double>{1.0, 2.0}, std::vector<double>{0.0}), ShapeError);
  GaussianState far = state_with({9.9e5}, 0.1, 1.0, 1e-4);
  CHECK_THROWS_AS(step(far, std::vector<double>{-1e6}, std::vector<double>{0.0}), DivergenceError);
}

TEST_CASE("updates are deterministic") {
  auto run = [] {
    IvonHyper hyper;
    hyper.ess = 50.0;
    IvonOptimizer opt({0.2, -0.4, 1.0}, hyper);
    Rng rng(77);
    for (int t = 0; t < 200; ++t) {
      const auto th = opt.sample(rng);
      std::vector<double> g(th.begin(), th.end());
      for (double& v : g) v = 3.0 * v - 1.0;
      opt.accumulate(g);
      opt.step(0.05);
    }
    return opt.state().mu;
  };
  CHECK(run() == run());
}

TEST_CASE("kl matches numeric integration") {
  const PriorSpec prior{2.0};
  for (auto [mu, sigma] : {std::pair{0.0, 1.0}, {1.0, 0.5}, {-2.0, 3.0}, {0.3, 0.05}}) {
    auto log_q = [&](double t) {
      return -0.5 * std::pow((t - mu) / sigma, 2) - std::log(sigma * std::sqrt(2.0 * std::numbers::pi));
    };
    auto log_p = [&](double t) {
      return -0.5 * t * t / prior.prior_variance - 0.5 * std::log(2.0 * std::numbers::pi * prior.prior_variance);
    };
    const double oracle = testing::simpson(
        [&](double t) { return std::exp(log_q(t)) * (log_q(t) - log_p(t)); }, mu - 14 * sigma,
        mu + 14 * sigma, 20000);
    CHECK(std::abs(kl_to_prior(std::vector<double>{mu}, std::vector<double>{sigma}, prior) - oracle) < 1e-6);
  }
  CHECK(kl_to_prior(std::vector<double>{0.0}, std::vector<double>{1.5}, PriorSpec{2.25}) == 0.0);
}

TEST_CASE("elbo examples") {
  Rng rng(3);
  // q = p = N(0, 1), zero loss.
  const GaussianState q0 = state_with({0.0}, 0.0, 1.0, 1.0);
  CHECK(elbo_estimate(q0, PriorSpec{1.0}, [](std::span<const double>) { return 0.0; }, rng, 10) == 0.0);

  // mu = 1, sigma = 1 against N(0, 1): KL = 0.5, E[theta^2] = 2.
  const GaussianState q1 = state_with({1.0}, 0.0, 1.0, 1.0);
  CHECK(kl_to_prior(q1.mu, posterior_sigma(q1), PriorSpec{1.0}) == doctest::Approx(0.5).epsilon(1e-15));
  const int n = 20000;
  const double est = elbo_estimate(q1, PriorSpec{1.0},
                                   [](std::span<const double> t) { return t[0] * t[0]; }, rng, n);
  // Var(theta^2) for N(1, 1) is 4 mu^2 sigma^2 + 2 sigma^4 = 6.
  CHECK(std::abs(est - 2.5) < 3.0 * std::sqrt(6.0 / n));
}

TEST_CASE("hessian diagnostic") {
  GaussianState st = state_with(std::vector<double>(4, 0.0), 0.1, 1.0, 1e-4);
  GradientHistory hist(4);
  for (int i = 0; i < 99; ++i) hist.record(std::vector<double>(4, 0.0));
  CHECK_THROWS_AS(hessian_vs_squared_grad_diagnostic(st, hist), std::invalid_argument);
  hist.record(std::vector<double>(4, 0.0));
  const auto d = hessian_vs_squared_grad_diagnostic(st, hist);
  CHECK_FALSE(d.spearman.has_value());
  CHECK(d.mean_sq_grad == std::vector<double>(4, 0.0));

  GradientHistory h2(2);
  h2.record(std::vector<double>{1.0, 3.0});
  h2.record(std::vector<double>{3.0, 1.0});
  CHECK(h2.mean_squared() == std::vector<double>{5.0, 5.0});
}

TEST_CASE("adam zero gradient leaves parameters") {
  std::vector<double> p{1.0, -2.0};
  AdamState st = AdamState::create(2, 1e-2);
  for (int i = 0; i < 5; ++i) adam_step(p, std::vector<double>{0.0, 0.0}, st);
  CHECK(p == std::vector<double>{1.0, -2.0});
}

TEST_CASE("adam first step is a signed step") {
  std::vector<double> p{1.0, -2.0, 3.0};
  AdamState st = AdamState::create(3, 1e-3);
  const std::vector<double> g{0.1, -0.2, 0.3};
  adam_step(p, g, st);
  for (std::size_t i = 0; i < 3; ++i) {
    const double expect = std::vector<double>{1.0, -2.0, 3.0}[i] - 1e-3 * g[i] / (std::abs(g[i]) + 1e-8);
    CHECK(p[i] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("adam second step with bias correction") {
  std::vector<double> p{0.5};
  AdamState st = AdamState::create(1, 0.01);
  adam_step(p, std::vector<double>{0.2}, st);
  const double after1 = p[0];
  adam_step(p, std::vector<double>{-0.4}, st);
  const double m2 = 0.9 * 0.1 * 0.2 + 0.1 * -0.4;
  const double v2 = 0.999 * 0.001 * 0.04 + 0.001 * 0.16;
  const double mh = m2 / (1 - 0.81), vh = v2 / (1 - 0.999 * 0.999);
  CHECK(p[0] == doctest::Approx(after1 - 0.01 * mh / (std::sqrt(vh) + 1e-8)).epsilon(1e-12));
}

TEST_CASE("adam converges on a quadratic") {
  AdamOptimizer opt({5.0, -3.0}, 1e-2);
  Rng rng(0);
  for (int t = 0; t < 2000; ++t) {
    const auto th = opt.sample(rng);
    opt.accumulate(std::vector<double>{2.0 * (th[0] - 1.0), 2.0 * (th[1] + 0.5)});
    opt.step(t < 1500 ? 1e-2 : 1e-3);
  }
  CHECK(std::abs(opt.parameters()[0] - 1.0) < 1e-4);
  CHECK(std::abs(opt.parameters()[1] + 0.5) < 1e-4);
  CHECK_FALSE(opt.posterior().has_value());
}

TEST_CASE("optimizer interface contract") {
  IvonOptimizer opt({0.0}, IvonHyper{});
  CHECK_THROWS_AS(opt.step(0.1), std::logic_error);
  Rng rng(1);
  CHECK_THROWS_AS(opt.accumulate(std::vector<double>{1.0}), std::logic_error);
  opt.sample(rng);
  opt.accumulate(std::vector<double>{1.0});
  opt.step(0.1);
  const auto post = opt.posterior();
  REQUIRE(post.has_value());
  CHECK(post->sigma == posterior_sigma(opt.state()));
}

}
