#include "adarank/kernels.hpp"

#include <cmath>

namespace adarank::kernels {
namespace {

void axpy(double a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

double dot(std::span<const double> x, std::span<const double> y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return acc;
}

void abs_product(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::fabs(a[i] * b[i]);
}

void abs_ratio(std::span<const double> num, std::span<const double> den, std::span<double> out) {
  for (std::size_t i = 0; i < num.size(); ++i) out[i] = std::fabs(num[i]) / den[i];
}

void abs_values(std::span<const double> x, std::span<double> out) {
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::fabs(x[i]);
}

void reciprocal(std::span<const double> x, std::span<double> out) {
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = 1.0 / x[i];
}

void posterior_sigma(std::span<const double> h, double ess, double delta, std::span<double> out) {
  for (std::size_t i = 0; i < h.size(); ++i) out[i] = 1.0 / std::sqrt(ess * (h[i] + delta));
}

void affine_noise(std::span<const double> mu, std::span<const double> sigma,
                  std::span<const double> eps, std::span<double> out) {
  for (std::size_t i = 0; i < mu.size(); ++i) out[i] = mu[i] + sigma[i] * eps[i];
}

void ivon_update(const IvonCoeffs& c, std::span<const double> grad, std::span<const double> grad_noise,
                 std::span<double> mu, std::span<double> m, std::span<double> h) {
  const double one_m_b1 = 1.0 - c.beta1;
  const double one_m_b2 = 1.0 - c.beta2;
  const double corr = 0.5 * one_m_b2 * one_m_b2;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double g = grad[i];
    const double hd = h[i] + c.delta;
    const double h_hat = grad_noise[i] * (c.ess * hd);
    m[i] = c.beta1 * m[i] + one_m_b1 * g;
    const double diff = h[i] - h_hat;
    double h_new = c.beta2 * h[i] + one_m_b2 * h_hat + corr * (diff * diff) / hd;
    h_new = h_new > 0.0 ? h_new : 0.0;
    h[i] = h_new;
    mu[i] -= c.lr * (m[i] / c.bias1 + c.delta * mu[i]) / (h_new + c.delta);
  }
}

void adam_update(const AdamCoeffs& c, std::span<const double> grad, std::span<double> param,
                 std::span<double> m, std::span<double> v) {
  const double one_m_b1 = 1.0 - c.beta1;
  const double one_m_b2 = 1.0 - c.beta2;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double g = grad[i];
    m[i] = c.beta1 * m[i] + one_m_b1 * g;
    v[i] = c.beta2 * v[i] + one_m_b2 * (g * g);
    const double m_hat = m[i] / c.bias1;
    const double v_hat = v[i] / c.bias2;
    param[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
  }
}

}  // namespace

const Table& scalar_table() {
  static const Table t{Isa::scalar, axpy,           dot,          abs_product, abs_ratio,
                       abs_values,  reciprocal,     posterior_sigma, affine_noise, ivon_update,
                       adam_update};
  return t;
}

}  // namespace adarank::kernels
