#pragma once

#include <adarank/matrix.hpp>
#include <adarank/rng.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

namespace testing {

inline adarank::Matrix random_matrix(adarank::Rng& rng, std::size_t r, std::size_t c,
                                     double scale = 1.0) {
  adarank::Matrix m(r, c);
  for (double& v : m.values()) v = scale * rng.normal();
  return m;
}

inline std::vector<double> random_vector(adarank::Rng& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

// Triple loop, no shortcuts.
inline adarank::Matrix naive_matmul(const adarank::Matrix& a, const adarank::Matrix& b) {
  adarank::Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

inline double max_abs_diff(const adarank::Matrix& a, const adarank::Matrix& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    d = std::max(d, std::abs(a.values()[i] - b.values()[i]));
  return d;
}

// Max over entries of |a - b| / max(|b|, floor).
inline double max_rel_err(std::span<const double> a, std::span<const double> b,
                          double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a[i] - b[i]) / std::max(std::abs(b[i]), floor));
  return worst;
}

// Composite Simpson on [lo, hi] with n (even) intervals.
template <class F>
double simpson(F f, double lo, double hi, int n) {
  const double h = (hi - lo) / n;
  double s = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
  return s * h / 3.0;
}

}  // namespace testing
