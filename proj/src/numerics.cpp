#include "adarank/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "adarank/errors.hpp"
#include "adarank/kernels.hpp"

namespace adarank {

double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

std::vector<double> standard_normals(Rng& rng, std::size_t n) {
  std::vector<double> out(n);
  for (double& v : out) v = rng.normal();
  return out;
}

Matrix sample_gaussian(Rng& rng, const Matrix& mu, const Matrix& sigma) {
  if (!mu.same_shape(sigma)) throw ShapeError("sample_gaussian: mu and sigma shapes differ");
  for (double s : sigma.values()) {
    if (!(s > 0.0)) throw NumericError("sample_gaussian: sigma must be positive");
  }
  const auto eps = standard_normals(rng, mu.size());
  Matrix out(mu.rows(), mu.cols());
  kernels::active().affine_noise(mu.values(), sigma.values(), eps, out.values());
  check_finite(out, "gaussian sample");
  return out;
}

Matrix finite_diff_grad(const ScalarFn& f, const Matrix& x, double eps) {
  if (!(eps > 0.0)) throw NumericError("finite_diff_grad: eps must be positive");
  Matrix grad(x.rows(), x.cols());
  Matrix probe = x;
  auto pv = probe.values();
  auto gv = grad.values();
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const double orig = pv[i];
    pv[i] = orig + eps;
    const double up = f(probe);
    pv[i] = orig - eps;
    const double down = f(probe);
    pv[i] = orig;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("finite_diff_grad: function returned a non-finite value");
    }
    gv[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("spearman: length mismatch");
  if (a.size() < 2) return std::nullopt;
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace adarank
