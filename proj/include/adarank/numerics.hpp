#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "adarank/matrix.hpp"
#include "adarank/rng.hpp"

namespace adarank {

// Standard normal CDF, Phi(x) = erfc(-x / sqrt(2)) / 2. libm's erfc is
// accurate to a few ulp, far inside the 1e-7 budget the SNR(|theta|) metric
// needs, and the erfc form keeps Phi(x) + Phi(-x) = 1 to rounding.
double normal_cdf(double x);

// Entrywise mu + sigma * eps with eps ~ N(0, 1) drawn from `rng` in row-major
// order. Throws NumericError if any sigma <= 0, ShapeError on shape mismatch.
Matrix sample_gaussian(Rng& rng, const Matrix& mu, const Matrix& sigma);

// Draws n standard normals.
std::vector<double> standard_normals(Rng& rng, std::size_t n);

using ScalarFn = std::function<double(const Matrix&)>;

// Central differences (f(x + eps e_i) - f(x - eps e_i)) / (2 eps) per entry.
Matrix finite_diff_grad(const ScalarFn& f, const Matrix& x, double eps);

// Spearman rank correlation with average ranks for ties. Empty when either
// input is constant (correlation undefined) or shorter than two.
std::optional<double> spearman(std::span<const double> a, std::span<const double> b);

// Average ranks (1-based) with ties sharing their mean rank.
std::vector<double> average_ranks(std::span<const double> v);

}  // namespace adarank
