#pragma once

// Data-parallel inner loops with a scalar reference implementation and an
// AVX2 variant selected at runtime. Elementwise kernels produce bit-identical
// results in every variant (the build disables FP contraction and the SIMD
// code performs the same operations in the same order). Only `dot` is a
// reduction and may differ from the scalar result in the last bits.

#include <cstddef>
#include <span>
#include <string_view>

namespace adarank::kernels {

enum class Isa { scalar, avx2 };

struct IvonCoeffs {
  double lr;
  double beta1;
  double beta2;
  double delta;
  double ess;
  double bias1;  // 1 - beta1^step
};

struct AdamCoeffs {
  double lr;
  double beta1;
  double beta2;
  double eps;
  double bias1;  // 1 - beta1^step
  double bias2;  // 1 - beta2^step
};

struct Table {
  Isa isa;

  // y += a * x
  void (*axpy)(double a, std::span<const double> x, std::span<double> y);
  double (*dot)(std::span<const double> x, std::span<const double> y);

  // out = |a * b|
  void (*abs_product)(std::span<const double> a, std::span<const double> b, std::span<double> out);
  // out = |num| / den
  void (*abs_ratio)(std::span<const double> num, std::span<const double> den, std::span<double> out);
  // out = |x|
  void (*abs)(std::span<const double> x, std::span<double> out);
  // out = 1 / x
  void (*reciprocal)(std::span<const double> x, std::span<double> out);
  // out = 1 / sqrt(ess * (h + delta))
  void (*posterior_sigma)(std::span<const double> h, double ess, double delta, std::span<double> out);
  // out = mu + sigma * eps
  void (*affine_noise)(std::span<const double> mu, std::span<const double> sigma,
                       std::span<const double> eps, std::span<double> out);

  // One IVON update over all coordinates. `grad_noise` is grad .* (theta - mu)
  // for the sample the gradient was taken at (averaged over samples when more
  // than one is drawn). Updates mu, m and h in place.
  void (*ivon_update)(const IvonCoeffs& c, std::span<const double> grad,
                      std::span<const double> grad_noise, std::span<double> mu,
                      std::span<double> m, std::span<double> h);

  void (*adam_update)(const AdamCoeffs& c, std::span<const double> grad,
                      std::span<double> param, std::span<double> m, std::span<double> v);
};

const Table& scalar_table();
// Nullptr when the AVX2 variant was not compiled in.
const Table* avx2_table();

bool available(Isa isa);
// Best variant supported by the running CPU.
Isa detect();
// Currently selected table; defaults to detect() on first use.
const Table& active();
// Forces a variant. Throws std::invalid_argument if it is unavailable.
void select(Isa isa);
const Table& table(Isa isa);

std::string_view name(Isa isa);
// Parses "scalar", "avx2" or "auto".
Isa parse_isa(std::string_view text);

}  // namespace adarank::kernels
