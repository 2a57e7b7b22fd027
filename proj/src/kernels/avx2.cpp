#include "adarank/kernels.hpp"

#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
#define ADARANK_HAVE_AVX2 1
#include <immintrin.h>
#endif

#ifdef ADARANK_HAVE_AVX2

#include <cmath>

#define ADARANK_AVX2 __attribute__((target("avx2")))

namespace adarank::kernels {
namespace {

ADARANK_AVX2 inline __m256d abs4(__m256d v) {
  return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v);
}

ADARANK_AVX2 void axpy(double a, std::span<const double> x, std::span<double> y) {
  const std::size_t n = x.size();
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(&y[i]);
    vy = _mm256_add_pd(vy, _mm256_mul_pd(va, _mm256_loadu_pd(&x[i])));
    _mm256_storeu_pd(&y[i], vy);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

ADARANK_AVX2 double dot(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(&x[i]), _mm256_loadu_pd(&y[i])));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double total = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) total += x[i] * y[i];
  return total;
}

ADARANK_AVX2 void abs_product(std::span<const double> a, std::span<const double> b,
                              std::span<double> out) {
  const std::size_t n = a.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(&out[i], abs4(_mm256_mul_pd(_mm256_loadu_pd(&a[i]), _mm256_loadu_pd(&b[i]))));
  }
  for (; i < n; ++i) out[i] = std::fabs(a[i] * b[i]);
}

ADARANK_AVX2 void abs_ratio(std::span<const double> num, std::span<const double> den,
                            std::span<double> out) {
  const std::size_t n = num.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(&out[i],
                     _mm256_div_pd(abs4(_mm256_loadu_pd(&num[i])), _mm256_loadu_pd(&den[i])));
  }
  for (; i < n; ++i) out[i] = std::fabs(num[i]) / den[i];
}

ADARANK_AVX2 void abs_values(std::span<const double> x, std::span<double> out) {
  const std::size_t n = x.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(&out[i], abs4(_mm256_loadu_pd(&x[i])));
  for (; i < n; ++i) out[i] = std::fabs(x[i]);
}

ADARANK_AVX2 void reciprocal(std::span<const double> x, std::span<double> out) {
  const std::size_t n = x.size();
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(&out[i], _mm256_div_pd(one, _mm256_loadu_pd(&x[i])));
  for (; i < n; ++i) out[i] = 1.0 / x[i];
}

ADARANK_AVX2 void posterior_sigma(std::span<const double> h, double ess, double delta,
                                  std::span<double> out) {
  const std::size_t n = h.size();
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d vess = _mm256_set1_pd(ess);
  const __m256d vdelta = _mm256_set1_pd(delta);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prec = _mm256_mul_pd(vess, _mm256_add_pd(_mm256_loadu_pd(&h[i]), vdelta));
    _mm256_storeu_pd(&out[i], _mm256_div_pd(one, _mm256_sqrt_pd(prec)));
  }
  for (; i < n; ++i) out[i] = 1.0 / std::sqrt(ess * (h[i] + delta));
}

ADARANK_AVX2 void affine_noise(std::span<const double> mu, std::span<const double> sigma,
                               std::span<const double> eps, std::span<double> out) {
  const std::size_t n = mu.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d s = _mm256_mul_pd(_mm256_loadu_pd(&sigma[i]), _mm256_loadu_pd(&eps[i]));
    _mm256_storeu_pd(&out[i], _mm256_add_pd(_mm256_loadu_pd(&mu[i]), s));
  }
  for (; i < n; ++i) out[i] = mu[i] + sigma[i] * eps[i];
}

ADARANK_AVX2 void ivon_update(const IvonCoeffs& c, std::span<const double> grad,
                              std::span<const double> grad_noise, std::span<double> mu,
                              std::span<double> m, std::span<double> h) {
  const std::size_t n = grad.size();
  const double one_m_b1 = 1.0 - c.beta1;
  const double one_m_b2 = 1.0 - c.beta2;
  const double corr = 0.5 * one_m_b2 * one_m_b2;
  const __m256d vb1 = _mm256_set1_pd(c.beta1);
  const __m256d v1mb1 = _mm256_set1_pd(one_m_b1);
  const __m256d vb2 = _mm256_set1_pd(c.beta2);
  const __m256d v1mb2 = _mm256_set1_pd(one_m_b2);
  const __m256d vcorr = _mm256_set1_pd(corr);
  const __m256d vdelta = _mm256_set1_pd(c.delta);
  const __m256d vess = _mm256_set1_pd(c.ess);
  const __m256d vlr = _mm256_set1_pd(c.lr);
  const __m256d vbias1 = _mm256_set1_pd(c.bias1);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d g = _mm256_loadu_pd(&grad[i]);
    const __m256d hv = _mm256_loadu_pd(&h[i]);
    const __m256d hd = _mm256_add_pd(hv, vdelta);
    const __m256d h_hat =
        _mm256_mul_pd(_mm256_loadu_pd(&grad_noise[i]), _mm256_mul_pd(vess, hd));
    const __m256d mv =
        _mm256_add_pd(_mm256_mul_pd(vb1, _mm256_loadu_pd(&m[i])), _mm256_mul_pd(v1mb1, g));
    _mm256_storeu_pd(&m[i], mv);
    const __m256d diff = _mm256_sub_pd(hv, h_hat);
    __m256d h_new = _mm256_add_pd(_mm256_mul_pd(vb2, hv), _mm256_mul_pd(v1mb2, h_hat));
    h_new = _mm256_add_pd(h_new, _mm256_div_pd(_mm256_mul_pd(vcorr, _mm256_mul_pd(diff, diff)), hd));
    h_new = _mm256_max_pd(h_new, zero);
    _mm256_storeu_pd(&h[i], h_new);
    const __m256d muv = _mm256_loadu_pd(&mu[i]);
    const __m256d num = _mm256_add_pd(_mm256_div_pd(mv, vbias1), _mm256_mul_pd(vdelta, muv));
    const __m256d stepv =
        _mm256_div_pd(_mm256_mul_pd(vlr, num), _mm256_add_pd(h_new, vdelta));
    _mm256_storeu_pd(&mu[i], _mm256_sub_pd(muv, stepv));
  }
  for (; i < n; ++i) {
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

ADARANK_AVX2 void adam_update(const AdamCoeffs& c, std::span<const double> grad,
                              std::span<double> param, std::span<double> m,
                              std::span<double> v) {
  const std::size_t n = grad.size();
  const double one_m_b1 = 1.0 - c.beta1;
  const double one_m_b2 = 1.0 - c.beta2;
  const __m256d vb1 = _mm256_set1_pd(c.beta1);
  const __m256d v1mb1 = _mm256_set1_pd(one_m_b1);
  const __m256d vb2 = _mm256_set1_pd(c.beta2);
  const __m256d v1mb2 = _mm256_set1_pd(one_m_b2);
  const __m256d vbias1 = _mm256_set1_pd(c.bias1);
  const __m256d vbias2 = _mm256_set1_pd(c.bias2);
  const __m256d vlr = _mm256_set1_pd(c.lr);
  const __m256d veps = _mm256_set1_pd(c.eps);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d g = _mm256_loadu_pd(&grad[i]);
    const __m256d mv =
        _mm256_add_pd(_mm256_mul_pd(vb1, _mm256_loadu_pd(&m[i])), _mm256_mul_pd(v1mb1, g));
    const __m256d vv = _mm256_add_pd(_mm256_mul_pd(vb2, _mm256_loadu_pd(&v[i])),
                                     _mm256_mul_pd(v1mb2, _mm256_mul_pd(g, g)));
    _mm256_storeu_pd(&m[i], mv);
    _mm256_storeu_pd(&v[i], vv);
    const __m256d m_hat = _mm256_div_pd(mv, vbias1);
    const __m256d v_hat = _mm256_div_pd(vv, vbias2);
    const __m256d stepv = _mm256_div_pd(_mm256_mul_pd(vlr, m_hat),
                                        _mm256_add_pd(_mm256_sqrt_pd(v_hat), veps));
    _mm256_storeu_pd(&param[i], _mm256_sub_pd(_mm256_loadu_pd(&param[i]), stepv));
  }
  for (; i < n; ++i) {
    const double g = grad[i];
    m[i] = c.beta1 * m[i] + one_m_b1 * g;
    v[i] = c.beta2 * v[i] + one_m_b2 * (g * g);
    const double m_hat = m[i] / c.bias1;
    const double v_hat = v[i] / c.bias2;
    param[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
  }
}

}  // namespace

const Table* avx2_table() {
  static const Table t{Isa::avx2, axpy,           dot,          abs_product, abs_ratio,
                       abs_values, reciprocal,    posterior_sigma, affine_noise, ivon_update,
                       adam_update};
  return &t;
}

}  // namespace adarank::kernels

#else

namespace adarank::kernels {
const Table* avx2_table() { return nullptr; }
}  // namespace adarank::kernels

#endif
