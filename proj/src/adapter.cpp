#include "adarank/adapter.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "adarank/errors.hpp"

namespace adarank {
namespace {

// X^T X - I for the columns of X.
Matrix gram_minus_identity_cols(const Matrix& x) {
  Matrix g = matmul_tn(x, x);
  for (std::size_t i = 0; i < g.rows(); ++i) g(i, i) -= 1.0;
  return g;
}

// X X^T - I for the rows of X.
Matrix gram_minus_identity_rows(const Matrix& x) {
  Matrix g = matmul_nt(x, x);
  for (std::size_t i = 0; i < g.rows(); ++i) g(i, i) -= 1.0;
  return g;
}

}  // namespace

AdapterLayer::AdapterLayer(Matrix w0, Matrix p, std::vector<double> lambda, Matrix q,
                           double gamma_orth)
    : w0_(std::move(w0)),
      p_(std::move(p)),
      lambda_(std::move(lambda)),
      q_(std::move(q)),
      mask_(lambda_.size(), true),
      gamma_orth_(gamma_orth) {
  if (w0_.empty() || lambda_.empty()) throw ShapeError("adapter needs a base weight and rank >= 1");
  if (p_.rows() != w0_.rows() || p_.cols() != lambda_.size()) {
    throw ShapeError("adapter: P must be d_in x r");
  }
  if (q_.rows() != lambda_.size() || q_.cols() != w0_.cols()) {
    throw ShapeError("adapter: Q must be r x d_out");
  }
  check_finite(lambda_, "adapter lambda");
  set_gamma_orth(gamma_orth);
}

AdapterLayer AdapterLayer::initialize(Matrix w0, std::size_t rank, Rng& rng, double gamma_orth,
                                      double init_std) {
  if (rank == 0) throw ShapeError("adapter rank must be positive");
  const std::size_t d_in = w0.rows();
  const std::size_t d_out = w0.cols();
  Matrix p(d_in, rank);
  for (double& v : p.values()) v = init_std * rng.normal();
  Matrix q(rank, d_out);
  for (double& v : q.values()) v = init_std * rng.normal();
  return AdapterLayer(std::move(w0), std::move(p), std::vector<double>(rank, 0.0), std::move(q),
                      gamma_orth);
}

std::size_t AdapterLayer::active_rank() const {
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), true));
}

void AdapterLayer::set_mask(std::vector<bool> mask) {
  if (mask.size() != lambda_.size()) {
    throw ShapeError("mask length " + std::to_string(mask.size()) + " != rank " +
                     std::to_string(lambda_.size()));
  }
  mask_ = std::move(mask);
}

void AdapterLayer::set_gamma_orth(double gamma) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw NumericError("gamma_orth must be finite and >= 0");
  }
  gamma_orth_ = gamma;
}

void AdapterLayer::read_parameters(std::span<double> out) const {
  if (out.size() != parameter_count()) throw ShapeError("read_parameters: wrong buffer length");
  auto it = std::copy(p_.values().begin(), p_.values().end(), out.begin());
  it = std::copy(lambda_.begin(), lambda_.end(), it);
  std::copy(q_.values().begin(), q_.values().end(), it);
}

void AdapterLayer::write_parameters(std::span<const double> in) {
  if (in.size() != parameter_count()) throw ShapeError("write_parameters: wrong buffer length");
  check_finite(in, "adapter parameters");
  auto it = in.begin();
  std::copy_n(it, p_.size(), p_.values().begin());
  it += static_cast<std::ptrdiff_t>(p_.size());
  std::copy_n(it, lambda_.size(), lambda_.begin());
  it += static_cast<std::ptrdiff_t>(lambda_.size());
  std::copy_n(it, q_.size(), q_.values().begin());
}

Matrix AdapterLayer::delta_weight() const {
  // Scale rows of Q by the effective singular values, then P * (diag * Q).
  Matrix scaled_q = q_;
  for (std::size_t i = 0; i < rank(); ++i) {
    const double s = mask_[i] ? lambda_[i] : 0.0;
    for (double& v : scaled_q.row(i)) v *= s;
  }
  return matmul(p_, scaled_q);
}

Matrix AdapterLayer::effective_weight() const { return w0_ + delta_weight(); }

void AdapterGradients::flatten_into(std::span<double> out) const {
  if (out.size() != g_p.size() + g_lambda.size() + g_q.size()) {
    throw ShapeError("flatten_into: wrong buffer length");
  }
  auto it = std::copy(g_p.values().begin(), g_p.values().end(), out.begin());
  it = std::copy(g_lambda.begin(), g_lambda.end(), it);
  std::copy(g_q.values().begin(), g_q.values().end(), it);
}

Matrix forward(const AdapterLayer& layer, const Matrix& x) {
  if (x.cols() != layer.d_in()) {
    throw ShapeError("forward: input has " + std::to_string(x.cols()) + " columns, layer expects " +
                     std::to_string(layer.d_in()));
  }
  return matmul(x, layer.effective_weight());
}

double orthogonality_penalty(const AdapterLayer& layer) {
  return frobenius_sq(gram_minus_identity_cols(layer.p())) +
         frobenius_sq(gram_minus_identity_rows(layer.q()));
}

AdapterGradients backward(const AdapterLayer& layer, const Matrix& x, const Matrix& upstream) {
  if (x.cols() != layer.d_in() || upstream.cols() != layer.d_out() ||
      x.rows() != upstream.rows()) {
    throw ShapeError("backward: x/upstream shapes inconsistent with layer");
  }
  const std::size_t r = layer.rank();
  const Matrix& p = layer.p();
  const Matrix& q = layer.q();

  // dLoss/dW, d_in x d_out.
  const Matrix a = matmul_tn(x, upstream);
  const Matrix pta = matmul_tn(p, a);   // r x d_out
  const Matrix aqt = matmul_nt(a, q);   // d_in x r

  AdapterGradients g{Matrix(p.rows(), r), std::vector<double>(r, 0.0), Matrix(r, q.cols())};
  for (std::size_t i = 0; i < r; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < q.cols(); ++j) acc += pta(i, j) * q(i, j);
    g.g_lambda[i] = acc;
  }
  for (std::size_t i = 0; i < r; ++i) {
    const double s = layer.mask()[i] ? layer.lambda()[i] : 0.0;
    for (std::size_t k = 0; k < p.rows(); ++k) g.g_p(k, i) = aqt(k, i) * s;
    for (std::size_t j = 0; j < q.cols(); ++j) g.g_q(i, j) = s * pta(i, j);
  }

  const double gamma = layer.gamma_orth();
  if (gamma > 0.0) {
    // d/dP ||P^T P - I||^2 = 4 P (P^T P - I);  d/dQ ||Q Q^T - I||^2 = 4 (Q Q^T - I) Q.
    const Matrix pen_p = matmul(p, gram_minus_identity_cols(p));
    const Matrix pen_q = matmul(gram_minus_identity_rows(q), q);
    g.g_p = g.g_p + (4.0 * gamma) * pen_p;
    g.g_q = g.g_q + (4.0 * gamma) * pen_q;
  }
  check_finite(g.g_lambda, "lambda gradient");
  return g;
}

Matrix input_gradient(const AdapterLayer& layer, const Matrix& upstream) {
  if (upstream.cols() != layer.d_out()) throw ShapeError("input_gradient: upstream width mismatch");
  return matmul_nt(upstream, layer.effective_weight());
}

void set_mask(AdapterLayer& layer, std::vector<bool> mask) { layer.set_mask(std::move(mask)); }

}  // namespace adarank
