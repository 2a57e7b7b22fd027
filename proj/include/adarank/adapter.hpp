#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "adarank/matrix.hpp"
#include "adarank/rng.hpp"

namespace adarank {

// SVD-style adapted linear map.
//
// Orientation, used by every formula in this library: the layer maps a batch
// of row vectors x (batch x d_in) to y = x * W with
//
//   W = W0 + P * diag(lambda .* mask) * Q,   W0: d_in x d_out,
//   P: d_in x r,  lambda: r,  Q: r x d_out.
//
// The orthogonality penalty is R = ||P^T P - I||_F^2 + ||Q Q^T - I||_F^2,
// zero exactly when P has orthonormal columns and Q orthonormal rows. It
// does not depend on the mask.
//
// Masking only zeroes the effective singular value. P, Q and the stored
// lambda are untouched, so a masked triplet can be switched back on later.
class AdapterLayer {
 public:
  AdapterLayer(Matrix w0, Matrix p, std::vector<double> lambda, Matrix q,
               double gamma_orth = 0.1);

  // P, Q ~ N(0, init_std^2), lambda = 0, all ranks active.
  static AdapterLayer initialize(Matrix w0, std::size_t rank, Rng& rng,
                                 double gamma_orth = 0.1, double init_std = 0.02);

  std::size_t d_in() const { return w0_.rows(); }
  std::size_t d_out() const { return w0_.cols(); }
  std::size_t rank() const { return lambda_.size(); }
  std::size_t active_rank() const;

  const Matrix& w0() const { return w0_; }
  const Matrix& p() const { return p_; }
  const Matrix& q() const { return q_; }
  const std::vector<double>& lambda() const { return lambda_; }
  const std::vector<bool>& mask() const { return mask_; }
  double gamma_orth() const { return gamma_orth_; }

  void set_mask(std::vector<bool> mask);
  void set_gamma_orth(double gamma);

  // Trainable scalars in flat layout [P row-major | lambda | Q row-major].
  std::size_t parameter_count() const { return p_.size() + lambda_.size() + q_.size(); }
  std::size_t lambda_offset() const { return p_.size(); }
  std::size_t q_offset() const { return p_.size() + lambda_.size(); }
  void read_parameters(std::span<double> out) const;
  void write_parameters(std::span<const double> in);

  // W0 + P diag(lambda .* mask) Q.
  Matrix effective_weight() const;
  // P diag(lambda .* mask) Q.
  Matrix delta_weight() const;

 private:
  Matrix w0_;
  Matrix p_;
  std::vector<double> lambda_;
  Matrix q_;
  std::vector<bool> mask_;
  double gamma_orth_;
};

struct AdapterGradients {
  Matrix g_p;
  std::vector<double> g_lambda;
  Matrix g_q;

  // Same flat layout as AdapterLayer::read_parameters.
  void flatten_into(std::span<double> out) const;
};

Matrix forward(const AdapterLayer& layer, const Matrix& x);

double orthogonality_penalty(const AdapterLayer& layer);

// Gradient of (task loss + gamma_orth * R) where `upstream` = dLoss/dy for
// y = forward(layer, x). g_lambda[i] of a masked rank is p_i^T (x^T G) q_i,
// the gradient it would have if the rank were active; the masked forward
// itself does not depend on it.
AdapterGradients backward(const AdapterLayer& layer, const Matrix& x, const Matrix& upstream);

// dLoss/dx = upstream * W^T.
Matrix input_gradient(const AdapterLayer& layer, const Matrix& upstream);

void set_mask(AdapterLayer& layer, std::vector<bool> mask);

}  // namespace adarank
