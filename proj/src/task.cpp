#include "adarank/task.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "adarank/errors.hpp"

namespace adarank {
namespace {

constexpr double kLogitGain = 8.0;

// d x r matrix with orthonormal columns (modified Gram-Schmidt).
Matrix random_orthonormal(std::size_t d, std::size_t r, Rng& rng) {
  Matrix u(d, r);
  for (double& v : u.values()) v = rng.normal();
  for (std::size_t j = 0; j < r; ++j) {
    for (std::size_t k = 0; k < j; ++k) {
      double proj = 0.0;
      for (std::size_t i = 0; i < d; ++i) proj += u(i, j) * u(i, k);
      for (std::size_t i = 0; i < d; ++i) u(i, j) -= proj * u(i, k);
    }
    double norm = 0.0;
    for (std::size_t i = 0; i < d; ++i) norm += u(i, j) * u(i, j);
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < d; ++i) u(i, j) /= norm;
  }
  return u;
}

void tanh_inplace(Matrix& m) {
  for (double& v : m.values()) v = std::tanh(v);
}

Matrix teacher_forward(const std::vector<Matrix>& weights, const Matrix& x) {
  Matrix a = x;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    a = matmul(a, weights[k]);
    if (k + 1 < weights.size()) tanh_inplace(a);
  }
  return a;
}

std::size_t argmax_row(const Matrix& m, std::size_t r) {
  const auto row = m.row(r);
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

// Draws a class from softmax(row r).
std::size_t sample_label(const Matrix& logits, std::size_t r, Rng& rng) {
  const auto row = logits.row(r);
  const double top = *std::max_element(row.begin(), row.end());
  double z = 0.0;
  for (double v : row) z += std::exp(v - top);
  double u = rng.uniform() * z;
  for (std::size_t c = 0; c + 1 < row.size(); ++c) {
    u -= std::exp(row[c] - top);
    if (u < 0.0) return c;
  }
  return row.size() - 1;
}

Dataset make_split(const std::vector<Matrix>& teacher, const TaskSpec& spec, std::size_t n,
                   Rng& rng) {
  Dataset d;
  d.x = Matrix(n, spec.width);
  for (double& v : d.x.values()) v = rng.normal();
  d.y = teacher_forward(teacher, d.x);
  for (double& v : d.y.values()) v += spec.noise * rng.normal();
  if (spec.kind == TaskKind::classification) {
    d.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) d.labels[i] = sample_label(d.y, i, rng);
  }
  return d;
}

}  // namespace

TaskKind parse_task_kind(std::string_view text) {
  if (text == "regression") return TaskKind::regression;
  if (text == "classification") return TaskKind::classification;
  throw ConfigError("unknown task '" + std::string(text) + "' (expected regression or classification)");
}

std::string_view task_kind_name(TaskKind kind) {
  return kind == TaskKind::regression ? "regression" : "classification";
}

bool higher_is_better(TaskKind kind) { return kind == TaskKind::classification; }

std::string_view metric_name(TaskKind kind) {
  return kind == TaskKind::regression ? "rmse" : "accuracy";
}

void TaskSpec::validate() const {
  if (width == 0 || width > 64) throw ConfigError("task width must be in [1, 64]");
  if (planted_ranks.empty()) throw ConfigError("task needs at least one layer");
  for (std::size_t r : planted_ranks) {
    if (r > width) throw ConfigError("planted rank " + std::to_string(r) + " exceeds width");
  }
  if (!(delta_scale >= 0.0) || !std::isfinite(delta_scale)) throw ConfigError("delta_scale must be >= 0");
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw ConfigError("noise must be >= 0");
  if (n_train == 0 || n_val == 0) throw ConfigError("train and val sizes must be positive");
  if (n_train + n_val > 4096) throw ConfigError("dataset larger than 4096 samples");
}

SyntheticTask generate_task(const TaskSpec& spec) {
  spec.validate();
  SyntheticTask task;
  task.spec = spec;
  Rng weights_rng = Rng(spec.seed).fork(0);
  Rng data_rng = Rng(spec.seed).fork(1);
  const std::size_t d = spec.width;
  const double w_std = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<Matrix> teacher;
  for (std::size_t k = 0; k < spec.layers(); ++k) {
    Matrix w0(d, d);
    for (double& v : w0.values()) v = w_std * weights_rng.normal();
    Matrix delta(d, d);
    const std::size_t r = spec.planted_ranks[k];
    if (r > 0 && spec.delta_scale > 0.0) {
      const Matrix u = random_orthonormal(d, r, weights_rng);
      const Matrix v = random_orthonormal(d, r, weights_rng);
      delta = spec.delta_scale * matmul_nt(u, v);
    }
    if (spec.kind == TaskKind::classification && k + 1 == spec.layers()) {
      w0 = kLogitGain * w0;
      delta = kLogitGain * delta;
    }
    teacher.push_back(w0 + delta);
    task.base.push_back(std::move(w0));
    task.delta.push_back(std::move(delta));
  }
  task.train = make_split(teacher, spec, spec.n_train, data_rng);
  task.val = make_split(teacher, spec, spec.n_val, data_rng);
  return task;
}

Dataset gather(const Dataset& data, std::span<const std::size_t> rows) {
  Dataset out;
  out.x = Matrix(rows.size(), data.x.cols());
  out.y = Matrix(rows.size(), data.y.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(data.x.row(rows[i]).begin(), data.x.cols(), out.x.row(i).begin());
    std::copy_n(data.y.row(rows[i]).begin(), data.y.cols(), out.y.row(i).begin());
  }
  if (!data.labels.empty()) {
    out.labels.reserve(rows.size());
    for (std::size_t r : rows) out.labels.push_back(data.labels[r]);
  }
  return out;
}

AdaptedNetwork::AdaptedNetwork(std::vector<AdapterLayer> layers, TaskKind kind)
    : layers_(std::move(layers)), kind_(kind) {
  if (layers_.empty()) throw ShapeError("network needs at least one layer");
  offsets_.push_back(0);
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    if (k > 0 && layers_[k].d_in() != layers_[k - 1].d_out()) {
      throw ShapeError("network layer widths do not chain");
    }
    offsets_.push_back(offsets_.back() + layers_[k].parameter_count());
    modules_.push_back("dense");
  }
}

AdaptedNetwork AdaptedNetwork::for_task(const SyntheticTask& task, std::size_t rank, Rng& rng,
                                        double gamma_orth, double init_std) {
  std::vector<AdapterLayer> layers;
  for (const Matrix& w0 : task.base) {
    layers.push_back(AdapterLayer::initialize(w0, rank, rng, gamma_orth, init_std));
  }
  return AdaptedNetwork(std::move(layers), task.spec.kind);
}

std::vector<double> AdaptedNetwork::read_parameters() const {
  std::vector<double> flat(parameter_count());
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    layers_[k].read_parameters(std::span(flat).subspan(offsets_[k], layers_[k].parameter_count()));
  }
  return flat;
}

void AdaptedNetwork::write_parameters(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw ShapeError("write_parameters: wrong length");
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    layers_[k].write_parameters(flat.subspan(offsets_[k], layers_[k].parameter_count()));
  }
}

std::vector<std::size_t> AdaptedNetwork::masked_lambda_indices() const {
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& mask = layers_[k].mask();
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (!mask[i]) idx.push_back(offsets_[k] + layers_[k].lambda_offset() + i);
    }
  }
  return idx;
}

std::size_t AdaptedNetwork::total_rank() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.rank();
  return n;
}

std::size_t AdaptedNetwork::active_rank() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.active_rank();
  return n;
}

std::size_t AdaptedNetwork::active_parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.active_rank() * (l.d_in() + l.d_out() + 1);
  return n;
}

Matrix AdaptedNetwork::predict(const Matrix& x) const {
  Matrix a = x;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    a = forward(layers_[k], a);
    if (k + 1 < layers_.size()) tanh_inplace(a);
  }
  return a;
}

namespace {

// Data loss and dLoss/dOutput for a batch.
double output_loss(TaskKind kind, const Matrix& out, const Dataset& batch, Matrix* grad) {
  const double n = static_cast<double>(out.rows());
  double loss = 0.0;
  if (kind == TaskKind::regression) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double diff = out.values()[i] - batch.y.values()[i];
      loss += 0.5 * diff * diff;
      if (grad) grad->values()[i] = diff / n;
    }
    return loss / n;
  }
  for (std::size_t r = 0; r < out.rows(); ++r) {
    const auto row = out.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - mx);
    const std::size_t label = batch.labels[r];
    loss += std::log(z) + mx - row[label];
    if (grad) {
      auto g = grad->row(r);
      for (std::size_t c = 0; c < row.size(); ++c) {
        g[c] = (std::exp(row[c] - mx) / z - (c == label ? 1.0 : 0.0)) / n;
      }
    }
  }
  return loss / n;
}

}  // namespace

LossValue AdaptedNetwork::loss(const Dataset& batch) const {
  LossValue v;
  v.task = output_loss(kind_, predict(batch.x), batch, nullptr);
  for (const auto& l : layers_) v.penalty += l.gamma_orth() * orthogonality_penalty(l);
  return v;
}

LossValue AdaptedNetwork::loss_and_gradient(const Dataset& batch, std::span<double> grad) const {
  if (grad.size() != parameter_count()) throw ShapeError("loss_and_gradient: wrong gradient length");
  const std::size_t depth = layers_.size();
  // activations[k] is the input of layer k.
  std::vector<Matrix> activations;
  activations.reserve(depth + 1);
  activations.push_back(batch.x);
  for (std::size_t k = 0; k < depth; ++k) {
    Matrix z = forward(layers_[k], activations.back());
    if (k + 1 < depth) tanh_inplace(z);
    activations.push_back(std::move(z));
  }
  LossValue v;
  Matrix upstream(activations.back().rows(), activations.back().cols());
  v.task = output_loss(kind_, activations.back(), batch, &upstream);
  for (std::size_t k = depth; k-- > 0;) {
    const AdapterLayer& layer = layers_[k];
    v.penalty += layer.gamma_orth() * orthogonality_penalty(layer);
    backward(layer, activations[k], upstream)
        .flatten_into(grad.subspan(offsets_[k], layer.parameter_count()));
    if (k > 0) {
      Matrix g_in = input_gradient(layer, upstream);
      const Matrix& a = activations[k];
      for (std::size_t i = 0; i < g_in.size(); ++i) {
        const double t = a.values()[i];
        g_in.values()[i] *= 1.0 - t * t;
      }
      upstream = std::move(g_in);
    }
  }
  check_finite(grad, "network gradient");
  return v;
}

double AdaptedNetwork::metric(const Dataset& data) const {
  const Matrix out = predict(data.x);
  if (kind_ == TaskKind::regression) {
    double sq = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double diff = out.values()[i] - data.y.values()[i];
      sq += diff * diff;
    }
    return std::sqrt(sq / static_cast<double>(out.size()));
  }
  std::size_t correct = 0;
  for (std::size_t r = 0; r < out.rows(); ++r) correct += argmax_row(out, r) == data.labels[r];
  return static_cast<double>(correct) / static_cast<double>(out.rows());
}

}  // namespace adarank
