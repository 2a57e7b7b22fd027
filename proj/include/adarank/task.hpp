#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adarank/adapter.hpp"
#include "adarank/matrix.hpp"
#include "adarank/rng.hpp"

namespace adarank {

enum class TaskKind { regression, classification };

TaskKind parse_task_kind(std::string_view text);
std::string_view task_kind_name(TaskKind kind);

struct TaskSpec {
  TaskKind kind = TaskKind::regression;
  std::size_t width = 16;
  // One entry per layer: rank of the delta planted in that layer.
  std::vector<std::size_t> planted_ranks{0, 1, 3, 0};
  double delta_scale = 1.0;  // every planted singular value
  double noise = 0.05;
  std::size_t n_train = 2048;
  std::size_t n_val = 512;
  std::uint64_t seed = 1;

  std::size_t layers() const { return planted_ranks.size(); }
  // Throws ConfigError for invalid rank/shape combinations.
  void validate() const;
  bool operator==(const TaskSpec&) const = default;
};

struct Dataset {
  Matrix x;
  Matrix y;                          // regression targets, or teacher logits
  std::vector<std::size_t> labels;   // classification only

  std::size_t size() const { return x.rows(); }
};

// Teacher: L square tanh layers (no activation after the last), weights
// W0_k + D_k where D_k = U_k diag(delta_scale) V_k^T has rank planted_ranks[k].
// The student starts from W0_k, so the adaptation it must learn is exactly D_k.
//
// Classification: the last layer (W0 and D) is scaled by 8 to sharpen the
// logits, and each label is drawn from softmax(teacher logits + noise), so the
// teacher itself minimizes the expected cross-entropy.
struct SyntheticTask {
  TaskSpec spec;
  std::vector<Matrix> base;   // student base weights W0_k
  std::vector<Matrix> delta;  // planted D_k
  Dataset train;
  Dataset val;
};

SyntheticTask generate_task(const TaskSpec& spec);

// Deterministic row gather, used for minibatches.
Dataset gather(const Dataset& data, std::span<const std::size_t> rows);

struct LossValue {
  double task = 0.0;     // data term
  double penalty = 0.0;  // sum of gamma_orth * R over layers
  double total() const { return task + penalty; }
};

// Stack of adapted layers with tanh between them.
class AdaptedNetwork {
 public:
  AdaptedNetwork(std::vector<AdapterLayer> layers, TaskKind kind);

  // Student for `task`: one adapter of rank `rank` per layer.
  static AdaptedNetwork for_task(const SyntheticTask& task, std::size_t rank, Rng& rng,
                                 double gamma_orth, double init_std);

  TaskKind kind() const { return kind_; }
  std::span<AdapterLayer> layers() { return layers_; }
  std::span<const AdapterLayer> layers() const { return layers_; }
  const std::vector<std::string>& module_names() const { return modules_; }

  std::size_t parameter_count() const { return offsets_.back(); }
  std::size_t offset(std::size_t layer) const { return offsets_[layer]; }
  std::vector<double> read_parameters() const;
  void write_parameters(std::span<const double> flat);

  // Flat indices of lambda entries whose rank is masked.
  std::vector<std::size_t> masked_lambda_indices() const;
  std::size_t total_rank() const;
  std::size_t active_rank() const;
  // sum over layers of active_rank * (d_in + d_out + 1)
  std::size_t active_parameter_count() const;

  Matrix predict(const Matrix& x) const;
  LossValue loss(const Dataset& batch) const;
  // Fills `grad` (flat layout) with d(task + penalty)/d(params).
  LossValue loss_and_gradient(const Dataset& batch, std::span<double> grad) const;

  // RMSE for regression, accuracy for classification.
  double metric(const Dataset& data) const;

 private:
  std::vector<AdapterLayer> layers_;
  std::vector<std::string> modules_;
  std::vector<std::size_t> offsets_;
  TaskKind kind_;
};

// Metric direction: RMSE is minimized, accuracy maximized.
bool higher_is_better(TaskKind kind);
std::string_view metric_name(TaskKind kind);

}  // namespace adarank
