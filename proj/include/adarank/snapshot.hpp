#pragma once

// JSON snapshots of adapters and optimizer state.
//
// Adapter snapshot ("adarank-adapters/1"):
//   { "format": "adarank-adapters/1",
//     "layers": [ { "layer": 1, "module": "dense", "gamma_orth": 0.1,
//                   "w0": {"rows": R, "cols": C, "data": [...row-major...]},
//                   "p": {...}, "q": {...}, "lambda": [...], "mask": [true, ...] } ] }
//
// Optimizer checkpoint ("adarank-optimizer/1"):
//   { "format": "adarank-optimizer/1", "optimizer": "ivon",
//     "mu": [...], "h": [...], "m": [...], "lambda_ess": .., "delta": ..,
//     "lr": .., "beta1": .., "beta2": .., "step": .., "importance": {...}? }
//   { "format": "adarank-optimizer/1", "optimizer": "adam",
//     "params": [...], "m": [...], "v": [...], "lr": .., "beta1": .., "beta2": ..,
//     "eps": .., "step": .., "importance": {...}? }
//
// Doubles are written in shortest round-trip form, so reading a snapshot back
// reproduces every value bit for bit.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "adarank/adapter.hpp"
#include "adarank/importance.hpp"
#include "adarank/matrix.hpp"
#include "adarank/optimizer.hpp"

namespace adarank {

using Json = nlohmann::json;

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);

Json adapters_to_json(std::span<const AdapterLayer> layers, std::span<const std::string> modules);
std::vector<AdapterLayer> adapters_from_json(const Json& j);

Json gaussian_state_to_json(const GaussianState& s);
GaussianState gaussian_state_from_json(const Json& j);
Json adam_state_to_json(std::span<const double> params, const AdamState& s);
Json importance_to_json(const ImportanceState& s);
ImportanceState importance_from_json(const Json& j);

// Parsed optimizer checkpoint: exactly one of `ivon`/`adam` is set.
struct OptimizerCheckpoint {
  std::string optimizer;
  std::optional<GaussianState> ivon;
  std::optional<AdamState> adam;
  std::vector<double> adam_params;
  std::optional<ImportanceState> importance;
};

OptimizerCheckpoint checkpoint_from_json(const Json& j);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

}  // namespace adarank
