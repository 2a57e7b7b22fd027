#include "adarank/snapshot.hpp"

#include <fstream>
#include <stdexcept>

#include "adarank/errors.hpp"

namespace adarank {
namespace {

constexpr const char* kAdapterFormat = "adarank-adapters/1";
constexpr const char* kOptimizerFormat = "adarank-optimizer/1";

void expect_format(const Json& j, const char* format) {
  if (!j.is_object() || j.value("format", std::string{}) != format) {
    throw std::runtime_error(std::string("expected a '") + format + "' document");
  }
}

}  // namespace

Json matrix_to_json(const Matrix& m) {
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

Matrix matrix_from_json(const Json& j) {
  return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                j.at("data").get<std::vector<double>>());
}

Json adapters_to_json(std::span<const AdapterLayer> layers, std::span<const std::string> modules) {
  if (modules.size() != layers.size()) throw ShapeError("adapters_to_json: one module per layer");
  Json arr = Json::array();
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& l = layers[k];
    std::vector<bool> mask = l.mask();
    arr.push_back(Json{{"layer", k + 1},
                       {"module", modules[k]},
                       {"gamma_orth", l.gamma_orth()},
                       {"w0", matrix_to_json(l.w0())},
                       {"p", matrix_to_json(l.p())},
                       {"lambda", l.lambda()},
                       {"q", matrix_to_json(l.q())},
                       {"mask", mask}});
  }
  return Json{{"format", kAdapterFormat}, {"layers", std::move(arr)}};
}

std::vector<AdapterLayer> adapters_from_json(const Json& j) {
  expect_format(j, kAdapterFormat);
  std::vector<AdapterLayer> layers;
  for (const auto& e : j.at("layers")) {
    AdapterLayer l(matrix_from_json(e.at("w0")), matrix_from_json(e.at("p")),
                   e.at("lambda").get<std::vector<double>>(), matrix_from_json(e.at("q")),
                   e.at("gamma_orth").get<double>());
    l.set_mask(e.at("mask").get<std::vector<bool>>());
    layers.push_back(std::move(l));
  }
  return layers;
}

Json gaussian_state_to_json(const GaussianState& s) {
  return Json{{"format", kOptimizerFormat}, {"optimizer", "ivon"},   {"mu", s.mu},
              {"h", s.h},                   {"m", s.m},              {"lambda_ess", s.lambda_ess},
              {"delta", s.delta},           {"lr", s.lr},            {"beta1", s.beta1_m},
              {"beta2", s.beta2_h},         {"step", s.step}};
}

GaussianState gaussian_state_from_json(const Json& j) {
  GaussianState s;
  s.mu = j.at("mu").get<std::vector<double>>();
  s.h = j.at("h").get<std::vector<double>>();
  s.m = j.at("m").get<std::vector<double>>();
  s.lambda_ess = j.at("lambda_ess").get<double>();
  s.delta = j.at("delta").get<double>();
  s.lr = j.at("lr").get<double>();
  s.beta1_m = j.at("beta1").get<double>();
  s.beta2_h = j.at("beta2").get<double>();
  s.step = j.at("step").get<std::uint64_t>();
  s.validate();
  return s;
}

Json adam_state_to_json(std::span<const double> params, const AdamState& s) {
  return Json{{"format", kOptimizerFormat},
              {"optimizer", "adam"},
              {"params", std::vector<double>(params.begin(), params.end())},
              {"m", s.m},
              {"v", s.v},
              {"lr", s.lr},
              {"beta1", s.beta1},
              {"beta2", s.beta2},
              {"eps", s.eps},
              {"step", s.step}};
}

Json importance_to_json(const ImportanceState& s) {
  return Json{{"i_bar", s.i_bar}, {"u_bar", s.u_bar}, {"beta1", s.beta1},
              {"beta2", s.beta2}, {"step", s.step}};
}

ImportanceState importance_from_json(const Json& j) {
  ImportanceState s = ImportanceState::create(0, j.at("beta1").get<double>(),
                                              j.at("beta2").get<double>());
  s.i_bar = j.at("i_bar").get<std::vector<double>>();
  s.u_bar = j.at("u_bar").get<std::vector<double>>();
  s.step = j.at("step").get<std::size_t>();
  if (s.i_bar.size() != s.u_bar.size()) throw ShapeError("importance state: i_bar/u_bar lengths differ");
  return s;
}

OptimizerCheckpoint checkpoint_from_json(const Json& j) {
  expect_format(j, kOptimizerFormat);
  OptimizerCheckpoint c;
  c.optimizer = j.at("optimizer").get<std::string>();
  if (c.optimizer == "ivon") {
    c.ivon = gaussian_state_from_json(j);
  } else if (c.optimizer == "adam") {
    AdamState s;
    s.m = j.at("m").get<std::vector<double>>();
    s.v = j.at("v").get<std::vector<double>>();
    s.lr = j.at("lr").get<double>();
    s.beta1 = j.at("beta1").get<double>();
    s.beta2 = j.at("beta2").get<double>();
    s.eps = j.at("eps").get<double>();
    s.step = j.at("step").get<std::uint64_t>();
    c.adam = std::move(s);
    c.adam_params = j.at("params").get<std::vector<double>>();
  } else {
    throw std::runtime_error("unknown optimizer '" + c.optimizer + "' in checkpoint");
  }
  if (j.contains("importance")) c.importance = importance_from_json(j.at("importance"));
  return c;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return Json::parse(in);
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace adarank
