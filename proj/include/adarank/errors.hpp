#pragma once

#include <stdexcept>
#include <string>

namespace adarank {

// Incompatible shapes or lengths between operands.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A NaN/Inf appeared, or an argument left its valid numeric domain.
class NumericError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Optimizer state blew past the divergence guard.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid experiment configuration, detected before training starts.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace adarank
