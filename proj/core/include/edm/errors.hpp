#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace edm {

/// Caller passed arguments that violate an operation's preconditions.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A loss, gradient or activation became NaN or infinite.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::size_t iteration)
      : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}

  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

/// Malformed or inconsistent dataset contents.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid experiment or batching configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Requested operation is not defined for this input (e.g. a closed-form
/// Pareto set for anisotropic quadratics).
class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace edm
