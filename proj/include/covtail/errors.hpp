#pragma once

#include <stdexcept>
#include <string>

namespace covtail {

/// Invalid caller input (bad dimensions, non-finite entries, bad parameters).
struct InputError : std::invalid_argument {
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

/// A matrix required to be positive semidefinite is not, beyond tolerance.
struct NotPsdError : std::runtime_error {
  explicit NotPsdError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical procedure failed to converge or produced an unusable result.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace covtail
