#pragma once

#include <stdexcept>
#include <string>

namespace pohmm {

// Malformed or out-of-contract input: bad files, unknown symbols, empty data.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// Estimation or scoring produced a non-finite or degenerate quantity.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pohmm
