#pragma once

#include <stdexcept>
#include <string>

namespace gpmm {

// Input and validation problems: unreadable files, malformed data,
// mismatched sizes, invalid configuration.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failures: indefinite Gram matrices, non-finite objectives.
struct NumericalError : Error {
  explicit NumericalError(const std::string& what) : Error(what) {}
};

}  // namespace gpmm
