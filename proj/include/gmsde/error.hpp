#pragma once

#include <stdexcept>
#include <string>

namespace gmsde {

/// Bad caller input: dimension mismatch, unknown name, non-finite data.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation produced non-finite values or failed to converge.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gmsde
