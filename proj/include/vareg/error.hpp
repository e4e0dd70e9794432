#pragma once

#include <stdexcept>
#include <string>

namespace vareg {

// Invalid input data, configuration, or file contents. The CLI maps this
// to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values or otherwise numerically broken state. The CLI maps
// this to exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vareg
