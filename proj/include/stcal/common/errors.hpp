#pragma once

#include <stdexcept>
#include <string>

namespace stcal {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or arguments. The CLI maps this to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Input outside the mathematical domain of an operation (non-finite voltage, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// A computation produced a non-finite value. The CLI maps this to exit code 3.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace stcal
