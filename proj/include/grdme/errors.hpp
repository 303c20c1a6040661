#pragma once

#include <stdexcept>
#include <string>

namespace grdme {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad parameters or configuration. The CLI maps this to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Mesh outside the range where a requested rate is defined (exit code 3).
class RegimeError : public Error {
 public:
  using Error::Error;
};

// A sampler ran past its hard time cap (exit code 4).
class RuntimeCapError : public Error {
 public:
  using Error::Error;
};

}  // namespace grdme
