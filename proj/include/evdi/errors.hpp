#pragma once

#include <stdexcept>
#include <string>

namespace evdi {

// Malformed or unknown configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// NaN/Inf in a loss or parameter (CLI exit code 3).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File could not be read, written or parsed (CLI exit code 4).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Contract violations on arguments use std::invalid_argument (shape
// mismatches, bad counts) and std::domain_error (values outside a
// function's domain, e.g. a time outside the exposure window).

}  // namespace evdi
