#pragma once

#include <stdexcept>
#include <string>

namespace olive {

// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input data violates a documented precondition or invariant.
class DataError : public Error {
 public:
  using Error::Error;
};

// A configuration value is unknown or out of its documented range.
class ConfigError : public DataError {
 public:
  using DataError::DataError;
};

// Reading or writing a file failed.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace olive
