#pragma once

#include <stdexcept>
#include <string>

namespace rydpair {

// Each error class maps onto one CLI exit code.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidStateError : public ConfigError {
public:
  using ConfigError::ConfigError;
};

class DataFileError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DomainError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

} // namespace rydpair
