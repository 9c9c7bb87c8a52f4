#pragma once

#include <stdexcept>
#include <string>

namespace hvs {

// Raised for malformed external data (CIFAR records, PPM streams).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A CIFAR record whose label byte is outside the class range.
class CorruptRecordError : public FormatError {
 public:
  using FormatError::FormatError;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class CheckpointFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A success rate whose denominator is empty.
class UndefinedRateError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// An adversarial result that breaks an attack contract (L-inf budget,
// untouched masked pixels). Always a bug, never a user error.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace hvs
