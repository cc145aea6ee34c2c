#pragma once

#include <stdexcept>
#include <string>

namespace relcheck {

// Base of every error the library throws on contract violations.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Value outside the admissible range (plaintext >= n, scalar >= n, level > max).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Fixed-point magnitude or overflow-budget violation.
class RangeError : public Error {
 public:
  using Error::Error;
};

// Operands bound to different public keys, or a party lacking the key.
class KeyError : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

class DecryptionError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Invalid use of an API: empty dataset, non-positive sizes, bad CLI flags.
class UsageError : public Error {
 public:
  using Error::Error;
};

// A weight vector with zero L2 norm was handed to the similarity machinery.
class DegenerateWeightsError : public Error {
 public:
  using Error::Error;
};

// Malformed bytes: wire messages, key files, IDX files, metrics files.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Role methods invoked out of order (e.g. a second initialization).
class ProtocolOrderError : public Error {
 public:
  using Error::Error;
};

// Run configuration failed validation. The message carries the field path.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace relcheck
