#pragma once

#include <stdexcept>
#include <string>

namespace sca {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised for unreadable or malformed input files.
class LoadError : public Error {
 public:
  using Error::Error;
};

// Raised for invalid configuration values or unusable parameter combinations.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A zero-norm vector reached an operation that needs a direction.
class DegenerateVectorError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

class EmbeddingServiceError : public Error {
 public:
  EmbeddingServiceError(const std::string& what, std::size_t batch)
      : Error(what + " (batch " + std::to_string(batch) + ")"), batch_(batch) {}

  std::size_t batch() const noexcept { return batch_; }

 private:
  std::size_t batch_;
};

}  // namespace sca
