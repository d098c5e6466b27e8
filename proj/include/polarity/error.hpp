#pragma once

#include <stdexcept>
#include <string>

namespace polarity {

// Malformed scenario or CLI input. Maps to exit status 2.
class SchemaError : public std::runtime_error {
 public:
  explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

// Model assumption violated by otherwise well-formed input. Exit status 3.
class PreconditionError : public std::runtime_error {
 public:
  explicit PreconditionError(const std::string& what)
      : std::runtime_error(what) {}
};

// Two independent computations of the same quantity disagree. Exit status 4.
class ConsistencyError : public std::runtime_error {
 public:
  explicit ConsistencyError(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace polarity
