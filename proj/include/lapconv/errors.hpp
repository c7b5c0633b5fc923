#pragma once

#include <stdexcept>
#include <string>

namespace lapconv {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Malformed or inadmissible run configuration (CLI exit code 1).
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A numerical procedure failed to reach its declared accuracy (CLI exit code 2).
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace lapconv
