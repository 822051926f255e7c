#pragma once

#include <stdexcept>
#include <string>

namespace robinsim {

/// Invalid or inconsistent user input (bad config key, unknown family,
/// violated model invariant). The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A mathematical precondition was violated (non-SPD tensor, t <= 0, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A numerical procedure failed to reach its tolerance. The CLI maps this to
/// exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace robinsim
