#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace bougerol {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A numerical procedure failed to converge within its iteration budget.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A path ran out of its step budget before reaching the requested level.
class BudgetError : public std::runtime_error {
 public:
  BudgetError(std::uint64_t steps, double time, double log_level)
      : std::runtime_error("path step budget exhausted after " + std::to_string(steps) +
                           " steps at t=" + std::to_string(time) +
                           " (target log-level " + std::to_string(log_level) + ")"),
        steps_(steps),
        time_(time),
        log_level_(log_level) {}

  std::uint64_t steps() const noexcept { return steps_; }
  double time() const noexcept { return time_; }
  double log_level() const noexcept { return log_level_; }

 private:
  std::uint64_t steps_;
  double time_;
  double log_level_;
};

/// Malformed command line or configuration.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bougerol
