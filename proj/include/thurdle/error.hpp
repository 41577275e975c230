#pragma once

// Exception types. The CLI maps each family onto a stable exit code:
// usage_error -> 2, data_error -> 3, numerical_error -> 4.

#include <cstddef>
#include <stdexcept>
#include <string>

namespace thurdle {

/// Invalid argument or precondition violation (negative t, inverted interval, ...).
class domain_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Invalid flag combination or configuration.
class usage_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Unparsable or unusable input data. `line` is 1-based, 0 when not tied to a line.
class data_error : public std::runtime_error {
 public:
  explicit data_error(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Numerical failure: quadrature non-convergence, tail underflow, degenerate model,
/// optimizer non-convergence. `achieved` carries the best tolerance reached, if any.
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& what, double achieved = 0.0)
      : std::runtime_error(what), achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

class tail_underflow_error : public numerical_error {
 public:
  using numerical_error::numerical_error;
};

class degenerate_model_error : public numerical_error {
 public:
  using numerical_error::numerical_error;
};

/// Every optimizer start failed to meet its convergence criterion.
class convergence_error : public numerical_error {
 public:
  using numerical_error::numerical_error;
};

}  // namespace thurdle
