#pragma once

#include <stdexcept>
#include <string>

namespace majorantlab {

// Argument outside the domain of a function (x < x0, y < y0, n < n_min, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Work or memory request above a configured cap.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Iterative method failed to converge. For monotone inversions this is a bug
// signal, for quadrature it carries the last two iterates.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double last = 0.0, double previous = 0.0)
      : std::runtime_error(what), last_(last), previous_(previous) {}
  double last() const { return last_; }
  double previous() const { return previous_; }

 private:
  double last_;
  double previous_;
};

// Invalid or inadmissible parameters (config values, family constraints).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace majorantlab
