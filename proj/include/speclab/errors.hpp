#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace speclab {

// Invalid model/experiment specification (bad law parameters, shape
// mismatches, unsupported combinations).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
  explicit ConfigError(const std::vector<std::string>& violations)
      : std::runtime_error(join(violations)), violations_(violations) {}
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string s = "configuration invalid:";
    for (const auto& m : v) s += "\n  - " + m;
    return s;
  }
  std::vector<std::string> violations_;
};

// A mathematical hypothesis of an inequality does not hold for the given
// inputs. This is a first-class outcome, not a bug.
class HypothesisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Requested energy/length combination is outside the regime where the
// asymptotic machinery applies (e.g. critical length below the floor).
class OutOfRegimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Iterative solver did not meet the residual contract. Carries the best
// residual norms reached so far.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> residuals)
      : std::runtime_error(what), residuals_(std::move(residuals)) {}
  const std::vector<double>& best_residuals() const { return residuals_; }

 private:
  std::vector<double> residuals_;
};

}  // namespace speclab
