#pragma once

#include <stdexcept>
#include <string>

namespace tws {

// Config file could not be parsed. line/col are 1-based; 0 means unknown.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& msg, int line = 0, int col = 0)
      : std::runtime_error(format(msg, line, col)), line_(line), col_(col) {}
  int line() const { return line_; }
  int col() const { return col_; }

 private:
  static std::string format(const std::string& msg, int line, int col) {
    if (line <= 0) return msg;
    return msg + " (line " + std::to_string(line) + ", col " + std::to_string(col) + ")";
  }
  int line_, col_;
};

// Expression evaluation left the real domain (log of a nonpositive value,
// division by zero, fractional power of a negative base, overflow).
class EvalDomainError : public std::runtime_error {
 public:
  EvalDomainError(const std::string& msg, double x)
      : std::runtime_error(msg + " at x = " + std::to_string(x)), x_(x) {}
  double x() const { return x_; }

 private:
  double x_;
};

// A structural hypothesis on the coefficients failed. Carries the name of the
// failed check and, when meaningful, a witnessing abscissa.
class HypothesisError : public std::runtime_error {
 public:
  HypothesisError(const std::string& name, const std::string& detail, double witness)
      : std::runtime_error(name + " violated: " + detail), name_(name), witness_(witness) {}
  const std::string& name() const { return name_; }
  double witness() const { return witness_; }

 private:
  std::string name_;
  double witness_;
};

// Numerical machinery failed to meet its contract (quadrature divergence or
// budget exhaustion, step-size underflow, runaway meshes).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tws
