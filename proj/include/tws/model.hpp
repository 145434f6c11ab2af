#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tws/piecewise.hpp"

namespace tws {

// Analytic values supplied in the config; when present they win over the
// numeric ladder estimates, which are then only cross-checked.
struct LimitOverrides {
  std::optional<double> ell_p, L_p, f0, g0;
};

// Optional reference data for test fixtures (known exact speed etc.).
struct Reference {
  std::optional<double> c_star;
  std::string tag;
};

struct HypothesisCheck {
  std::string name;    // "H1".."H4"
  bool pass = false;
  std::string detail;  // what was checked / what failed
  double witness = 0.0;
};

// One problem instance: coefficients of
//   f(u) u_x + g(u) u_t = (d(u) |u_x|^(p-2) u_x)_x + h(u)
// on the state interval [0, 1], plus derived quantities.
struct Model {
  double p = 2.0;
  double p_prime = 2.0;  // p/(p-1)
  PiecewiseFn f, g, h, d;
  PiecewiseFn kappa;  // d^(1/(p-1)) * h
  PiecewiseFn psi;    // kappa(x) / x^(1/(p-1))
  std::vector<double> theta;     // genuine jump locations of f, g, h, d
  std::vector<double> all_cuts;  // every piece boundary, jumps and seams
  LimitOverrides limits;
  Reference reference;
  std::string source_hash;  // FNV-1a 64 of the config bytes, hex
  std::vector<HypothesisCheck> checks;  // filled by validation

  double inv_pm1() const { return 1.0 / (p - 1.0); }
};

// Syntax only: builds the Model from config text without hypothesis checks.
Model parse_config(const std::string& text);

// Runs the four admissibility hypotheses, returning one record each:
//   H1  every piece finite and bounded on the closure of its interval
//   H2  d strictly positive and finite on interior compacts
//   H3  h vanishes at 0+ and 1-, strictly positive on interior compacts
//   H4  kappa integrable on (0, 1)
std::vector<HypothesisCheck> validate_hypotheses(const Model& m);

// parse_config + validate_hypotheses; throws HypothesisError on the first
// failed check, otherwise returns the model with diagnostics attached.
Model parse_model(const std::string& text);

// c*g - f with merged cuts, for a given speed.
PiecewiseFn speed_combination(const Model& m, double c);

std::string fnv1a_hex(const std::string& bytes);

}  // namespace tws
