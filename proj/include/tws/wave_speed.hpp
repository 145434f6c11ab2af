#pragma once

#include <string>
#include <vector>

#include "tws/averages.hpp"
#include "tws/bvp.hpp"
#include "tws/model.hpp"

namespace tws {

enum class Existence { Exists, NotExists, Indeterminate };
std::string to_string(Existence e);

enum class CertReason {
  None,
  SlopeCondition,      // origin drift below the slope threshold
  EllPInfinite,        // origin threshold infinite: no admissible slope at any speed
  NecessaryIntegral,   // net balance c int(g) > int(f) fails
  IntegralLowerSolution  // averaged drift exceeds the existence threshold
};
std::string to_string(CertReason r);

struct SpeedAssumptions {
  bool g0_positive = false;           // g(0+) > 0
  bool G0_positive = false;           // inf of the g-average > 0
  bool prefix_g_nonnegative = false;  // int_0^xi g >= 0 for all xi
};

struct SpeedBounds {
  double lower = 0.0;         // below this no admissible speed exists
  double simple_lower = 0.0;  // same closed form; kept as a separate field
  bool lower_available = false;
  double upper = 0.0;         // smallest speed whose averaged drift clears the threshold
  bool upper_available = false;
  double simple_upper = 0.0;  // closed form from the global average extremes
  bool simple_upper_available = false;
  SpeedAssumptions assumptions;
  std::vector<std::string> notes;
};

struct Certificate {
  double c = 0.0;
  Existence verdict = Existence::Indeterminate;
  CertReason reason = CertReason::None;
  double slope_lhs = 0.0, slope_rhs = 0.0, slope_margin = 0.0;
  double beta = 0.0, exist_threshold = 0.0, exist_margin = 0.0;
  double necessary_lhs = 0.0, necessary_rhs = 0.0, necessary_margin = 0.0;
  std::vector<std::string> notes;
};

struct BracketStep {
  double c = 0.0;
  Verdict verdict = Verdict::Indeterminate;
  double lo = 0.0, hi = 0.0;  // bracket after applying this test
};

struct SpeedSearch {
  SpeedBounds bounds;
  bool refused = false;    // a precondition failed; nothing was bisected
  std::string refusal;
  bool found = false;
  double c_star = 0.0;
  double bracket_lo = 0.0, bracket_hi = 0.0;
  double tol = 0.0;
  std::vector<BracketStep> history;
  std::vector<std::string> notes;
};

// Shared scan grid, average functions, and stats for one model, reused across
// every per-speed query.
class SpeedAnalyzer {
 public:
  explicit SpeedAnalyzer(const Model& m);

  const Model& model() const { return m_; }
  const AverageStats& stats() const { return stats_; }

  // inf over xi of the running average of c g - f (the zero limit counts).
  double beta(double c) const;
  double beta_err(double c) const;
  double exist_threshold() const;  // p' (p-1)^{1/p} K0^{1/p'}

  SpeedBounds bounds() const;
  Certificate certify(double c) const;
  SpeedSearch find_c_star(double tol = 1e-6, const SolveOptions& solve_opt = {}) const;

 private:
  Model m_;
  std::vector<double> grid_;
  AverageFunction Af_, Ag_, Apsi_;
  AverageStats stats_;
};

// One-shot conveniences.
SpeedBounds bounds_c_star(const Model& m);
Certificate certify(const Model& m, double c);
SpeedSearch find_c_star(const Model& m, double tol = 1e-6);

}  // namespace tws
