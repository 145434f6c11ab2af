#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "tws/model.hpp"
#include "tws/piecewise.hpp"

namespace tws {

enum class LimitStatus { Converged, Diverged, Oscillating };

// Outcome of a geometric-ladder limit estimate at 0+ with one Richardson
// extrapolation step (exact for affine trends).
struct LimitEstimate {
  LimitStatus status = LimitStatus::Oscillating;
  double value = 0.0;          // Converged: the limit; Diverged: +/-infinity
  double low = 0.0, high = 0.0;  // Oscillating: bracket of recent extrapolants
};

// Richardson-extrapolated limit of f(x) as x -> 0+ along x0 * 2^-k.
LimitEstimate ladder_limit(const std::function<double(double)>& f, double x0 = 1e-2,
                           int halvings = 12, double rel_tol = 1e-6);

// Same estimate from already-sampled ladder values v[k] = f(x0 * 2^-k).
LimitEstimate richardson_limit(const std::vector<double>& v, double rel_tol = 1e-6);

struct ExtremeResult {
  double value = 0.0;
  double where = 0.0;          // abscissa where attained (0 for the 0+ limit)
  bool at_zero_limit = false;  // attained only in the limit xi -> 0+
  bool at_one = false;         // attained at xi = 1
  bool infinite = false;       // sup/inf is +/-infinity (value then matches)
  double err = 0.0;            // grid-resolution + quadrature error estimate
};

// Shared evaluation grid for a model's average functions: every piece
// boundary, a geometric ladder toward 0, 512 points per subinterval, and 1.
std::vector<double> build_scan_grid(const Model& m);

// The running average A(xi) = (1/xi) integral_0^xi phi, with prefix integrals
// cached on a scan grid. Immutable after construction.
class AverageFunction {
 public:
  // grid must be sorted, inside (0, 1], contain every cut of phi, the ladder
  // points 1e-2 * 2^-k for k = 0..12, and 1. improper_* enables endpoint
  // shells for a phi that may blow up at 0 or 1.
  AverageFunction(PiecewiseFn phi, std::vector<double> grid, bool improper_left = false,
                  bool improper_right = false);

  const std::vector<double>& grid() const { return grid_; }
  double prefix_at(std::size_t i) const { return prefix_[i]; }
  double average_at(std::size_t i) const { return prefix_[i] / grid_[i]; }

  // Exact values at arbitrary xi in (0, 1]: cached prefix plus a local
  // quadrature top-up.
  double prefix(double xi) const;
  double average(double xi) const;

  // The prefix integral itself fails to converge (phi not integrable at 0).
  bool divergent() const { return divergent_; }
  double quadrature_err() const { return quad_err_; }

  const LimitEstimate& zero_limit() const { return zero_limit_; }
  const ExtremeResult& supremum() const { return sup_; }
  const ExtremeResult& infimum() const { return inf_; }

 private:
  PiecewiseFn phi_;
  std::vector<double> grid_, prefix_;
  bool improper_left_ = false, improper_right_ = false;
  bool divergent_ = false;
  double quad_err_ = 0.0;
  LimitEstimate zero_limit_;
  ExtremeResult sup_, inf_;

  ExtremeResult extreme(bool want_max) const;
};

struct AverageStats {
  double F0 = 0.0, G0 = 0.0, K0 = 0.0;
  bool K0_infinite = false;
  double ell_p = 0.0, L_p = 0.0;
  bool slope_interval = false;  // ladder oscillated: [ell_p, L_p] is an interval estimate
  double f0 = 0.0, g0 = 0.0;   // one-sided values at 0+
  double err_F0 = 0.0, err_G0 = 0.0, err_K0 = 0.0;
  ExtremeResult F0_detail, G0_detail, K0_detail;
  LimitEstimate slope_detail;
  std::vector<std::string> warnings;  // override cross-check mismatches etc.
};

// F0 = sup of the f-average, G0 = inf of the g-average, K0 = sup of the
// psi-average, slope limits from psi^(p-1); config overrides win and the
// numeric values are cross-checked into warnings.
AverageStats average_stats(const Model& m);
AverageStats average_stats(const Model& m, const AverageFunction& Af, const AverageFunction& Ag,
                           const AverageFunction& Apsi);

// One-shot (1/xi) integral_0^xi phi by fresh quadrature split at the cuts.
double integral_average(const PiecewiseFn& phi, double xi);

}  // namespace tws
