#pragma once

#include <vector>

#include "tws/model.hpp"
#include "tws/piecewise.hpp"

namespace tws {

// Which side of the running-average functional a ladder sweep tracks.
enum class GammaMode { Inf, Sup };

// Ladder sweep of regularized running-average extrema, plus an optional
// solution-distance column from a convergence study.
struct RegularizationReport {
  std::vector<double> epsilons;       // strictly decreasing half-widths
  std::vector<double> inf_avg_H;      // per-eps infima (Inf mode)
  std::vector<double> sup_avg_psi;    // per-eps suprema (Sup mode)
  double limit_inf_avg_H = 0.0;       // unregularized target (Inf mode)
  double limit_sup_avg_psi = 0.0;     // unregularized target (Sup mode)
  std::vector<double> gaps;           // |ladder value - target| in ladder order
  double gap_tol = 1e-3;
  bool final_gap_ok = false;          // last gap below gap_tol
  std::vector<double> y_distance;     // per-eps sup distance of y_eps to y
};

// Half the smallest gap between consecutive points of A together with the
// domain ends 0 and 1; ramp half-widths must stay strictly below this.
double eps_bar(const std::vector<double>& A);

// Largest ramp half-width for which one-sided extremum estimates on [a, b]
// hold: ramps then lie entirely inside or entirely outside the interval.
double eps_hat(const std::vector<double>& A, double a, double b);

// Default geometric ladder bar/2^k, k = 1..count.
std::vector<double> default_ladder(double bar, int count = 10);

// Replaces phi on each [gamma - eps, gamma + eps], gamma in A, by the linear
// interpolant of its one-sided values there; elsewhere phi is kept. A must
// contain every jump of phi; the result is continuous with no jumps.
PiecewiseFn eps_regularize(const PiecewiseFn& phi, const std::vector<double>& A, double eps);

// Pointwise min with the linear hats x * psi(eps) / eps and
// (1 - x) * psi(1 - eps) / eps on the two end zones of width eps; forces the
// result to vanish at both ends without raising it anywhere.
PiecewiseFn truncate_boundary(const PiecewiseFn& psi_eps, double eps);

// Regularized then boundary-truncated singular weight of the model.
PiecewiseFn kappa_tilde(const Model& m, double eps);

// Model with all four coefficients ramp-regularized at the model's jump set;
// derived fields are rebuilt and the jump set of the result is empty.
Model regularize_model(const Model& m, double eps);

// Runs the ladder on phi: per ladder entry, the extremum over (0, 1] of the
// running average of the regularized phi, against the unregularized target.
RegularizationReport gamma_limit_check(const PiecewiseFn& phi, const std::vector<double>& A,
                                       const std::vector<double>& ladder, GammaMode mode,
                                       double gap_tol = 1e-3);

// Solves the model at speed c, then each eps-regularized model, and records
// the sup distance between the profiles on [0.1, 0.9] per ladder entry.
RegularizationReport solution_convergence_study(const Model& m, double c,
                                                const std::vector<double>& ladder);

}  // namespace tws
