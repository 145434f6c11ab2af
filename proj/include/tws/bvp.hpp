#pragma once

#include <string>
#include <vector>

#include "tws/averages.hpp"
#include "tws/model.hpp"

namespace tws {

enum class Verdict { Admissible, Inadmissible, Indeterminate };
std::string to_string(Verdict v);

// Roots of the origin indicator eta(t) = t^{p'} - B t^{p'-1} + lambda on t >= 0.
// They bracket the slopes a solution may have at the zero equilibrium.
struct SlopeRoots {
  int count = 0;          // 0, 1, or 2 (counting a double root once)
  double lo = 0.0;        // smallest root when count >= 1
  double hi = 0.0;        // largest root when count >= 1
  double min_eta = 0.0;   // minimum of eta over t >= 0
  double argmin = 0.0;    // where the minimum is attained
  double B = 0.0;         // c g(0) - f(0)
  double lambda = 0.0;    // ell_p^{1/(p-1)}
};

SlopeRoots eta_roots(double p, double B, double lambda);
SlopeRoots slope_roots(const Model& m, const AverageStats& stats, double c);
SlopeRoots slope_roots(const Model& m, double c);

// Certified positive floor for admissible solutions on I_{2r} = [2r, 1-2r].
// Returns 0 when r is invalid for this model (breakpoints too close to the
// boundary) or the ingredients degenerate.
double lower_bound_delta(const Model& m, double c, double r);

struct IntegralCheck {
  bool holds = false;
  double lhs = 0.0;
  double rhs = 0.0;
  double err = 0.0;             // quadrature error folded into the margin
  double witness_lambda = 0.0;  // seeding slope when the check certifies existence
};

// Strict inequality c * int g > int f, with a 10x quadrature margin.
IntegralCheck necessary_integral(const Model& m, double c);

// Existence certificate: inf of the running average of cg - f strictly above
// the kappa threshold; witness slope beta/p.
IntegralCheck integral_lower_solution_check(const Model& m, double c);

struct SolveOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-8;
  double xi_min = 1e-6;        // left classification abscissa
  double seed_offset = 1e-3;   // right seeding distance from 1
  double slope_tol_factor = 0.05;
  double residual_tol = 1e-5;
  bool run_probe = true;       // forward falsification when the slope is above band
  bool certify = true;         // post-solve consistency checks may downgrade
};

struct YSolution {
  std::vector<double> xi;        // ascending mesh; contains every breakpoint
  std::vector<double> y;
  std::vector<double> yd_left;   // one-sided slopes from the equation
  std::vector<double> yd_right;
  std::vector<double> residual;  // cell defect stored at the cell's left node
  Verdict verdict = Verdict::Indeterminate;
  double c = 0.0;
  double slope_at_zero = 0.0;    // y(xi_min)/xi_min
  double slope_band_lo = 0.0;
  double slope_band_hi = 0.0;
  double crossing_xi = 0.0;      // Inadmissible: where positivity fails
  double residual_sup = 0.0;
  double boundary_defect = 0.0;  // y at the rightmost mesh node
  double error_estimate = 0.0;
  std::vector<std::string> notes;

  double value(double x) const;       // piecewise cubic Hermite
  double derivative(double x) const;
};

// Backward shooting solve of the reduced first-order problem at speed c.
// Precomputed stats may be passed to avoid recomputation in bisection loops.
YSolution solve_bvp(const Model& m, double c, const SolveOptions& opt = {},
                    const AverageStats* stats = nullptr);

// Damped integral-map refinement of a mesh solution; returns the iterate with
// the smallest residual, or the input unchanged when no iterate improves it.
YSolution picard_refine(const Model& m, double c, const YSolution& y0, int iters);

// Operational uniqueness check: solves twice with halved seeding offset and
// returns the sup distance on [0.05, 0.95].
double seed_halving_gap(const Model& m, double c, const SolveOptions& opt = {},
                        const AverageStats* stats = nullptr);

}  // namespace tws
