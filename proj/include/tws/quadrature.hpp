#pragma once

#include <functional>

namespace tws::quad {

using Integrand = std::function<double(double)>;

struct Options {
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  int panel_budget = 10000;
  int max_shells = 48;
};

struct QuadResult {
  double value = 0.0;
  double err = 0.0;
  // err fell below the requested tolerance before the budget ran out.
  bool converged = false;
  // Endpoint shells failed to decay: the improper integral is divergent (or
  // too close to divergent to resolve). value then holds the partial sum.
  bool diverged = false;
  int panels = 0;
};

// Non-adaptive 7-point Gauss rule on [a, b]. Nodes are interior.
double gauss7(const Integrand& f, double a, double b);

// Adaptive Gauss-Kronrod (7, 15) on [a, b]; f must be smooth on the closed
// interval. All evaluation nodes are interior.
QuadResult integrate(const Integrand& f, double a, double b, const Options& opt = {});

// Integral on [a, b] where f may be singular at either endpoint: geometric
// shells toward the flagged endpoints with a tail estimate from the shell
// decay ratio. Non-decaying shells mark the result diverged.
QuadResult integrate_improper(const Integrand& f, double a, double b, bool singular_left,
                              bool singular_right, const Options& opt = {});

}  // namespace tws::quad
