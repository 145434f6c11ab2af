#pragma once

#include <functional>
#include <vector>

namespace tws::ode {

// Scalar right-hand side y' = rhs(x, y). May throw EvalDomainError; the
// stepper treats that as a rejected stage, not a fatal error.
using Rhs = std::function<double(double, double)>;

// Admissibility guard for trial states. Returning false rejects the step so
// the integrator backs off instead of leaving the valid region (e.g. y <= 0
// where the equation has a singular term).
using StateGuard = std::function<bool(double x, double y)>;

// Scalar event indicator. A step whose endpoint gives a value <= 0 stops the
// integration; the crossing abscissa is located inside that step.
using Event = std::function<double(double x, double y)>;

struct StepControl {
  double abs_tol = 1e-10;
  double rel_tol = 1e-8;
  double h_init = 0.0;   // 0: span/100
  double h_max = 0.0;    // 0: unlimited
  long max_steps = 4000000;
};

struct Sample {
  double x = 0.0;
  double y = 0.0;
  double yp = 0.0;
};

struct SegmentResult {
  double y_end = 0.0;
  double yp_end = 0.0;
  long accepted = 0;
  long rejected = 0;
  std::vector<Sample> at;       // states at the requested interior points
  bool event_hit = false;
  double x_event = 0.0;
  double y_event = 0.0;
};

// Integrates from (a, ya) to b (either direction) with an embedded 5(4)
// Runge-Kutta pair, landing exactly on b and on every requested interior
// point. The right-hand side must be smooth on the open segment; callers
// split at known breakpoints. Throws NumericalError when the step size
// underflows or the step budget is exhausted.
SegmentResult integrate_segment(const Rhs& rhs, double a, double ya, double b,
                                const std::vector<double>& want, const StepControl& ctl,
                                const StateGuard& guard = {}, const Event& event = {});

}  // namespace tws::ode
