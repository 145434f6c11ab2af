#include "tws/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tws/errors.hpp"

namespace tws::ode {

namespace {

// Dormand-Prince 5(4) coefficients.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 5179.0 / 57600, e3 = 7571.0 / 16695, e4 = 393.0 / 640,
                 e5 = -92097.0 / 339200, e6 = 187.0 / 2100, e7 = 1.0 / 40;

struct TrialStep {
  double y5 = 0.0;   // fifth-order solution
  double err = 0.0;  // |y5 - y4|
  double k7 = 0.0;   // slope at the endpoint (FSAL stage)
  bool ok = false;   // all stages finite and admissible
};

TrialStep try_step(const Rhs& rhs, const StateGuard& guard, double x, double y, double h,
                   double k1) {
  TrialStep t;
  auto stage = [&](double xs, double ys, double& out) {
    if (!std::isfinite(ys) || (guard && !guard(xs, ys))) return false;
    try {
      out = rhs(xs, ys);
    } catch (const EvalDomainError&) {
      return false;
    }
    return std::isfinite(out);
  };
  double k2, k3, k4, k5, k6;
  if (!stage(x + h * a21, y + h * a21 * k1, k2)) return t;
  if (!stage(x + h * 0.3, y + h * (a31 * k1 + a32 * k2), k3)) return t;
  if (!stage(x + h * 0.8, y + h * (a41 * k1 + a42 * k2 + a43 * k3), k4)) return t;
  if (!stage(x + h * (8.0 / 9.0), y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4), k5))
    return t;
  if (!stage(x + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5), k6))
    return t;
  double y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
  if (!stage(x + h, y5, t.k7)) return t;
  double y4 = y + h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * t.k7);
  if (guard && !guard(x + h, y5)) return t;
  t.y5 = y5;
  t.err = std::fabs(y5 - y4);
  t.ok = std::isfinite(y5) && std::isfinite(t.err);
  return t;
}

}  // namespace

SegmentResult integrate_segment(const Rhs& rhs, double a, double ya, double b,
                                const std::vector<double>& want, const StepControl& ctl,
                                const StateGuard& guard, const Event& event) {
  SegmentResult res;
  double dir = (b >= a) ? 1.0 : -1.0;
  double span = std::fabs(b - a);
  if (span == 0.0) {
    res.y_end = ya;
    res.yp_end = rhs(a, ya);
    return res;
  }

  std::vector<double> targets(want);
  std::sort(targets.begin(), targets.end());
  if (dir < 0) std::reverse(targets.begin(), targets.end());
  targets.push_back(b);
  size_t next_target = 0;
  // Drop requested points at or behind the start.
  while (next_target < targets.size() - 1 && dir * (targets[next_target] - a) <= 0.0)
    ++next_target;

  double x = a, y = ya;
  double k1 = rhs(x, y);
  double ev_prev = event ? event(x, y) : 1.0;
  double h = ctl.h_init > 0 ? ctl.h_init : span / 100.0;
  if (ctl.h_max > 0) h = std::min(h, ctl.h_max);
  long steps = 0;

  while (dir * (b - x) > 0.0) {
    if (++steps > ctl.max_steps) {
      throw NumericalError("step budget exhausted at x = " + std::to_string(x));
    }
    double remaining = dir * (targets[next_target] - x);
    double h_here = std::min(h, remaining);
    double hs = dir * h_here;
    bool lands = h_here >= remaining * (1.0 - 1e-12);
    if (lands) hs = targets[next_target] - x;

    TrialStep t = try_step(rhs, guard, x, y, hs, k1);
    double tol = ctl.abs_tol + ctl.rel_tol * std::max(std::fabs(y), std::fabs(t.y5));
    if (!t.ok || t.err > tol) {
      ++res.rejected;
      double shrink = t.ok ? std::clamp(0.9 * std::pow(tol / t.err, 0.2), 0.2, 0.9) : 0.5;
      h = h_here * shrink;
      if (h <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::fabs(x))) {
        throw NumericalError("step size underflow at x = " + std::to_string(x));
      }
      continue;
    }

    ++res.accepted;
    double x_new = lands ? targets[next_target] : x + hs;
    double y_new = t.y5;

    if (event) {
      double ev_new = event(x_new, y_new);
      if (ev_new <= 0.0 && ev_prev > 0.0) {
        double s = ev_prev / (ev_prev - ev_new);  // linear crossing inside the step
        res.event_hit = true;
        res.x_event = x + s * (x_new - x);
        res.y_event = y + s * (y_new - y);
        res.y_end = y_new;
        res.yp_end = t.k7;
        return res;
      }
      ev_prev = ev_new;
    }

    x = x_new;
    y = y_new;
    k1 = t.k7;
    if (lands) {
      if (next_target + 1 < targets.size()) {
        res.at.push_back({x, y, k1});
        ++next_target;
      } else {
        break;  // landed on b
      }
    }

    double grow = t.err > 0 ? std::clamp(0.9 * std::pow(tol / t.err, 0.2), 0.2, 5.0) : 5.0;
    h = h_here * grow;
    if (ctl.h_max > 0) h = std::min(h, ctl.h_max);
  }

  res.y_end = y;
  res.yp_end = k1;
  return res;
}

}  // namespace tws::ode
