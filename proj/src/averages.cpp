#include "tws/averages.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tws/errors.hpp"
#include "tws/quadrature.hpp"

namespace tws {

namespace {

constexpr double kLadderTop = 1e-2;
constexpr int kLadderHalvings = 12;
constexpr int kPointsPerSubinterval = 512;
constexpr int kMaxRefineBrackets = 24;
constexpr double kInf = std::numeric_limits<double>::infinity();

double golden_optimize(const std::function<double(double)>& fn, double a, double b, bool want_max,
                       double* arg_out) {
  const double gr = 0.6180339887498949;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = fn(c), fd = fn(d);
  for (int it = 0; it < 60 && (b - a) > 1e-13 * std::max(1.0, std::fabs(b)); ++it) {
    bool keep_left = want_max ? fc > fd : fc < fd;
    if (keep_left) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = fn(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = fn(d);
    }
  }
  double mid = 0.5 * (a + b);
  double fm = fn(mid);
  if (arg_out) *arg_out = mid;
  return fm;
}

}  // namespace

LimitEstimate richardson_limit(const std::vector<double>& v, double rel_tol) {
  LimitEstimate est;
  if (v.size() < 3) {
    if (!v.empty()) {
      est.status = LimitStatus::Oscillating;
      est.low = est.high = est.value = v.back();
    }
    return est;
  }
  double last_finite = 0.0;
  for (double x : v) {
    if (std::isfinite(x)) {
      last_finite = x;
    } else {
      est.status = LimitStatus::Diverged;
      est.value = last_finite < 0.0 ? -kInf : kInf;
      est.low = est.high = est.value;
      return est;
    }
  }
  std::vector<double> r(v.size() - 1);
  for (std::size_t k = 0; k + 1 < v.size(); ++k) r[k] = 2.0 * v[k + 1] - v[k];
  std::size_t n = r.size();
  double scale = std::max(1.0, std::fabs(r[n - 1]));
  if (n >= 3 && std::fabs(r[n - 1] - r[n - 2]) <= rel_tol * scale &&
      std::fabs(r[n - 2] - r[n - 3]) <= rel_tol * scale) {
    est.status = LimitStatus::Converged;
    est.value = r[n - 1];
    est.low = est.high = est.value;
    return est;
  }
  // Sustained growth of the raw ladder marks a divergent limit.
  if (v.size() >= 7) {
    bool growing = true;
    std::size_t m = v.size();
    for (std::size_t k = m - 6; k + 1 < m; ++k)
      growing = growing && std::fabs(v[k + 1]) > std::fabs(v[k]);
    if (growing && std::fabs(v[m - 1]) >= 2.0 * std::fabs(v[m - 6])) {
      est.status = LimitStatus::Diverged;
      est.value = v[m - 1] < 0.0 ? -kInf : kInf;
      est.low = est.high = est.value;
      return est;
    }
  }
  est.status = LimitStatus::Oscillating;
  std::size_t from = n >= 4 ? n - 4 : 0;
  est.low = kInf;
  est.high = -kInf;
  for (std::size_t k = from; k < n; ++k) {
    est.low = std::min(est.low, r[k]);
    est.high = std::max(est.high, r[k]);
  }
  est.value = 0.5 * (est.low + est.high);
  return est;
}

LimitEstimate ladder_limit(const std::function<double(double)>& f, double x0, int halvings,
                           double rel_tol) {
  std::vector<double> v;
  v.reserve(halvings + 1);
  for (int k = 0; k <= halvings; ++k) {
    double x = x0 * std::ldexp(1.0, -k);
    double y;
    try {
      y = f(x);
    } catch (const EvalDomainError&) {
      y = std::numeric_limits<double>::quiet_NaN();
    }
    v.push_back(y);
  }
  return richardson_limit(v, rel_tol);
}

std::vector<double> build_scan_grid(const Model& m) {
  std::vector<double> pts;
  for (int k = 0; k <= kLadderHalvings; ++k) pts.push_back(kLadderTop * std::ldexp(1.0, -k));
  std::vector<double> bounds{0.0};
  for (double c : m.all_cuts) bounds.push_back(c);
  bounds.push_back(1.0);
  for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
    double a = bounds[i], b = bounds[i + 1];
    for (int j = 1; j <= kPointsPerSubinterval; ++j)
      pts.push_back(a + (b - a) * j / kPointsPerSubinterval);
  }
  for (double c : m.all_cuts) pts.push_back(c);
  pts.push_back(1.0);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](double x, double y) { return y - x <= 1e-15; }),
            pts.end());
  std::erase_if(pts, [](double x) { return x <= 0.0 || x > 1.0; });
  return pts;
}

AverageFunction::AverageFunction(PiecewiseFn phi, std::vector<double> grid, bool improper_left,
                                 bool improper_right)
    : phi_(std::move(phi)),
      grid_(std::move(grid)),
      improper_left_(improper_left),
      improper_right_(improper_right) {
  prefix_.resize(grid_.size());
  auto f = [this](double x) { return phi_(x); };
  quad::Options chunk_opt;
  chunk_opt.abs_tol = 1e-14;
  chunk_opt.rel_tol = 1e-12;
  chunk_opt.panel_budget = 64;
  quad::Options end_opt = chunk_opt;
  end_opt.panel_budget = 4096;

  quad::QuadResult first = quad::integrate_improper(f, 0.0, grid_[0], improper_left_, false, end_opt);
  prefix_[0] = first.value;
  divergent_ = first.diverged;
  quad_err_ = std::isfinite(first.err) ? first.err : 0.0;
  for (std::size_t i = 1; i < grid_.size(); ++i) {
    bool last = improper_right_ && grid_[i] >= 1.0;
    quad::QuadResult r = last
                             ? quad::integrate_improper(f, grid_[i - 1], grid_[i], false, true, end_opt)
                             : quad::integrate(f, grid_[i - 1], grid_[i], chunk_opt);
    prefix_[i] = prefix_[i - 1] + r.value;
    divergent_ = divergent_ || r.diverged;
    quad_err_ += std::isfinite(r.err) ? r.err : 0.0;
  }

  // Limit of the average at 0+ from the cached ladder points.
  std::vector<double> ladder_vals;
  for (int k = 0; k <= kLadderHalvings; ++k) {
    double t = kLadderTop * std::ldexp(1.0, -k);
    auto it = std::lower_bound(grid_.begin(), grid_.end(), t * (1.0 - 1e-12));
    if (it == grid_.end()) break;
    std::size_t j = static_cast<std::size_t>(it - grid_.begin());
    ladder_vals.push_back(prefix_[j] / grid_[j]);
  }
  zero_limit_ = richardson_limit(ladder_vals);

  sup_ = extreme(true);
  inf_ = extreme(false);
}

double AverageFunction::prefix(double xi) const {
  if (xi <= 0.0) return 0.0;
  auto it = std::upper_bound(grid_.begin(), grid_.end(), xi);
  if (it == grid_.begin()) {
    quad::Options opt;
    opt.abs_tol = 1e-14;
    opt.rel_tol = 1e-12;
    opt.panel_budget = 2048;
    return quad::integrate_improper([this](double x) { return phi_(x); }, 0.0, xi,
                                    improper_left_, false, opt)
        .value;
  }
  std::size_t j = static_cast<std::size_t>(it - grid_.begin()) - 1;
  double base = prefix_[j];
  if (xi == grid_[j]) return base;
  quad::Options opt;
  opt.abs_tol = 1e-14;
  opt.rel_tol = 1e-12;
  opt.panel_budget = 64;
  return base + quad::integrate([this](double x) { return phi_(x); }, grid_[j], xi, opt).value;
}

double AverageFunction::average(double xi) const { return prefix(xi) / xi; }

ExtremeResult AverageFunction::extreme(bool want_max) const {
  ExtremeResult out;
  std::size_t n = grid_.size();
  if (divergent_) {
    out.infinite = true;
    out.value = prefix_[0] < 0.0 ? -kInf : kInf;
    out.err = kInf;
    return out;
  }
  auto better = [&](double a, double b) { return want_max ? a > b : a < b; };
  std::vector<double> avg(n);
  for (std::size_t i = 0; i < n; ++i) avg[i] = prefix_[i] / grid_[i];

  std::size_t best_i = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (better(avg[i], avg[best_i])) best_i = i;

  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < n; ++i) {
    bool left_ok = i == 0 || !better(avg[i - 1], avg[i]);
    bool right_ok = i + 1 >= n || !better(avg[i + 1], avg[i]);
    if (left_ok && right_ok) candidates.push_back(i);
  }
  std::sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
    return better(avg[a], avg[b]);
  });
  if (candidates.size() > kMaxRefineBrackets) candidates.resize(kMaxRefineBrackets);
  if (std::find(candidates.begin(), candidates.end(), best_i) == candidates.end())
    candidates.push_back(best_i);

  double best_v = avg[best_i], best_x = grid_[best_i];
  auto A = [this](double x) { return average(x); };
  for (std::size_t i : candidates) {
    double a = grid_[i == 0 ? 0 : i - 1];
    double b = grid_[std::min(i + 1, n - 1)];
    if (!(b > a)) continue;
    double arg = 0.0;
    double v = golden_optimize(A, a, b, want_max, &arg);
    if (better(v, best_v)) {
      best_v = v;
      best_x = arg;
    }
  }

  out.value = best_v;
  out.where = best_x;
  out.at_one = std::fabs(best_x - 1.0) <= 1e-9;

  double osc_bump = 0.0;
  if (zero_limit_.status == LimitStatus::Converged) {
    if (better(zero_limit_.value, out.value)) {
      out.value = zero_limit_.value;
      out.where = 0.0;
      out.at_zero_limit = true;
      out.at_one = false;
    }
  } else if (zero_limit_.status == LimitStatus::Diverged) {
    if (better(zero_limit_.value, out.value)) {
      out.value = zero_limit_.value;
      out.where = 0.0;
      out.at_zero_limit = true;
      out.at_one = false;
      out.infinite = true;
      out.err = kInf;
      return out;
    }
  } else {
    double cand = want_max ? zero_limit_.high : zero_limit_.low;
    if (better(cand, out.value)) {
      out.value = cand;
      out.where = 0.0;
      out.at_zero_limit = true;
      out.at_one = false;
      osc_bump = zero_limit_.high - zero_limit_.low;
    }
  }

  // Resolution estimate: redo the raw scan on every other grid point.
  double half_best = avg[0];
  for (std::size_t i = 0; i < n; i += 2)
    if (better(avg[i], half_best)) half_best = avg[i];
  out.err = 2.0 * std::fabs(out.value - half_best) + 10.0 * quad_err_ + osc_bump + 1e-12;
  return out;
}

AverageStats average_stats(const Model& m, const AverageFunction& Af, const AverageFunction& Ag,
                           const AverageFunction& Apsi) {
  AverageStats s;
  s.F0_detail = Af.supremum();
  s.F0 = s.F0_detail.value;
  s.err_F0 = s.F0_detail.err;
  s.G0_detail = Ag.infimum();
  s.G0 = s.G0_detail.value;
  s.err_G0 = s.G0_detail.err;
  s.K0_detail = Apsi.supremum();
  s.K0_infinite = s.K0_detail.infinite;
  s.K0 = s.K0_infinite ? kInf : s.K0_detail.value;
  s.err_K0 = s.K0_detail.err;

  double pm1 = m.p - 1.0;
  s.slope_detail = ladder_limit([&](double xi) {
    double v = m.psi(xi);
    return std::pow(std::max(v, 0.0), pm1);
  });
  switch (s.slope_detail.status) {
    case LimitStatus::Converged:
      s.ell_p = s.L_p = std::max(0.0, s.slope_detail.value);
      break;
    case LimitStatus::Diverged:
      s.ell_p = s.L_p = kInf;
      break;
    case LimitStatus::Oscillating:
      s.ell_p = std::max(0.0, s.slope_detail.low);
      s.L_p = std::max(0.0, s.slope_detail.high);
      s.slope_interval = true;
      break;
  }

  s.f0 = m.f.value_at_zero();
  s.g0 = m.g.value_at_zero();

  auto cross_check = [&s](const char* name, double numeric, double override_v, bool numeric_solid) {
    double tol = 1e-4 * std::max(1.0, std::fabs(override_v));
    if (numeric_solid && std::fabs(numeric - override_v) > tol) {
      s.warnings.push_back(std::string(name) + " override " + std::to_string(override_v) +
                           " disagrees with numeric estimate " + std::to_string(numeric));
    }
  };
  if (m.limits.ell_p) {
    cross_check("ell_p", s.ell_p, *m.limits.ell_p,
                s.slope_detail.status == LimitStatus::Converged);
    if (s.slope_detail.status == LimitStatus::Diverged && std::isfinite(*m.limits.ell_p))
      s.warnings.push_back("ell_p override is finite but the ladder diverges");
    s.ell_p = *m.limits.ell_p;
  }
  if (m.limits.L_p) {
    cross_check("L_p", s.L_p, *m.limits.L_p, s.slope_detail.status == LimitStatus::Converged);
    s.L_p = *m.limits.L_p;
  }
  s.L_p = std::max(s.L_p, s.ell_p);
  if (m.limits.f0) {
    cross_check("f0", s.f0, *m.limits.f0, true);
    s.f0 = *m.limits.f0;
  }
  if (m.limits.g0) {
    cross_check("g0", s.g0, *m.limits.g0, true);
    s.g0 = *m.limits.g0;
  }
  return s;
}

AverageStats average_stats(const Model& m) {
  std::vector<double> grid = build_scan_grid(m);
  AverageFunction Af(m.f, grid);
  AverageFunction Ag(m.g, grid);
  AverageFunction Apsi(m.psi, grid, true, true);
  return average_stats(m, Af, Ag, Apsi);
}

double integral_average(const PiecewiseFn& phi, double xi) {
  if (!(xi > 0.0 && xi <= 1.0)) throw NumericalError("average abscissa must lie in (0, 1]");
  quad::Options opt;
  opt.abs_tol = 1e-13;
  opt.rel_tol = 1e-11;
  opt.panel_budget = 4096;
  std::vector<double> bounds;
  for (double c : phi.cuts())
    if (c < xi) bounds.push_back(c);
  bounds.push_back(xi);
  double total = 0.0, lo = 0.0;
  for (double hi : bounds) {
    auto r = quad::integrate_improper([&phi](double x) { return phi(x); }, lo, hi, lo == 0.0,
                                      hi == 1.0, opt);
    if (r.diverged || !r.converged)
      throw NumericalError("average quadrature did not converge on (0, " + std::to_string(xi) +
                           ")");
    total += r.value;
    lo = hi;
  }
  return total / xi;
}

}  // namespace tws
