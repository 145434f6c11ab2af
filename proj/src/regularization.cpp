#include "tws/regularization.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <string>
#include <utility>

#include "tws/averages.hpp"
#include "tws/bvp.hpp"
#include "tws/errors.hpp"
#include "tws/expr.hpp"

namespace tws {

namespace {

constexpr double kTie = 1e-12;  // abscissa identity tolerance

std::vector<double> clean_points(std::vector<double> A) {
  std::sort(A.begin(), A.end());
  A.erase(std::unique(A.begin(), A.end(),
                      [](double x, double y) { return y - x <= kTie; }),
          A.end());
  for (double g : A) {
    if (!(g > 0.0) || !(g < 1.0)) {
      std::ostringstream os;
      os << "ramp point " << g << " is outside the open unit interval";
      throw ConfigError(os.str());
    }
  }
  return A;
}

ExprPtr line_through(double x0, double v0, double x1, double v1) {
  double slope = (v1 - v0) / (x1 - x0);
  return ex::add(ex::constant(v0),
                 ex::mul(ex::constant(slope), ex::sub(ex::var(), ex::constant(x0))));
}

// Same recipe as the model-wide scan grid, anchored on one function's cuts.
std::vector<double> scan_grid_for(const PiecewiseFn& phi) {
  constexpr int kHalvings = 12;
  constexpr int kPerSub = 512;
  std::vector<double> pts;
  for (int k = 0; k <= kHalvings; ++k) pts.push_back(1e-2 * std::ldexp(1.0, -k));
  std::vector<double> bounds{0.0};
  for (double c : phi.cuts()) bounds.push_back(c);
  bounds.push_back(1.0);
  for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
    double a = bounds[i], b = bounds[i + 1];
    for (int j = 1; j <= kPerSub; ++j) pts.push_back(a + (b - a) * j / kPerSub);
  }
  for (double c : phi.cuts()) pts.push_back(c);
  pts.push_back(1.0);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](double x, double y) { return y - x <= 1e-15; }),
            pts.end());
  std::erase_if(pts, [](double x) { return x <= 0.0 || x > 1.0; });
  return pts;
}

double extreme_of_average(const AverageFunction& fn, GammaMode mode, const char* what) {
  if (fn.divergent())
    throw HypothesisError("endpoint average",
                          std::string("the running average of ") + what +
                              " diverges toward the origin",
                          0.0);
  const ExtremeResult& ex_res =
      mode == GammaMode::Inf ? fn.infimum() : fn.supremum();
  if (ex_res.infinite)
    throw HypothesisError("endpoint average",
                          std::string("the running average of ") + what +
                              " is unbounded on the unit interval",
                          ex_res.where);
  return ex_res.value;
}

void check_ladder(const std::vector<double>& ladder) {
  if (ladder.empty()) throw ConfigError("empty ramp ladder");
  for (std::size_t i = 0; i + 1 < ladder.size(); ++i)
    if (!(ladder[i + 1] < ladder[i]))
      throw ConfigError("ramp ladder must be strictly decreasing");
}

}  // namespace

double eps_bar(const std::vector<double>& A) {
  std::vector<double> pts = clean_points(A);
  pts.insert(pts.begin(), 0.0);
  pts.push_back(1.0);
  double gap = 1.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) gap = std::min(gap, pts[i + 1] - pts[i]);
  return 0.5 * gap;
}

double eps_hat(const std::vector<double>& A, double a, double b) {
  double cap = eps_bar(A);
  for (double g : A) {
    cap = std::min(cap, std::fabs(g - a));
    cap = std::min(cap, std::fabs(g - b));
  }
  return cap;
}

std::vector<double> default_ladder(double bar, int count) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  double v = bar;
  for (int k = 0; k < count; ++k) {
    v *= 0.5;
    out.push_back(v);
  }
  return out;
}

PiecewiseFn eps_regularize(const PiecewiseFn& phi, const std::vector<double>& A, double eps) {
  std::vector<double> pts = clean_points(A);
  double bar = eps_bar(pts);
  if (!(eps > 0.0) || !(eps < bar)) {
    std::ostringstream os;
    os << "ramp half-width " << eps << " is outside (0, " << bar
       << "), half the smallest gap between ramp points and the domain ends";
    throw NumericalError(os.str());
  }
  for (double j : phi.discontinuities()) {
    bool covered = std::any_of(pts.begin(), pts.end(),
                               [j](double g) { return std::fabs(g - j) <= kTie; });
    if (!covered) {
      std::ostringstream os;
      os << "ramp point set omits the jump at " << j;
      throw ConfigError(os.str());
    }
  }
  if (pts.empty()) return phi;

  std::vector<Piece> out;
  auto emit_fragments = [&](double lo, double hi) {
    for (std::size_t i = 0; i < phi.piece_count(); ++i) {
      const Piece& p = phi.piece(i);
      double a = std::max(p.lo, lo), b = std::min(p.hi, hi);
      if (b - a > kTie) out.push_back({a, b, p.expr});
    }
  };
  double pos = 0.0;
  for (double g : pts) {
    double lo = g - eps, hi = g + eps;
    emit_fragments(pos, lo);
    out.push_back({lo, hi, line_through(lo, phi(lo), hi, phi(hi))});
    pos = hi;
  }
  emit_fragments(pos, 1.0);
  return PiecewiseFn(std::move(out));
}

PiecewiseFn truncate_boundary(const PiecewiseFn& psi_eps, double eps) {
  if (!(eps > 0.0) || !(eps < 0.5)) {
    std::ostringstream os;
    os << "truncation width " << eps << " is outside (0, 0.5)";
    throw NumericalError(os.str());
  }
  if (!psi_eps.discontinuities().empty())
    throw ConfigError("boundary truncation needs a continuous input");

  ExprPtr hat_left = ex::mul(ex::constant(psi_eps(eps) / eps), ex::var());
  ExprPtr hat_right = ex::mul(ex::constant(psi_eps(1.0 - eps) / eps),
                              ex::sub(ex::constant(1.0), ex::var()));
  std::vector<Piece> out;
  for (std::size_t i = 0; i < psi_eps.piece_count(); ++i) {
    const Piece& p = psi_eps.piece(i);
    double zones[4] = {p.lo, std::clamp(eps, p.lo, p.hi), std::clamp(1.0 - eps, p.lo, p.hi),
                       p.hi};
    for (int z = 0; z < 3; ++z) {
      double a = zones[z], b = zones[z + 1];
      if (b - a <= kTie) continue;
      ExprPtr e = p.expr;
      if (b <= eps + kTie)
        e = ex::min(e, hat_left);
      else if (a >= 1.0 - eps - kTie)
        e = ex::min(e, hat_right);
      out.push_back({a, b, e});
    }
  }
  return PiecewiseFn(std::move(out));
}

PiecewiseFn kappa_tilde(const Model& m, double eps) {
  return truncate_boundary(eps_regularize(m.kappa, m.theta, eps), eps);
}

Model regularize_model(const Model& m, double eps) {
  Model r;
  r.p = m.p;
  r.p_prime = m.p_prime;
  r.f = eps_regularize(m.f, m.theta, eps);
  r.g = eps_regularize(m.g, m.theta, eps);
  r.h = eps_regularize(m.h, m.theta, eps);
  r.d = eps_regularize(m.d, m.theta, eps);
  double q = r.inv_pm1();
  r.kappa = PiecewiseFn::combine(r.d, r.h, [q](ExprPtr de, ExprPtr he) {
    return ex::mul(ex::pow(de, ex::constant(q)), he);
  });
  r.psi = r.kappa.map(
      [q](ExprPtr ke) { return ex::div(ke, ex::pow(ex::var(), ex::constant(q))); });
  std::set<double> cuts, jumps;
  for (const PiecewiseFn* fn : {&r.f, &r.g, &r.h, &r.d}) {
    for (double c : fn->cuts()) cuts.insert(c);
    for (double c : fn->discontinuities()) jumps.insert(c);
  }
  r.all_cuts.assign(cuts.begin(), cuts.end());
  r.theta.assign(jumps.begin(), jumps.end());
  r.reference.tag = m.reference.tag;
  std::ostringstream os;
  os << m.source_hash << "|ramp|" << eps;
  r.source_hash = fnv1a_hex(os.str());
  return r;
}

RegularizationReport gamma_limit_check(const PiecewiseFn& phi, const std::vector<double>& A,
                                       const std::vector<double>& ladder, GammaMode mode,
                                       double gap_tol) {
  check_ladder(ladder);
  RegularizationReport rep;
  rep.gap_tol = gap_tol;
  rep.epsilons = ladder;

  AverageFunction base(phi, scan_grid_for(phi), true, true);
  double target = extreme_of_average(base, mode, "the unregularized coefficient");
  std::vector<double>& column = mode == GammaMode::Inf ? rep.inf_avg_H : rep.sup_avg_psi;
  (mode == GammaMode::Inf ? rep.limit_inf_avg_H : rep.limit_sup_avg_psi) = target;

  for (double eps : ladder) {
    PiecewiseFn smoothed = eps_regularize(phi, A, eps);
    AverageFunction fn(smoothed, scan_grid_for(smoothed), true, true);
    double v = extreme_of_average(fn, mode, "a regularized coefficient");
    column.push_back(v);
    rep.gaps.push_back(std::fabs(v - target));
  }
  rep.final_gap_ok = rep.gaps.back() < gap_tol;
  return rep;
}

RegularizationReport solution_convergence_study(const Model& m, double c,
                                                const std::vector<double>& ladder) {
  check_ladder(ladder);
  RegularizationReport rep;
  rep.epsilons = ladder;

  YSolution base = solve_bvp(m, c);
  constexpr int kProbe = 257;
  for (double eps : ladder) {
    Model smoothed = regularize_model(m, eps);
    YSolution ye = solve_bvp(smoothed, c);
    double dist = 0.0;
    for (int i = 0; i < kProbe; ++i) {
      double x = 0.1 + 0.8 * i / (kProbe - 1);
      dist = std::max(dist, std::fabs(ye.value(x) - base.value(x)));
    }
    rep.y_distance.push_back(dist);
  }
  rep.final_gap_ok = rep.y_distance.back() < rep.gap_tol;
  return rep;
}

}  // namespace tws
