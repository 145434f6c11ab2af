#include "tws/wave_speed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tws/errors.hpp"

namespace tws {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::string to_string(Existence e) {
  switch (e) {
    case Existence::Exists: return "Exists";
    case Existence::NotExists: return "NotExists";
    default: return "Indeterminate";
  }
}

std::string to_string(CertReason r) {
  switch (r) {
    case CertReason::SlopeCondition: return "SlopeCondition";
    case CertReason::EllPInfinite: return "EllPInfinite";
    case CertReason::NecessaryIntegral: return "NecessaryIntegral";
    case CertReason::IntegralLowerSolution: return "IntegralLowerSolution";
    default: return "None";
  }
}

SpeedAnalyzer::SpeedAnalyzer(const Model& m)
    : m_(m),
      grid_(build_scan_grid(m_)),
      Af_(m_.f, grid_),
      Ag_(m_.g, grid_),
      Apsi_(m_.psi, grid_, true, true),
      stats_(average_stats(m_, Af_, Ag_, Apsi_)) {}

double SpeedAnalyzer::beta(double c) const {
  double best = c * stats_.g0 - stats_.f0;  // running average limit at 0+
  double bx = 0.0;
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    double v = c * Ag_.average_at(i) - Af_.average_at(i);
    if (v < best) {
      best = v;
      bx = grid_[i];
    }
  }
  if (bx > 0.0) {
    // Golden refinement between the neighbours of the best grid node.
    auto it = std::lower_bound(grid_.begin(), grid_.end(), bx);
    std::size_t i = it - grid_.begin();
    double lo = i > 0 ? grid_[i - 1] : grid_.front();
    double hi = i + 1 < grid_.size() ? grid_[i + 1] : grid_.back();
    auto val = [&](double x) { return c * Ag_.average(x) - Af_.average(x); };
    const double gr = 0.6180339887498949;
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = val(x1), f2 = val(x2);
    for (int k = 0; k < 60 && hi - lo > 1e-15; ++k) {
      if (f1 < f2) {
        hi = x2; x2 = x1; f2 = f1;
        x1 = hi - gr * (hi - lo); f1 = val(x1);
      } else {
        lo = x1; x1 = x2; f1 = f2;
        x2 = lo + gr * (hi - lo); f2 = val(x2);
      }
    }
    best = std::min(best, std::min(f1, f2));
  }
  return best;
}

double SpeedAnalyzer::beta_err(double c) const {
  double denom = grid_.front();
  return (Af_.quadrature_err() + std::fabs(c) * Ag_.quadrature_err()) / denom +
         1e-13 * (1.0 + std::fabs(c));
}

double SpeedAnalyzer::exist_threshold() const {
  if (stats_.K0_infinite || !std::isfinite(stats_.K0)) return kInf;
  return m_.p_prime * std::pow(m_.p - 1.0, 1.0 / m_.p) *
         std::pow(std::max(stats_.K0, 0.0), 1.0 / m_.p_prime);
}

SpeedBounds SpeedAnalyzer::bounds() const {
  SpeedBounds b;
  b.assumptions.g0_positive = stats_.g0 > 0.0;
  b.assumptions.G0_positive = stats_.G0 > 0.0;
  double prefix_min = 0.0;
  for (std::size_t i = 0; i < grid_.size(); ++i)
    prefix_min = std::min(prefix_min, Ag_.prefix_at(i));
  b.assumptions.prefix_g_nonnegative =
      prefix_min >= -10.0 * Ag_.quadrature_err() - 1e-13;

  if (!b.assumptions.g0_positive) {
    b.notes.push_back(
        "origin convection g(0+) <= 0: the half-line reduction needs positive "
        "convection at the origin; analyze the mirrored model with g -> -g, c -> -c");
    return b;
  }
  if (std::isfinite(stats_.ell_p)) {
    double thr = m_.p_prime * std::pow((m_.p - 1.0) * std::max(stats_.ell_p, 0.0), 1.0 / m_.p);
    b.lower = (stats_.f0 + thr) / stats_.g0;
    b.simple_lower = b.lower;
    b.lower_available = true;
  } else {
    b.notes.push_back("origin threshold infinite: no admissible speed at all");
    return b;
  }

  double R = exist_threshold();
  if (!std::isfinite(R)) {
    b.notes.push_back("averaged reaction supremum infinite: upper bound unavailable");
    return b;
  }
  if (b.assumptions.G0_positive) {
    b.simple_upper = (stats_.F0 + R) / stats_.G0;
    b.simple_upper_available = true;

    // Smallest c with beta(c) >= R. beta is strictly increasing here and the
    // closed-form bound already clears the threshold.
    double hi = b.simple_upper;
    double lo = hi - 1.0;
    double step = 1.0;
    int guard = 0;
    while (beta(lo) >= R && guard++ < 60) {
      step *= 2.0;
      lo -= step;
    }
    if (guard <= 60) {
      for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (lo + hi);
        (beta(mid) >= R ? hi : lo) = mid;
      }
      b.upper = hi;
      b.upper_available = true;
    } else {
      b.notes.push_back("monotone bracketing for the refined upper bound failed");
    }
  } else {
    b.notes.push_back(
        "averaged convection infimum not positive: closed-form upper bound unavailable");
  }
  return b;
}

Certificate SpeedAnalyzer::certify(double c) const {
  Certificate cert;
  cert.c = c;
  if (!std::isfinite(stats_.ell_p)) {
    cert.verdict = Existence::NotExists;
    cert.reason = CertReason::EllPInfinite;
    cert.notes.push_back("origin threshold infinite: the slope condition fails at every speed");
    return cert;
  }

  cert.slope_lhs = c * stats_.g0 - stats_.f0;
  cert.slope_rhs =
      m_.p_prime * std::pow((m_.p - 1.0) * std::max(stats_.ell_p, 0.0), 1.0 / m_.p);
  double interval_width = 0.0;
  if (stats_.slope_interval && std::isfinite(stats_.L_p)) {
    double hi_thr =
        m_.p_prime * std::pow((m_.p - 1.0) * std::max(stats_.L_p, 0.0), 1.0 / m_.p);
    interval_width = std::fabs(hi_thr - cert.slope_rhs);
  }
  cert.slope_margin =
      10.0 * interval_width + 1e-12 * (1.0 + std::fabs(cert.slope_lhs) + cert.slope_rhs);
  if (cert.slope_lhs < cert.slope_rhs - cert.slope_margin) {
    cert.verdict = Existence::NotExists;
    cert.reason = CertReason::SlopeCondition;
    return cert;
  }

  cert.beta = beta(c);
  cert.exist_threshold = exist_threshold();
  cert.exist_margin = 10.0 * beta_err(c) + 1e-12 * (1.0 + std::fabs(cert.beta));
  if (std::isfinite(stats_.L_p) && std::isfinite(cert.exist_threshold) &&
      cert.beta > cert.exist_threshold + cert.exist_margin) {
    cert.verdict = Existence::Exists;
    cert.reason = CertReason::IntegralLowerSolution;
    return cert;
  }

  IntegralCheck ni = necessary_integral(m_, c);
  cert.necessary_lhs = ni.lhs;
  cert.necessary_rhs = ni.rhs;
  cert.necessary_margin = ni.err;
  if (ni.lhs <= ni.rhs - ni.err) {
    cert.verdict = Existence::NotExists;
    cert.reason = CertReason::NecessaryIntegral;
    return cert;
  }

  cert.verdict = Existence::Indeterminate;
  return cert;
}

SpeedSearch SpeedAnalyzer::find_c_star(double tol, const SolveOptions& solve_opt) const {
  SpeedSearch out;
  out.tol = tol;
  out.bounds = bounds();

  if (!out.bounds.assumptions.g0_positive) {
    out.refused = true;
    out.refusal =
        "origin convection g(0+) <= 0: bisection on the half-line needs c g(0) - f(0) "
        "to control the origin; analyze the mirrored model with g -> -g, c -> -c";
    return out;
  }
  if (!out.bounds.assumptions.prefix_g_nonnegative) {
    out.refused = true;
    out.refusal =
        "running integral of g dips below zero: the half-line characterization of "
        "admissible speeds needs nonnegative g-averages, so the averaged comparison "
        "arguments behind the bracketing are not justified for this model";
    return out;
  }
  if (!out.bounds.lower_available) {
    out.notes.push_back("no admissible speed exists: origin threshold infinite");
    return out;
  }

  const double lower = out.bounds.lower;
  double lo = lower;
  double hi = 0.0;
  bool have_hi = false;

  double start = out.bounds.upper_available ? std::max(out.bounds.upper, lower)
                                            : lower;
  double cap = 1024.0 * ((out.bounds.upper_available ? out.bounds.upper : std::fabs(lower)) + 1.0);
  double step = std::max(tol, 1e-6 * (1.0 + std::fabs(start)));
  double cand = start;
  while (cand <= cap) {
    YSolution s = solve_bvp(m_, cand, solve_opt, &stats_);
    out.history.push_back({cand, s.verdict, lo, cand});
    if (s.verdict == Verdict::Admissible) {
      hi = cand;
      have_hi = true;
      break;
    }
    if (s.verdict == Verdict::Inadmissible) lo = std::max(lo, cand);
    else out.notes.push_back("indeterminate while searching for an admissible speed");
    cand += step;
    step *= 2.0;
  }
  if (!have_hi) {
    std::ostringstream os;
    os << "no admissible speed found below " << cap;
    throw NumericalError(os.str());
  }

  int iters = 0;
  while (hi - lo > tol && iters++ < 200) {
    double mid = 0.5 * (lo + hi);
    YSolution s = solve_bvp(m_, mid, solve_opt, &stats_);
    if (s.verdict == Verdict::Admissible) {
      hi = mid;
    } else if (s.verdict == Verdict::Inadmissible) {
      lo = mid;
    } else {
      hi = mid;
      out.notes.push_back("indeterminate verdict inside the bracket; shrinking from above");
    }
    out.history.push_back({mid, s.verdict, lo, hi});
  }

  out.found = true;
  out.bracket_lo = lo;
  out.bracket_hi = hi;
  out.c_star = 0.5 * (lo + hi);
  return out;
}

SpeedBounds bounds_c_star(const Model& m) { return SpeedAnalyzer(m).bounds(); }
Certificate certify(const Model& m, double c) { return SpeedAnalyzer(m).certify(c); }
SpeedSearch find_c_star(const Model& m, double tol) { return SpeedAnalyzer(m).find_c_star(tol); }

}  // namespace tws
