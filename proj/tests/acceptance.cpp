// Acceptance gate: eight end-to-end checks with pinned tolerances. Each
// prints exactly one PASS/FAIL line; the exit code is the failure count.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "tws/averages.hpp"
#include "tws/bvp.hpp"
#include "tws/errors.hpp"
#include "tws/expr.hpp"
#include "tws/model.hpp"
#include "tws/piecewise.hpp"
#include "tws/profile.hpp"
#include "tws/regularization.hpp"
#include "tws/wave_speed.hpp"

namespace {

int failures = 0;

void verdict_line(int idx, bool ok, const std::string& what) {
  std::printf("%s  criterion %d: %s\n", ok ? "PASS" : "FAIL", idx, what.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, pattern);
  std::vsnprintf(buf, sizeof buf, pattern, ap);
  va_end(ap);
  return buf;
}

tws::Model load_model(const std::string& name) {
  std::ifstream in(std::string(TWS_MODELS_DIR) + "/" + name);
  std::ostringstream ss;
  ss << in.rdbuf();
  return tws::parse_model(ss.str());
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// sup |c g - f| over (0, 1); piece-end sampling is exact for affine pieces.
double sup_drift(const tws::Model& m, double c) {
  std::vector<double> bps{0.0, 1.0};
  for (double t : m.f.cuts()) bps.push_back(t);
  for (double t : m.g.cuts()) bps.push_back(t);
  std::sort(bps.begin(), bps.end());
  double sup = 0.0;
  for (std::size_t i = 0; i + 1 < bps.size(); ++i) {
    if (bps[i + 1] - bps[i] < 1e-12) continue;
    for (double x : {bps[i] + 1e-9, 0.5 * (bps[i] + bps[i + 1]), bps[i + 1] - 1e-9})
      sup = std::max(sup, std::abs(c * m.g(x) - m.f(x)));
  }
  return sup;
}

// 1. Classic logistic model: both closed-form speed bounds equal 2 and the
// bisection reproduces it, in bounded time.
void criterion_1() {
  auto t0 = std::chrono::steady_clock::now();
  tws::Model m = load_model("fisher.toml");
  tws::SpeedSearch s = tws::find_c_star(m, 1e-4);
  double dt = seconds_since(t0);
  bool ok = !s.refused && s.found && s.bounds.lower_available && s.bounds.upper_available &&
            std::abs(s.bounds.lower - 2.0) < 1e-6 && std::abs(s.bounds.upper - 2.0) < 1e-6 &&
            std::abs(s.c_star - 2.0) < 1e-3 && dt < 10.0;
  verdict_line(1, ok,
               fmt("logistic speed bounds pinch at 2 (lower %.3e, upper %.3e off) and the "
                   "search returns %.6f in %.2f s",
                   std::abs(s.bounds.lower - 2.0), std::abs(s.bounds.upper - 2.0), s.c_star, dt));
}

// 2. Degenerate diffusion model: the first-order solution matches the exact
// parabola, the critical speed matches 1/sqrt(2), and it sits inside the
// reported bounds.
void criterion_2() {
  auto t0 = std::chrono::steady_clock::now();
  tws::Model m = load_model("degenerate_fisher.toml");
  tws::YSolution y = tws::solve_bvp(m, oracle::degenerate_c);
  double sup = 0.0;
  for (int i = 10; i <= 990; ++i) {
    double xi = i / 1000.0;
    sup = std::max(sup, std::abs(y.value(xi) - oracle::degenerate_y(xi)));
  }
  tws::SpeedSearch s = tws::find_c_star(m, 1e-4);
  double dt = seconds_since(t0);
  double upper_exact = std::sqrt(3.0) / 2.0;
  bool ok = y.verdict == tws::Verdict::Admissible && sup < 1e-4 && s.found &&
            std::abs(s.c_star - oracle::degenerate_c) < 1e-3 && s.bounds.lower < 1e-4 &&
            s.bounds.upper_available && std::abs(s.bounds.upper - upper_exact) < 1e-6 &&
            s.bounds.lower <= s.c_star && s.c_star <= s.bounds.upper && dt < 10.0;
  verdict_line(2, ok,
               fmt("degenerate model solved to %.2e of the exact parabola, speed %.6f vs "
                   "0.707107, bounds [%.2e, %.6f] in %.2f s",
                   sup, s.c_star, s.bounds.lower, s.bounds.upper, dt));
}

// 3. Wave reconstruction of the degenerate model: sharp right edge at
// sqrt(2) ln 2, open left tail, profile matching the closed form, small
// integral-form residual.
void criterion_3() {
  tws::Model m = load_model("degenerate_fisher.toml");
  tws::YSolution y = tws::solve_bvp(m, oracle::degenerate_c);
  tws::WaveProfile prof = tws::reconstruct(m, y);
  double sup = 0.0;
  for (const auto& s : prof.samples)
    if (s.z >= -5.0) sup = std::max(sup, std::abs(s.v - oracle::degenerate_v(s.z)));
  double res = tws::residual_integral_form(m, oracle::degenerate_c, prof);
  bool ok = std::abs(prof.b_endpoint - oracle::degenerate_b()) < 1e-3 && prof.sharp_at_zero &&
            !prof.sharp_at_one && std::isinf(prof.a_endpoint) && prof.a_endpoint < 0 &&
            sup < 1e-4 && res < 1e-5;
  verdict_line(3, ok,
               fmt("sharp edge at %.6f vs 0.980258, left tail open, profile within %.2e of "
                   "the closed form, residual %.2e",
                   prof.b_endpoint, sup, res));
}

// 4. Certificates and the solver agree across speeds on the logistic model,
// and admissibility is monotone in the speed.
void criterion_4() {
  tws::Model m = load_model("fisher.toml");
  bool ok = true;
  for (double c : {0.0, 1.0, 1.9})
    ok = ok && tws::certify(m, c).verdict == tws::Existence::NotExists;
  for (double c : {2.1, 3.0, 10.0})
    ok = ok && tws::certify(m, c).verdict == tws::Existence::Exists;
  for (double c : {1.0, 1.9})
    ok = ok && tws::solve_bvp(m, c).verdict == tws::Verdict::Inadmissible;
  for (double c : {2.1, 3.0, 10.0})
    ok = ok && tws::solve_bvp(m, c).verdict == tws::Verdict::Admissible;
  int admissible = 0;
  bool inversion = false, seen = false;
  std::string chain;
  for (double c : {2.05, 2.5, 3.0, 5.0}) {
    tws::Verdict v = tws::solve_bvp(m, c).verdict;
    if (!chain.empty()) chain += ", ";
    chain += tws::to_string(v);
    if (v == tws::Verdict::Admissible) {
      ++admissible;
      seen = true;
    } else if (seen && v == tws::Verdict::Inadmissible) {
      inversion = true;
    }
  }
  ok = ok && !inversion && admissible == 4;
  verdict_line(4, ok,
               fmt("certificates refuse 0/1/1.9 and confirm 2.1/3/10, solver verdicts match, "
                   "chain above 2 stays admissible (%s)",
                   chain.c_str()));
}

// 5. Jump model: averaged drift extremes, speed bounds [2, 2.5], the certified
// positive floor, and the kink of the first-order solution at the jump.
void criterion_5() {
  tws::Model m = load_model("fisher_heaviside.toml");
  tws::AverageStats st = tws::average_stats(m);
  tws::SpeedSearch s = tws::find_c_star(m, 1e-3);
  bool ok = std::abs(st.F0 - 0.5) < 1e-4 && std::abs(s.bounds.lower - 2.0) < 1e-6 &&
            s.bounds.upper_available && std::abs(s.bounds.upper - 2.5) < 1e-6 && s.found &&
            s.c_star >= s.bounds.lower - 1e-6 && s.c_star <= s.bounds.upper + s.tol + 1e-6;
  double jump_err = 1e9, floor_margin = 1e9, cont_gap = 0.0;
  for (double c : {s.c_star + 0.1, s.c_star + 0.5}) {
    tws::YSolution y = tws::solve_bvp(m, c);
    ok = ok && y.verdict == tws::Verdict::Admissible;
    double delta = tws::lower_bound_delta(m, c, 0.05);
    ok = ok && delta > 0.0;
    for (int i = 0; i <= 400; ++i) {
      double xi = 0.1 + 0.8 * i / 400.0;
      floor_margin = std::min(floor_margin, y.value(xi) - delta);
    }
    cont_gap = std::max(cont_gap, std::abs(y.value(0.5 + 1e-4) - y.value(0.5 - 1e-4)));
    std::size_t k = 0;
    for (std::size_t i = 1; i < y.xi.size(); ++i)
      if (std::abs(y.xi[i] - 0.5) < std::abs(y.xi[k] - 0.5)) k = i;
    if (std::abs(y.xi[k] - 0.5) < 1e-6)
      jump_err = std::min(jump_err, std::abs((y.yd_right[k] - y.yd_left[k]) + 1.0));
  }
  ok = ok && floor_margin >= -1e-12 && cont_gap < 5e-3 && jump_err < 1e-3;
  verdict_line(5, ok,
               fmt("jump model: F0 %.6f, bounds [%.4f, %.4f] hold the speed %.4f, solution "
                   "clears the certified floor by %.2e, slope jump off by %.1e",
                   st.F0, s.bounds.lower, s.bounds.upper, s.c_star, floor_margin, jump_err));
}

// 6. Ramped step functions: running-average extrema of the regularized
// functions converge to the unregularized targets through the default ladder.
void criterion_6() {
  tws::PiecewiseFn drop({{0.0, 0.5, tws::parse_expr("2.2")}, {0.5, 1.0, tws::parse_expr("1.2")}});
  tws::PiecewiseFn rise({{0.0, 0.5, tws::parse_expr("0")}, {0.5, 1.0, tws::parse_expr("1")}});
  auto ladder = tws::default_ladder(tws::eps_bar({0.5}), 10);
  tws::RegularizationReport ri = tws::gamma_limit_check(drop, {0.5}, ladder, tws::GammaMode::Inf);
  tws::RegularizationReport rs = tws::gamma_limit_check(rise, {0.5}, ladder, tws::GammaMode::Sup);
  bool ok = std::abs(ri.limit_inf_avg_H - 1.7) < 1e-6 &&
            std::abs(ri.inf_avg_H.back() - 1.7) < 1e-3 && ri.final_gap_ok &&
            std::abs(rs.limit_sup_avg_psi - 0.5) < 1e-6 &&
            std::abs(rs.sup_avg_psi.back() - 0.5) < 1e-3 && rs.final_gap_ok;
  verdict_line(6, ok,
               fmt("ramped averages land on their targets: inf %.6f vs 1.7 (gap %.1e), sup "
                   "%.6f vs 0.5 (gap %.1e)",
                   ri.inf_avg_H.back(), ri.gaps.back(), rs.sup_avg_psi.back(), rs.gaps.back()));
}

// 7. Vanishing ramp width on the jump model: the regularized first-order
// solutions converge to the unregularized one.
void criterion_7() {
  tws::Model m = load_model("fisher_heaviside.toml");
  double bar = tws::eps_bar(m.theta);
  std::vector<double> ladder;
  for (int k = 2; k <= 8; ++k) ladder.push_back(bar / std::pow(2.0, k));
  tws::RegularizationReport r = tws::solution_convergence_study(m, 3.0, ladder);
  bool shrinks = r.y_distance.size() == ladder.size() && !r.y_distance.empty();
  for (std::size_t i = 0; shrinks && i < r.y_distance.size(); ++i)
    shrinks = std::isfinite(r.y_distance[i]);
  bool ok = shrinks && r.y_distance.back() < 1e-3 &&
            r.y_distance.back() <= 0.25 * r.y_distance.front();
  verdict_line(7, ok,
               fmt("ramped solutions approach the sharp one: distance %.2e at width %.1e down "
                   "from %.2e at %.1e",
                   r.y_distance.back(), ladder.back(), r.y_distance.front(), ladder.front()));
}

// 8. Seeded random well-behaved models: bounds bracket the found speed; at a
// supercritical speed the solution is admissible, nonnegative, below the
// drift cone, slope-root and integral certificates hold, the seeded start is
// inside the slope band, and halved seeding moves the solution by < 1e-4.
void criterion_8() {
  std::mt19937 rng(20260822u);
  const int draws = 50;
  int admissible = 0, searched = 0;
  double worst_gap = 0.0, worst_cone = -1e300;
  bool ok = true;
  std::string first_bad;
  auto note = [&](const std::string& s) {
    ok = false;
    if (first_bad.empty()) first_bad = s;
  };
  for (int t = 0; t < draws; ++t) {
    tws::Model m;
    try {
      m = tws::parse_model(oracle::random_model_toml(rng));
    } catch (const std::exception& e) {
      note(fmt("draw %d rejected: %s", t, e.what()));
      continue;
    }
    tws::SpeedSearch s;
    try {
      s = tws::find_c_star(m, 1e-3);
    } catch (const std::exception& e) {
      note(fmt("draw %d search threw: %s", t, e.what()));
      continue;
    }
    if (s.refused) {
      note(fmt("draw %d refused: %s", t, s.refusal.c_str()));
      continue;
    }
    if (!s.found) {
      note(fmt("draw %d: no speed found", t));
      continue;
    }
    ++searched;
    if (s.c_star < s.bounds.lower - 1e-6 ||
        (s.bounds.upper_available && s.c_star > s.bounds.upper + s.tol + 1e-6))
      note(fmt("draw %d: speed %.4f escapes bounds", t, s.c_star));
    double c = s.c_star + 0.5;
    tws::YSolution y;
    try {
      y = tws::solve_bvp(m, c);
    } catch (const std::exception& e) {
      note(fmt("draw %d solve threw: %s", t, e.what()));
      continue;
    }
    if (y.verdict != tws::Verdict::Admissible) continue;
    ++admissible;
    tws::SlopeRoots sr = tws::slope_roots(m, c);
    if (sr.count < 1 || sr.min_eta > 1e-9) note(fmt("draw %d: slope roots missing", t));
    if (!tws::necessary_integral(m, c).holds) note(fmt("draw %d: necessary integral fails", t));
    double cone = sup_drift(m, c);
    for (std::size_t i = 0; i < y.xi.size(); ++i) {
      if (y.y[i] < -1e-12) note(fmt("draw %d: negative value %.2e", t, y.y[i]));
      double slack = y.y[i] - y.xi[i] * cone;
      worst_cone = std::max(worst_cone, slack);
      if (slack > 1e-9) note(fmt("draw %d: value above the drift cone by %.2e", t, slack));
    }
    double band_tol = 0.05 * (std::abs(y.slope_band_hi) + 1.0);
    if (y.slope_at_zero < y.slope_band_lo - band_tol ||
        y.slope_at_zero > y.slope_band_hi + band_tol)
      note(fmt("draw %d: start slope %.4f outside band [%.4f, %.4f]", t, y.slope_at_zero,
               y.slope_band_lo, y.slope_band_hi));
    double gap = tws::seed_halving_gap(m, c);
    worst_gap = std::max(worst_gap, gap);
    if (gap >= 1e-4) note(fmt("draw %d: halved seeding moved the solution %.2e", t, gap));
  }
  if (admissible < 40) note(fmt("only %d/%d draws admissible", admissible, draws));
  verdict_line(8, ok,
               ok ? fmt("%d/%d seeded draws searched, %d admissible; cone slack %.1e, worst "
                        "seed-halving gap %.1e",
                        searched, draws, admissible, worst_cone, worst_gap)
                  : first_bad);
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  std::printf("%d/8 criteria passed\n", 8 - failures);
  return failures;
}
