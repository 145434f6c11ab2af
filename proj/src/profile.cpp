#include "tws/profile.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <vector>

#include "tws/errors.hpp"
#include "tws/quadrature.hpp"

namespace tws {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Local power-law extension of the reduced solution beyond its mesh, matched
// to the one-sided log slope at the end node so the tail keeps the computed
// approach order instead of defaulting to linear.
struct TailModel {
  double x_lo, y_lo, alpha_lo;
  double x_hi, y_hi, alpha_hi;
  const YSolution* sol;

  explicit TailModel(const YSolution& s) : sol(&s) {
    x_lo = s.xi.front();
    y_lo = s.y.front();
    x_hi = s.xi.back();
    y_hi = s.y.back();
    if (!(y_lo > 0.0) || !(y_hi > 0.0))
      throw NumericalError("flux vanishes at a mesh end; the height map is not invertible");
    alpha_lo = std::clamp(x_lo * s.yd_right.front() / y_lo, 0.25, 8.0);
    alpha_hi = std::clamp((1.0 - x_hi) * -s.yd_left.back() / y_hi, 0.25, 8.0);
  }

  double operator()(double t) const {
    if (t < x_lo) return y_lo * std::pow(t / x_lo, alpha_lo);
    if (t > x_hi) return at_dist_one(1.0 - t);
    return sol->value(t);
  }

  // tail value as a function of the distance s to 1, safe for s below 1 ulp
  double at_dist_one(double s) const { return y_hi * std::pow(s / (1.0 - x_hi), alpha_hi); }
};

struct Tail {
  bool finite;
  double total;
};

// Decade refinement toward an end of (0, 1): the improper tail is attained
// when the per-decade increments die out, asymptotic when they persist. The
// integrand is parameterized by the distance to the endpoint so the ladder
// stays meaningful below one ulp of the abscissa.
Tail classify_tail(const std::function<double(double)>& G, double from, int toward) {
  double total = 0.0, prev = kInf, seg = 0.0;
  for (int k = 1; k <= 12; ++k) {
    double hi_d = from * std::pow(10.0, -(k - 1));
    double lo_d = from * std::pow(10.0, -k);
    seg = 0.0;
    for (int j = 0; j < 4; ++j) {
      double a_d = lo_d + (hi_d - lo_d) * j / 4.0;
      double b_d = lo_d + (hi_d - lo_d) * (j + 1) / 4.0;
      seg += quad::gauss7(G, a_d, b_d);
    }
    total += seg;
    if (k > 1 && seg > prev * 4.0 && seg > 1.0) return {false, total};  // hard blowup
    prev = seg;
  }
  if (seg < 1e-8) return {true, total};
  if (seg > 1e-6 && seg >= 0.5 * prev) return {false, total};
  std::ostringstream os;
  os << "tail classification toward " << toward << " ran out of refinements (last increment "
     << seg << ")";
  throw NumericalError(os.str());
}

}  // namespace

WaveProfile reconstruct(const Model& m, const YSolution& y, int z_samples) {
  if (y.verdict != Verdict::Admissible)
    throw NumericalError("profile reconstruction needs an admissible reduced solution");
  if (z_samples < 2) throw ConfigError("profile grid needs at least two samples");

  TailModel yext(y);
  double q = m.inv_pm1();
  auto F = [&](double t) { return std::pow(std::max(m.d(t), 0.0) / yext(t), q); };

  // Arc-length nodes: the solution mesh (which carries every coefficient
  // breakpoint) subdivided, plus the anchor height 1/2.
  std::vector<double> nodes;
  nodes.reserve(4 * y.xi.size());
  for (std::size_t i = 0; i + 1 < y.xi.size(); ++i) {
    double a = y.xi[i], b = y.xi[i + 1];
    for (int j = 0; j < 4; ++j) nodes.push_back(a + (b - a) * j / 4.0);
  }
  nodes.push_back(y.xi.back());
  nodes.push_back(0.5);
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end(),
                          [](double u, double v) { return v - u <= 1e-15; }),
              nodes.end());

  std::vector<double> cum(nodes.size(), 0.0);
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    double inc = quad::gauss7(F, nodes[i], nodes[i + 1]);
    if (!(inc > 0.0))
      throw NumericalError("the height map is not strictly monotone; the input is unusable");
    cum[i + 1] = cum[i] + inc;
  }
  std::size_t anchor =
      std::lower_bound(nodes.begin(), nodes.end(), 0.5 - 1e-12) - nodes.begin();
  std::vector<double> w(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) w[i] = -(cum[i] - cum[anchor]);

  WaveProfile prof;
  auto G1 = [&](double s) {
    return std::pow(std::max(m.d(std::max(1.0 - s, 0.0)), 0.0) / yext.at_dist_one(s), q);
  };
  Tail zero_tail = classify_tail(F, nodes.front(), 0);
  Tail one_tail = classify_tail(G1, 1.0 - nodes.back(), 1);
  prof.sharp_at_zero = zero_tail.finite;
  prof.sharp_at_one = one_tail.finite;
  prof.b_endpoint = zero_tail.finite ? w.front() + zero_tail.total : kInf;
  prof.a_endpoint = one_tail.finite ? w.back() - one_tail.total : -kInf;

  for (double gamma : m.d.discontinuities()) {
    std::size_t j = std::lower_bound(nodes.begin(), nodes.end(), gamma - 1e-12) - nodes.begin();
    if (j < nodes.size()) prof.kink_points.push_back(w[j]);
  }
  if (prof.sharp_at_one) prof.kink_points.push_back(prof.a_endpoint);
  if (prof.sharp_at_zero) prof.kink_points.push_back(prof.b_endpoint);
  std::sort(prof.kink_points.begin(), prof.kink_points.end());

  double z_hi = prof.sharp_at_zero ? prof.b_endpoint - 1e-3 : w.front();
  double z_lo = prof.sharp_at_one ? prof.a_endpoint + 1e-3 : w.back();
  if (!(z_hi > z_lo)) throw NumericalError("profile hull is empty after end clipping");

  prof.samples.resize(static_cast<std::size_t>(z_samples));
  for (int i = 0; i < z_samples; ++i) {
    double z = z_lo + (z_hi - z_lo) * i / (z_samples - 1);
    // w decreases with height; invert by bracketing then linear interpolation
    std::size_t j =
        std::lower_bound(w.begin(), w.end(), z, std::greater<double>()) - w.begin();
    double v;
    if (j == 0) {
      v = nodes.front();
    } else if (j == w.size()) {
      v = nodes.back();
    } else {
      double t = (w[j - 1] - z) / (w[j - 1] - w[j]);
      v = nodes[j - 1] + t * (nodes[j] - nodes[j - 1]);
    }
    prof.samples[static_cast<std::size_t>(i)] = {z, v, -y.value(v)};
  }
  return prof;
}

double residual_integral_form(const Model& m, double c, const WaveProfile& prof) {
  PiecewiseFn sc = speed_combination(m, c);
  auto sc_eval = [&](double x) { return sc(x); };
  std::vector<double> h_cuts = m.h.cuts();
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < prof.samples.size(); ++i) {
    const ProfileSample& s1 = prof.samples[i];
    const ProfileSample& s2 = prof.samples[i + 1];
    double conv = 0.0;
    if (s1.v != s2.v) {
      double lo = std::min(s1.v, s2.v), hi = std::max(s1.v, s2.v);
      double I = quad::integrate(sc_eval, lo, hi).value;
      conv = s2.v >= s1.v ? I : -I;
    }
    // height is linear within a pair; split the z quadrature where that
    // linear height crosses a reaction breakpoint
    std::vector<double> zs{s1.z};
    if (s1.v != s2.v) {
      for (double g : h_cuts) {
        double t = (s1.v - g) / (s1.v - s2.v);
        if (t > 1e-12 && t < 1.0 - 1e-12) zs.push_back(s1.z + t * (s2.z - s1.z));
      }
    }
    zs.push_back(s2.z);
    std::sort(zs.begin(), zs.end());
    double react = 0.0;
    auto hv = [&](double z) {
      double t = (z - s1.z) / (s2.z - s1.z);
      return m.h(s1.v + t * (s2.v - s1.v));
    };
    for (std::size_t k = 0; k + 1 < zs.size(); ++k)
      react += quad::gauss7(hv, zs[k], zs[k + 1]);
    worst = std::max(worst, std::fabs(s2.phi_v - s1.phi_v + conv + react));
  }
  return worst;
}

}  // namespace tws
