#pragma once

#include <limits>
#include <vector>

#include "tws/bvp.hpp"
#include "tws/model.hpp"

namespace tws {

struct ProfileSample {
  double z = 0.0;
  double v = 0.0;      // front height, strictly decreasing in z
  double phi_v = 0.0;  // flux d(v) |v'|^(p-2) v', negative between the ends
};

// Monotone front recovered from a reduced solution. The moving frame is
// anchored so v(0) = 1/2; v lives on (a_endpoint, b_endpoint) and extends by
// the constant 1 to the left and 0 to the right of any finite end.
struct WaveProfile {
  std::vector<ProfileSample> samples;  // z strictly increasing
  double a_endpoint = -std::numeric_limits<double>::infinity();  // where v reaches 1
  double b_endpoint = std::numeric_limits<double>::infinity();   // where v reaches 0
  bool sharp_at_one = false;   // a_endpoint finite: 1 is attained at a corner
  bool sharp_at_zero = false;  // b_endpoint finite: 0 is attained at a corner
  std::vector<double> kink_points;  // images of the diffusion jump set, plus finite ends
};

// Inverts the arc-length map z(v) built from the reduced solution by improper
// quadrature of (d/y)^(1/(p-1)), classifies both ends as attained or
// asymptotic, and samples (z, v, flux) on a uniform grid over the finite hull.
WaveProfile reconstruct(const Model& m, const YSolution& y, int z_samples = 2048);

// Sup over adjacent sample pairs of the defect in the conservation identity
// flux(z2) - flux(z1) + int_{v1}^{v2} (c g - f) + int_{z1}^{z2} h(v) dz = 0.
double residual_integral_form(const Model& m, double c, const WaveProfile& prof);

}  // namespace tws
