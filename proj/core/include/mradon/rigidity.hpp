#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mradon/geometry.hpp"
#include "mradon/vec.hpp"

namespace mradon {

// k-th slice moment integral Rchi(w, t) t^k dt (a degree-k polynomial in w
// for every body; the rigidity diagnostics instead test the factored arch
// model, which is polynomial only when the scalar profile is flat).
double moment(const ConvexDomain& dom, const Vec3& w, int k, int modes = 257);

// Relative failure of the arch-model moment
//   M^(w) = psi_0(w) * C(w) * integral (1-u^2)^{(n-1)/2} (B + C u)^k du
// to be a homogeneous degree-k polynomial in w, over n_dirs directions.
// psi_0 is the flat part of the profile; the residual is the l2 misfit of the
// best polynomial divided by max(||M^||_2, |mass| * halfspan^k).
double moment_residual(const ConvexDomain& dom, int k, int n_dirs = 64, int modes = 257);

// Least-squares center from the support midpoints B(w) ~ b.w; the residual is
// rms misfit over directions relative to the half-diameter. Exact zero misfit
// characterizes centrally symmetric bodies about b.
struct CenterEstimate {
  Vec3 center;
  double residual = 0.0;
};
CenterEstimate estimate_center(const ConvexDomain& dom, int n_dirs = 64);

// Least-squares symmetric form S with (recentred half-width)^2 ~ w.Sw.
// For an ellipsoid the fit is exact and the eigen-decomposition recovers
// squared semi-axes and principal directions. A non-positive-definite fit is
// refused (the width data is not that of a convex quadratic body).
struct QuadraticEstimate {
  std::array<double, 9> form{};       // row-major symmetric S (z row/col zero in 2D)
  std::array<double, 3> semi_axes{};  // descending
  std::array<double, 9> axes{};       // rows: unit principal directions
  double residual = 0.0;              // rms misfit relative to halfspan^2
};
QuadraticEstimate estimate_quadratic_form(const ConvexDomain& dom, int n_dirs = 64);

// Log-log slope of the slice volume against distance from the tangency
// offset h_+(w), over a dyadic ladder of depths. Regular (curved) tangency
// gives (n-1)/2. Directions whose tangency point has Gaussian curvature
// below 1e-6 are refused as irregular instead of returning a bogus slope.
double endpoint_exponent(const ConvexDomain& dom, const Vec3& w);

struct RigidityReport {
  enum class Verdict { ellipsoid_consistent, non_ellipsoid, inconclusive };

  CenterEstimate center;
  QuadraticEstimate quadratic;
  bool quadratic_fit_ok = true;
  std::vector<double> moment_residuals;  // k = 0..3
  double kernel_signal = 0.0;            // sup |kernel| * diam^{2(n-1)}, scaled to the
                                         // planar p=4 superellipse reference
  std::vector<double> exponents;         // per probe direction (NaN where refused)
  int irregular_directions = 0;
  double exponent_deviation = 0.0;       // max |slope - (n-1)/2| over regular probes
  Verdict verdict = Verdict::inconclusive;
  std::vector<std::string> reasons;
};

// Runs every diagnostic and combines them: all signals below their thresholds
// gives ellipsoid_consistent, any signal at 10x its threshold gives
// non_ellipsoid, anything in between stays inconclusive.
RigidityReport rigidity_report(const ConvexDomain& dom, int n_dirs = 64,
                               std::uint64_t seed = 20240901ull);

}  // namespace mradon
