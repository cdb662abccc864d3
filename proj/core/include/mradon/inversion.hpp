#pragma once

#include <span>
#include <vector>

#include "mradon/forward.hpp"
#include "mradon/geometry.hpp"
#include "mradon/grid.hpp"
#include "mradon/transforms.hpp"
#include "mradon/vec.hpp"

namespace mradon {

// Chart of an interior pair: omega points from x0 toward x1 and s_star is the
// offset where the pair's perpendicular bisector meets that direction
// (equivalently, midpoint . omega).
struct PairChart {
  Vec3 omega;
  double s_star = 0.0;
};
PairChart pair_chart(const Vec3& x0, const Vec3& x1);

// Direct per-pair reconstruction-error kernel:
//   n=2:  d^2/ds^2 [ H Rchi ](omega, s_star) / |x1-x0|
//   n=3:  d^3/ds^3 [   Rchi ](omega, s_star) / |x1-x0|^2
// It vanishes identically when the domain is an ellipsoid; its size elsewhere
// measures the failure of the filtered backprojection to be exact.
double error_kernel(const ConvexDomain& dom, const Vec3& x0, const Vec3& x1, int modes = 513);

// Planar kernel with per-direction profiles precomputed on angular buckets
// over [0, pi) and blended linearly in angle at the pair's exact offset.
// Buckets whose profile fit does not converge (directions hugging
// zero-curvature boundary points) are bridged by angular interpolation from
// the nearest converged neighbors.
class ErrorKernel {
 public:
  ErrorKernel(const ConvexDomain& dom, int modes = 513, int n_buckets = 720);

  double operator()(const Vec3& x0, const Vec3& x1) const;
  int flagged_buckets() const { return flagged_; }

 private:
  struct Bucket {
    double B = 0.0, C = 0.0;
    std::vector<double> d2;  // second-derivative coefficients in tau
    bool converged = true;
  };
  double bucket_value(long m, double s) const;     // wrap-aware, flag-aware
  double converged_value(int b, double s) const;   // requires converged bucket

  std::vector<Bucket> buckets_;
  int flagged_ = 0;
};

// (K f)(x0) = integral over the domain of k(x0, x1) f(x1) dx1, midpoint rule
// over the grid cells with the probe's own cell excluded (the principal-value
// exclusion; symmetric neighbors cancel the 1/|x1-x0| head of the kernel).
// Probes should sit on cell centers so that the exclusion stays symmetric.
std::vector<double> apply_error_operator(const ErrorKernel& kernel, const ScalarGrid& f,
                                         const std::vector<Vec3>& probes);

// Least-squares fit of measured = c * predicted; residual is relative to
// ||measured||_2. Requires a usable predicted signal (non-ellipsoidal domain).
struct CalibrationResult {
  double c = 0.0;
  double fit_residual = 0.0;
};
CalibrationResult calibrate_constant(std::span<const double> measured,
                                     std::span<const double> predicted);

// Universal filtered backprojection from boundary spherical means:
//   n=2: f(x0) = (1/pi) sum_i w_i nu_i.(x0-x_i) pv-int_0^R g_i(r)/(r^2-d_i^2) dr
//   n=3: f(x0) = (1/pi) sum_i w_i nu_i.(x0-x_i)/d_i * g_i(d_i),  d_i = |x0-x_i|.
// The inner principal-value integrals are tabulated per center on a uniform
// d-grid at construction and interpolated (4-point Lagrange) at evaluation.
class Backprojection {
 public:
  explicit Backprojection(const FilteredData& data);

  double operator()(const Vec3& x0) const;
  // Cell-centered evaluation; cells outside the mask (if given) are zero.
  ScalarGrid reconstruct(const GridSpec& spec, const ConvexDomain* mask = nullptr) const;

 private:
  int dim_;
  SurfaceQuadrature boundary_;
  double r_max_ = 0.0;
  double table_max_ = 0.0;                     // tables cover [0, table_max_]
  int n_table_ = 0;
  std::vector<std::vector<double>> table_;     // per center: I(d) or g(d)
  double interp(int center, double d) const;
};

// Neumann correction of the backprojection using the calibrated error
// operator: f_k = UB + c K f_{k-1}. Correction norms are the l2 sizes of
// f_k - f_{k-1}; a growing sequence aborts with a divergence error. When a
// truth grid on the same spec is supplied, error_norms records the relative
// l2 error of each iterate (entry 0 = plain backprojection).
struct NeumannResult {
  ScalarGrid f;
  std::vector<double> correction_norms;
  std::vector<double> error_norms;
};
NeumannResult neumann_solve(const Backprojection& ub, const ErrorKernel& kernel, double c,
                            const GridSpec& spec, const ConvexDomain& dom, int steps,
                            const ScalarGrid* truth = nullptr);

}  // namespace mradon
