#pragma once

#include <functional>
#include <vector>

#include "mradon/geometry.hpp"
#include "mradon/grid.hpp"
#include "mradon/vec.hpp"

namespace mradon {

// Smooth compactly supported bump: amplitude * exp(1 + 1/(s^2-1)) for
// s = |x - center|/radius < 1, zero otherwise. Value at the center equals
// the amplitude.
struct Bump {
  Vec3 center;
  double radius = 0.0;
  double amplitude = 1.0;
  double value(const Vec3& x) const;
};

struct Phantom {
  std::vector<Bump> bumps;
  double value(const Vec3& x) const;
  double sup_norm() const;  // max amplitude of any single bump (lower bound on sup|f|)
};

// Throws if any bump support is not strictly inside the domain
// (support-function distance to the boundary must exceed the bump radius).
void validate_phantom(const ConvexDomain& dom, const Phantom& phantom);

// Mean of the phantom over the sphere |y - x| = r. n=2: 512-point trapezoid
// in angle; n=3: 64-point Gauss in cos(polar) x 128-point trapezoid in
// azimuth, normalized by the sphere area.
double spherical_mean(const Phantom& phantom, const Vec3& x, double r, int dim);
double spherical_mean(const std::function<double(const Vec3&)>& f, const Vec3& x, double r,
                      int dim);

// Spherical means sampled on boundary centers x uniform radial grid
// r_j = j * r_max / (n_r - 1), j = 0 .. n_r-1, stored center-major.
struct MeansData {
  int dim = 2;
  SurfaceQuadrature boundary;
  double r_max = 0.0;
  int n_r = 0;
  std::vector<double> values;

  double r(int j) const { return r_max * j / (n_r - 1); }
  double at(int i, int j) const { return values[static_cast<std::size_t>(i) * n_r + j]; }
  double& at(int i, int j) { return values[static_cast<std::size_t>(i) * n_r + j]; }
};

// r_max <= 0 selects the default 1.05 * diameter (means vanish beyond the
// diameter for interior-supported phantoms). n_r >= 16.
MeansData means_dataset(const ConvexDomain& dom, const Phantom& phantom, int n_centers,
                        int n_r, double r_max = -1.0);
MeansData means_dataset3(const ConvexDomain& dom, const Phantom& phantom, int n_mu, int n_phi,
                         int n_r, double r_max = -1.0);

// Per-center filtered radial data g(x, .) on [0, r_max] in Chebyshev form
// (u = 2r/r_max - 1):
//   n=2: g = d/dr M,
//   n=3: g = d/dr [ (2r)^{-1} d/dr ( r M ) ],
// computed spectrally from a Chebyshev fit of the radial samples. `tail`
// records each center's pre-chop fit tail; the largest one must stay below
// 1e-4 or the filter refuses (non-converged radial data).
struct FilteredData {
  int dim = 2;
  SurfaceQuadrature boundary;
  double r_max = 0.0;
  std::vector<std::vector<double>> g;
  std::vector<double> tail;

  double max_tail() const;
  // g at radius r for the given center; 0 outside [0, r_max].
  double value(int center, double r) const;
};

FilteredData radial_filter(const MeansData& data);

// Cell-centered samples of the phantom on a grid.
ScalarGrid rasterize(const Phantom& phantom, const GridSpec& spec);

}  // namespace mradon
