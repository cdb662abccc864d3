#pragma once

#include <array>
#include <functional>
#include <memory>
#include <vector>

#include "mradon/errors.hpp"
#include "mradon/vec.hpp"

namespace mradon {

// Support interval of a body in one direction: h(-/+) = inf/sup of x.w and the
// tangency points where they are attained.
struct SupportInterval {
  double h_minus = 0.0, h_plus = 0.0;
  Vec3 a_minus, a_plus;
  double width() const { return h_plus - h_minus; }
};

// Discretization of the boundary integral: nodes with outward unit normals and
// (n-1)-area weights.
struct SurfaceQuadrature {
  int dim = 2;
  std::vector<Vec3> nodes, normals;
  std::vector<double> weights;
  int size() const { return static_cast<int>(nodes.size()); }
  double total_weight() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }
};

// A smooth bounded strictly convex body in R^2 or R^3: indicator/level,
// boundary chart with normals and curvature, and support data per direction.
class ConvexDomain {
 public:
  virtual ~ConvexDomain() = default;

  virtual int dimension() const = 0;
  // h_+(w) = sup_{x in body} x.w ; positively homogeneous of degree 1 in w.
  virtual double support(const Vec3& w) const = 0;
  // The boundary point attaining the supremum (outer normal direction w).
  virtual Vec3 support_point(const Vec3& w) const = 0;
  // Defining function, negative inside; smooth for closed-form bodies.
  // Generic bodies return a +-1 indicator (smooth_level() = false).
  virtual double level(const Vec3& x) const = 0;
  virtual bool smooth_level() const { return true; }
  bool contains(const Vec3& x) const { return level(x) < 0.0; }

  // Boundary chart: n=2 takes t1 in [0,2pi); n=3 takes (colatitude, longitude).
  virtual Vec3 boundary_point(double t1, double t2 = 0.0) const = 0;
  // point, outward unit normal, and chart Jacobian (|x'| in 2D, |x_t1 x x_t2| in 3D).
  virtual void boundary_frame(double t1, double t2, Vec3& point, Vec3& normal,
                              double& jacobian) const = 0;
  virtual double gaussian_curvature(double t1, double t2 = 0.0) const = 0;
  // Curvature evaluated at a point known to lie on the boundary (used at
  // support tangency points).
  virtual double curvature_at(const Vec3& boundary_pt) const = 0;

  // Width maximum over directions; sampled once and cached.
  double diameter() const;

  // Checked support data: |w| = 1 within 1e-12, nondegenerate width.
  SupportInterval support_interval(const Vec3& w) const;

 private:
  mutable double diam_cache_ = -1.0;
};

// Ellipsoid (2D ellipse / 3D ellipsoid) with semi-axes, center, rotation.
class Ellipsoid final : public ConvexDomain {
 public:
  // 2D: rotation by angle (radians).
  Ellipsoid(double a1, double a2, const Vec3& center = {}, double angle = 0.0);
  // 3D: rotation matrix rows stored row-major (must be orthonormal).
  Ellipsoid(double a1, double a2, double a3, const Vec3& center,
            const std::array<double, 9>& rot);
  static Ellipsoid disk(double radius) { return Ellipsoid(radius, radius); }
  static Ellipsoid ball(double radius) {
    return Ellipsoid(radius, radius, radius, Vec3{},
                     {1, 0, 0, 0, 1, 0, 0, 0, 1});
  }

  int dimension() const override { return dim_; }
  double support(const Vec3& w) const override;
  Vec3 support_point(const Vec3& w) const override;
  double level(const Vec3& x) const override;
  Vec3 boundary_point(double t1, double t2 = 0.0) const override;
  void boundary_frame(double t1, double t2, Vec3& point, Vec3& normal,
                      double& jacobian) const override;
  double gaussian_curvature(double t1, double t2 = 0.0) const override;
  double curvature_at(const Vec3& boundary_pt) const override;

  const std::array<double, 3>& semi_axes() const { return a_; }
  const Vec3& center() const { return b_; }

 private:
  Vec3 to_body(const Vec3& x) const;   // Q^T (x - b)
  Vec3 to_world_dir(const Vec3& v) const;  // Q v
  Vec3 body_dir(const Vec3& w) const;  // Q^T w

  int dim_;
  std::array<double, 3> a_;
  Vec3 b_;
  std::array<double, 9> q_;  // rotation, row-major
};

// Superellipse sum_j ((x_j - b_j)/a_j)^p = 1 in 2D with even p >= 4: the
// canonical smooth strictly convex non-ellipsoid. Optional rotation so that
// Euclidean-equivariance properties can be exercised on it.
class Superellipse final : public ConvexDomain {
 public:
  Superellipse(int p, double a1, double a2, const Vec3& center = {},
               double angle = 0.0);

  int dimension() const override { return 2; }
  double support(const Vec3& w) const override;
  Vec3 support_point(const Vec3& w) const override;
  double level(const Vec3& x) const override;
  Vec3 boundary_point(double t1, double t2 = 0.0) const override;
  void boundary_frame(double t1, double t2, Vec3& point, Vec3& normal,
                      double& jacobian) const override;
  double gaussian_curvature(double t1, double t2 = 0.0) const override;
  double curvature_at(const Vec3& boundary_pt) const override;

  int exponent() const { return p_; }

 private:
  Vec3 to_body(const Vec3& x) const;
  Vec3 to_world_dir(const Vec3& v) const;

  int p_;
  double a1_, a2_;
  Vec3 b_;
  double ca_, sa_;  // rotation cos/sin
};

// 2D body given by a boundary parameterization plus an indicator; support
// values are found by maximizing x(t).w over the chart. Used for cross-checks
// against closed-form bodies.
class GenericDomain final : public ConvexDomain {
 public:
  GenericDomain(std::function<Vec3(double)> boundary,
                std::function<bool(const Vec3&)> inside);

  int dimension() const override { return 2; }
  double support(const Vec3& w) const override;
  Vec3 support_point(const Vec3& w) const override;
  double level(const Vec3& x) const override;
  bool smooth_level() const override { return false; }
  Vec3 boundary_point(double t1, double t2 = 0.0) const override;
  void boundary_frame(double t1, double t2, Vec3& point, Vec3& normal,
                      double& jacobian) const override;
  double gaussian_curvature(double t1, double t2 = 0.0) const override;
  double curvature_at(const Vec3& boundary_pt) const override;

 private:
  double arg_support(const Vec3& w) const;  // chart parameter of the tangency

  std::function<Vec3(double)> boundary_;
  std::function<bool(const Vec3&)> inside_;
};

// n=2: equispaced chart nodes with arc-length weights (spectral for smooth
// closed curves). resolution >= 16.
SurfaceQuadrature boundary_quadrature(const ConvexDomain& dom, int resolution);
// n=3: Gauss-Legendre in cos(colatitude) x uniform longitude, area weights.
SurfaceQuadrature boundary_quadrature3(const ConvexDomain& dom, int n_mu, int n_phi);

// Interior point of the slice {x.w = t}: affine interpolation between the two
// tangency points. Requires h- < t < h+.
Vec3 chord_seed(const ConvexDomain& dom, const Vec3& w, double t);

}  // namespace mradon
