#include "mradon/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "mradon/quadrature.hpp"

namespace mradon {

namespace {

double ipow(double x, int p) {
  double r = 1.0;
  for (int i = 0; i < p; ++i) r *= x;
  return r;
}

// Curvature of an implicit curve F = 0 with outward gradient:
// kappa = (Fxx Fy^2 - 2 Fxy Fx Fy + Fyy Fx^2) / |grad F|^3.
double implicit_curvature2(double fx, double fy, double fxx, double fxy, double fyy) {
  const double g2 = fx * fx + fy * fy;
  return (fxx * fy * fy - 2.0 * fxy * fx * fy + fyy * fx * fx) / (g2 * std::sqrt(g2));
}

}  // namespace

double ConvexDomain::diameter() const {
  if (diam_cache_ > 0.0) return diam_cache_;
  double best = 0.0;
  if (dimension() == 2) {
    for (int i = 0; i < 512; ++i) {
      const double th = M_PI * i / 512.0;
      const Vec3 w{std::cos(th), std::sin(th), 0.0};
      best = std::max(best, support(w) + support(-w));
    }
  } else {
    for (int i = 0; i < 48; ++i) {
      const double mu = -1.0 + 2.0 * (i + 0.5) / 48.0;
      const double st = std::sqrt(std::max(0.0, 1.0 - mu * mu));
      for (int j = 0; j < 96; ++j) {
        const double ph = 2.0 * M_PI * j / 96.0;
        const Vec3 w{st * std::cos(ph), st * std::sin(ph), mu};
        best = std::max(best, support(w) + support(-w));
      }
    }
  }
  diam_cache_ = best;
  return best;
}

SupportInterval ConvexDomain::support_interval(const Vec3& w) const {
  if (std::abs(w.norm() - 1.0) > 1e-12)
    throw config_error(errc::contract_violation, "direction must be a unit vector");
  SupportInterval si;
  si.h_plus = support(w);
  si.h_minus = -support(-w);
  si.a_plus = support_point(w);
  si.a_minus = support_point(-w);
  if (si.width() < 1e-9)
    throw numerical_error(errc::degenerate_domain, "support interval collapsed");
  return si;
}

// ---------------------------------------------------------------- Ellipsoid

Ellipsoid::Ellipsoid(double a1, double a2, const Vec3& center, double angle)
    : dim_(2), a_{a1, a2, 1.0}, b_(center) {
  if (a1 <= 0.0 || a2 <= 0.0)
    throw config_error(errc::degenerate_domain, "ellipse semi-axes must be positive");
  const double c = std::cos(angle), s = std::sin(angle);
  q_ = {c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0};
}

Ellipsoid::Ellipsoid(double a1, double a2, double a3, const Vec3& center,
                     const std::array<double, 9>& rot)
    : dim_(3), a_{a1, a2, a3}, b_(center), q_(rot) {
  if (a1 <= 0.0 || a2 <= 0.0 || a3 <= 0.0)
    throw config_error(errc::degenerate_domain, "ellipsoid semi-axes must be positive");
}

Vec3 Ellipsoid::to_body(const Vec3& x) const {
  const Vec3 d = x - b_;
  return {q_[0] * d.x + q_[3] * d.y + q_[6] * d.z,
          q_[1] * d.x + q_[4] * d.y + q_[7] * d.z,
          q_[2] * d.x + q_[5] * d.y + q_[8] * d.z};
}

Vec3 Ellipsoid::to_world_dir(const Vec3& v) const {
  return {q_[0] * v.x + q_[1] * v.y + q_[2] * v.z,
          q_[3] * v.x + q_[4] * v.y + q_[5] * v.z,
          q_[6] * v.x + q_[7] * v.y + q_[8] * v.z};
}

Vec3 Ellipsoid::body_dir(const Vec3& w) const {
  return {q_[0] * w.x + q_[3] * w.y + q_[6] * w.z,
          q_[1] * w.x + q_[4] * w.y + q_[7] * w.z,
          q_[2] * w.x + q_[5] * w.y + q_[8] * w.z};
}

double Ellipsoid::support(const Vec3& w) const {
  const Vec3 y = body_dir(w);
  const Vec3 ay{a_[0] * y.x, a_[1] * y.y, dim_ == 3 ? a_[2] * y.z : 0.0};
  return ay.norm() + b_.dot(w);
}

Vec3 Ellipsoid::support_point(const Vec3& w) const {
  const Vec3 y = body_dir(w);
  const Vec3 ay{a_[0] * y.x, a_[1] * y.y, dim_ == 3 ? a_[2] * y.z : 0.0};
  const double h0 = ay.norm();
  const Vec3 p{a_[0] * a_[0] * y.x / h0, a_[1] * a_[1] * y.y / h0,
               dim_ == 3 ? a_[2] * a_[2] * y.z / h0 : 0.0};
  return to_world_dir(p) + b_;
}

double Ellipsoid::level(const Vec3& x) const {
  const Vec3 p = to_body(x);
  double s = (p.x / a_[0]) * (p.x / a_[0]) + (p.y / a_[1]) * (p.y / a_[1]);
  if (dim_ == 3) s += (p.z / a_[2]) * (p.z / a_[2]);
  return s - 1.0;
}

Vec3 Ellipsoid::boundary_point(double t1, double t2) const {
  if (dim_ == 2)
    return to_world_dir({a_[0] * std::cos(t1), a_[1] * std::sin(t1), 0.0}) + b_;
  const double st = std::sin(t1);
  return to_world_dir({a_[0] * st * std::cos(t2), a_[1] * st * std::sin(t2),
                       a_[2] * std::cos(t1)}) +
         b_;
}

void Ellipsoid::boundary_frame(double t1, double t2, Vec3& point, Vec3& normal,
                               double& jacobian) const {
  if (dim_ == 2) {
    const double c = std::cos(t1), s = std::sin(t1);
    point = to_world_dir({a_[0] * c, a_[1] * s, 0.0}) + b_;
    const Vec3 tang = to_world_dir({-a_[0] * s, a_[1] * c, 0.0});
    jacobian = tang.norm();
    normal = Vec3{tang.y, -tang.x, 0.0} / jacobian;
    return;
  }
  const double st = std::sin(t1), ct = std::cos(t1);
  const double cp = std::cos(t2), sp = std::sin(t2);
  point = to_world_dir({a_[0] * st * cp, a_[1] * st * sp, a_[2] * ct}) + b_;
  const Vec3 xt = to_world_dir({a_[0] * ct * cp, a_[1] * ct * sp, -a_[2] * st});
  const Vec3 xp = to_world_dir({-a_[0] * st * sp, a_[1] * st * cp, 0.0});
  const Vec3 cr = cross(xt, xp);
  jacobian = cr.norm();
  normal = cr / jacobian;
}

double Ellipsoid::gaussian_curvature(double t1, double t2) const {
  return curvature_at(boundary_point(t1, t2));
}

double Ellipsoid::curvature_at(const Vec3& x) const {
  const Vec3 p = to_body(x);
  if (dim_ == 2) {
    const double fx = 2.0 * p.x / (a_[0] * a_[0]);
    const double fy = 2.0 * p.y / (a_[1] * a_[1]);
    return implicit_curvature2(fx, fy, 2.0 / (a_[0] * a_[0]), 0.0,
                               2.0 / (a_[1] * a_[1]));
  }
  // K = 1 / ( (a1 a2 a3)^2 * (sum x_j^2 / a_j^4)^2 )
  double s = 0.0;
  const double xs[3] = {p.x, p.y, p.z};
  for (int j = 0; j < 3; ++j) s += xs[j] * xs[j] / ipow(a_[j], 4);
  const double prod = a_[0] * a_[1] * a_[2];
  return 1.0 / (prod * prod * s * s);
}

// ------------------------------------------------------------- Superellipse

Superellipse::Superellipse(int p, double a1, double a2, const Vec3& center,
                           double angle)
    : p_(p), a1_(a1), a2_(a2), b_(center), ca_(std::cos(angle)), sa_(std::sin(angle)) {
  if (p < 4 || p % 2 != 0)
    throw config_error(errc::contract_violation,
                       "superellipse exponent must be even and >= 4");
  if (a1 <= 0.0 || a2 <= 0.0)
    throw config_error(errc::degenerate_domain, "superellipse semi-axes must be positive");
}

Vec3 Superellipse::to_body(const Vec3& x) const {
  const Vec3 d = x - b_;
  return {ca_ * d.x + sa_ * d.y, -sa_ * d.x + ca_ * d.y, 0.0};
}

Vec3 Superellipse::to_world_dir(const Vec3& v) const {
  return {ca_ * v.x - sa_ * v.y, sa_ * v.x + ca_ * v.y, 0.0};
}

double Superellipse::support(const Vec3& w) const {
  const Vec3 y{ca_ * w.x + sa_ * w.y, -sa_ * w.x + ca_ * w.y, 0.0};
  const double q = static_cast<double>(p_) / (p_ - 1);
  const double h0 = std::pow(std::pow(std::abs(a1_ * y.x), q) +
                                 std::pow(std::abs(a2_ * y.y), q),
                             1.0 / q);
  return h0 + b_.dot(w);
}

Vec3 Superellipse::support_point(const Vec3& w) const {
  const Vec3 y{ca_ * w.x + sa_ * w.y, -sa_ * w.x + ca_ * w.y, 0.0};
  const double q = static_cast<double>(p_) / (p_ - 1);
  const double h0 = std::pow(std::pow(std::abs(a1_ * y.x), q) +
                                 std::pow(std::abs(a2_ * y.y), q),
                             1.0 / q);
  const Vec3 s{
      (y.x >= 0 ? 1.0 : -1.0) * a1_ * std::pow(std::abs(a1_ * y.x / h0), q - 1.0),
      (y.y >= 0 ? 1.0 : -1.0) * a2_ * std::pow(std::abs(a2_ * y.y / h0), q - 1.0),
      0.0};
  return to_world_dir(s) + b_;
}

double Superellipse::level(const Vec3& x) const {
  const Vec3 p = to_body(x);
  return ipow(p.x / a1_, p_) + ipow(p.y / a2_, p_) - 1.0;
}

Vec3 Superellipse::boundary_point(double t1, double) const {
  const double c = std::cos(t1), s = std::sin(t1);
  const double g = ipow(c / a1_, p_) + ipow(s / a2_, p_);
  const double r = std::pow(g, -1.0 / p_);
  return to_world_dir({r * c, r * s, 0.0}) + b_;
}

void Superellipse::boundary_frame(double t1, double, Vec3& point, Vec3& normal,
                                  double& jacobian) const {
  const double c = std::cos(t1), s = std::sin(t1);
  const double g = ipow(c / a1_, p_) + ipow(s / a2_, p_);
  const double gp = p_ * ipow(c / a1_, p_ - 1) * (-s / a1_) +
                    p_ * ipow(s / a2_, p_ - 1) * (c / a2_);
  const double r = std::pow(g, -1.0 / p_);
  const double rp = -(1.0 / p_) * std::pow(g, -1.0 / p_ - 1.0) * gp;
  point = to_world_dir({r * c, r * s, 0.0}) + b_;
  const Vec3 tang = to_world_dir({rp * c - r * s, rp * s + r * c, 0.0});
  jacobian = tang.norm();
  normal = Vec3{tang.y, -tang.x, 0.0} / jacobian;
}

double Superellipse::gaussian_curvature(double t1, double) const {
  return curvature_at(boundary_point(t1, 0.0));
}

double Superellipse::curvature_at(const Vec3& x) const {
  const Vec3 p = to_body(x);
  const double fx = p_ * ipow(p.x / a1_, p_ - 1) / a1_;
  const double fy = p_ * ipow(p.y / a2_, p_ - 1) / a2_;
  const double fxx = p_ * (p_ - 1) * ipow(p.x / a1_, p_ - 2) / (a1_ * a1_);
  const double fyy = p_ * (p_ - 1) * ipow(p.y / a2_, p_ - 2) / (a2_ * a2_);
  return implicit_curvature2(fx, fy, fxx, 0.0, fyy);
}

// ------------------------------------------------------------ GenericDomain

GenericDomain::GenericDomain(std::function<Vec3(double)> boundary,
                             std::function<bool(const Vec3&)> inside)
    : boundary_(std::move(boundary)), inside_(std::move(inside)) {
  // Strict-convexity probe at construction: midpoints of boundary chords must
  // be interior.
  for (int i = 0; i < 64; ++i) {
    const double t1 = 2.0 * M_PI * i / 64.0;
    const double t2 = 2.0 * M_PI * ((i * 29) % 64 + 0.5) / 64.0;
    const Vec3 m = (boundary_(t1) + boundary_(t2)) * 0.5;
    if (std::abs(t1 - t2) > 1e-3 && std::abs(std::abs(t1 - t2) - 2 * M_PI) > 1e-3 &&
        !inside_(m))
      throw config_error(errc::contract_violation,
                         "generic boundary is not strictly convex");
  }
}

double GenericDomain::arg_support(const Vec3& w) const {
  const int coarse = 2048;
  int best = 0;
  double fbest = -1e308;
  for (int i = 0; i < coarse; ++i) {
    const double f = boundary_(2.0 * M_PI * i / coarse).dot(w);
    if (f > fbest) {
      fbest = f;
      best = i;
    }
  }
  // Golden-section refinement on the bracketing interval (f is unimodal there
  // for a strictly convex curve).
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = 2.0 * M_PI * (best - 1) / coarse;
  double hi = 2.0 * M_PI * (best + 1) / coarse;
  double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
  double fc = boundary_(c).dot(w), fd = boundary_(d).dot(w);
  while (hi - lo > 1e-13) {
    if (fc > fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - gr * (hi - lo);
      fc = boundary_(c).dot(w);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + gr * (hi - lo);
      fd = boundary_(d).dot(w);
    }
  }
  return 0.5 * (lo + hi);
}

double GenericDomain::support(const Vec3& w) const {
  return boundary_(arg_support(w)).dot(w);
}

Vec3 GenericDomain::support_point(const Vec3& w) const {
  return boundary_(arg_support(w));
}

double GenericDomain::level(const Vec3& x) const {
  return inside_(x) ? -1.0 : 1.0;
}

Vec3 GenericDomain::boundary_point(double t1, double) const { return boundary_(t1); }

void GenericDomain::boundary_frame(double t1, double, Vec3& point, Vec3& normal,
                                   double& jacobian) const {
  const double h = 1e-6;
  point = boundary_(t1);
  const Vec3 tang = (boundary_(t1 + h) - boundary_(t1 - h)) / (2.0 * h);
  jacobian = tang.norm();
  normal = Vec3{tang.y, -tang.x, 0.0} / jacobian;
}

double GenericDomain::gaussian_curvature(double t1, double) const {
  const double h = 1e-4;
  const Vec3 xm = boundary_(t1 - h), x0 = boundary_(t1), xp = boundary_(t1 + h);
  const Vec3 d1 = (xp - xm) / (2.0 * h);
  const Vec3 d2 = (xp - 2.0 * x0 + xm) / (h * h);
  const double crossz = d1.x * d2.y - d1.y * d2.x;
  return std::abs(crossz) / ipow(d1.norm(), 3);
}

double GenericDomain::curvature_at(const Vec3& x) const {
  // Locate the chart parameter by nearest-point search, then use the chart.
  const int coarse = 2048;
  int best = 0;
  double dbest = 1e308;
  for (int i = 0; i < coarse; ++i) {
    const double d = (boundary_(2.0 * M_PI * i / coarse) - x).squared_norm();
    if (d < dbest) {
      dbest = d;
      best = i;
    }
  }
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = 2.0 * M_PI * (best - 1) / coarse;
  double hi = 2.0 * M_PI * (best + 1) / coarse;
  while (hi - lo > 1e-10) {
    const double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
    if ((boundary_(c) - x).squared_norm() < (boundary_(d) - x).squared_norm())
      hi = d;
    else
      lo = c;
  }
  return gaussian_curvature(0.5 * (lo + hi));
}

// ---------------------------------------------------------------- quadrature

SurfaceQuadrature boundary_quadrature(const ConvexDomain& dom, int resolution) {
  if (resolution < 16)
    throw config_error(errc::contract_violation, "boundary resolution must be >= 16");
  if (dom.dimension() != 2)
    throw config_error(errc::unsupported_dimension,
                       "use boundary_quadrature3 for 3D domains");
  SurfaceQuadrature q;
  q.dim = 2;
  q.nodes.resize(resolution);
  q.normals.resize(resolution);
  q.weights.resize(resolution);
  for (int i = 0; i < resolution; ++i) {
    double jac;
    dom.boundary_frame(2.0 * M_PI * i / resolution, 0.0, q.nodes[i], q.normals[i], jac);
    q.weights[i] = jac * 2.0 * M_PI / resolution;
  }
  return q;
}

SurfaceQuadrature boundary_quadrature3(const ConvexDomain& dom, int n_mu, int n_phi) {
  if (n_mu < 16 || n_phi < 16)
    throw config_error(errc::contract_violation, "boundary resolution must be >= 16");
  if (dom.dimension() != 3)
    throw config_error(errc::unsupported_dimension, "domain is not 3D");
  SurfaceQuadrature q;
  q.dim = 3;
  // Gauss-Legendre in mu = cos(colatitude) x uniform longitude. The area
  // element contributes jacobian/sin(theta) relative to d(mu) d(phi).
  const quad::Rule gl = quad::gauss_legendre(n_mu);
  q.nodes.reserve(static_cast<size_t>(n_mu) * n_phi);
  q.normals.reserve(q.nodes.capacity());
  q.weights.reserve(q.nodes.capacity());
  for (int i = 0; i < n_mu; ++i) {
    const double theta = std::acos(gl.x[i]);
    const double st = std::sin(theta);
    for (int j = 0; j < n_phi; ++j) {
      const double phi = 2.0 * M_PI * j / n_phi;
      Vec3 pt, nrm;
      double jac;
      dom.boundary_frame(theta, phi, pt, nrm, jac);
      q.nodes.push_back(pt);
      q.normals.push_back(nrm);
      q.weights.push_back(gl.w[i] * (2.0 * M_PI / n_phi) * jac / st);
    }
  }
  return q;
}

Vec3 chord_seed(const ConvexDomain& dom, const Vec3& w, double t) {
  const SupportInterval si = dom.support_interval(w);
  if (!(t > si.h_minus && t < si.h_plus))
    throw numerical_error(errc::out_of_range, "slice offset outside the open support interval");
  const double lam = (t - si.h_minus) / si.width();
  return si.a_minus + lam * (si.a_plus - si.a_minus);
}

}  // namespace mradon
