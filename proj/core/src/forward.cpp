#include "mradon/forward.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "mradon/cheb.hpp"
#include "mradon/errors.hpp"
#include "mradon/quadrature.hpp"

namespace mradon {

namespace {

constexpr int kCircleAngles = 512;
constexpr int kSphereMu = 64;
constexpr int kSpherePhi = 128;

struct SphereRule {
  std::vector<Vec3> dirs;
  std::vector<double> weights;  // sum to 1 (mean weights)
};

const SphereRule& sphere_rule() {
  static const SphereRule rule = [] {
    SphereRule r;
    const quad::Rule gl = quad::gauss_legendre(kSphereMu);
    r.dirs.reserve(kSphereMu * kSpherePhi);
    r.weights.reserve(kSphereMu * kSpherePhi);
    for (int i = 0; i < kSphereMu; ++i) {
      const double u = gl.x[i];
      const double s = std::sqrt(std::max(0.0, 1.0 - u * u));
      const double w = gl.w[i] / (2.0 * kSpherePhi);  // (w * 2pi/nphi) / (4pi)
      for (int j = 0; j < kSpherePhi; ++j) {
        const double phi = 2.0 * M_PI * j / kSpherePhi;
        r.dirs.push_back({s * std::cos(phi), s * std::sin(phi), u});
        r.weights.push_back(w);
      }
    }
    return r;
  }();
  return rule;
}

double bump_mean(const Bump& b, const Vec3& x, double r, int dim) {
  const double dist = (b.center - x).norm();
  if (std::abs(dist - r) >= b.radius) return 0.0;
  double s = 0.0;
  if (dim == 2) {
    for (int k = 0; k < kCircleAngles; ++k) {
      const double th = 2.0 * M_PI * k / kCircleAngles;
      s += b.value(x + Vec3{r * std::cos(th), r * std::sin(th), 0.0});
    }
    return s / kCircleAngles;
  }
  const SphereRule& rule = sphere_rule();
  for (std::size_t k = 0; k < rule.dirs.size(); ++k)
    s += rule.weights[k] * b.value(x + r * rule.dirs[k]);
  return s;
}

}  // namespace

double Bump::value(const Vec3& x) const {
  const double s2 = (x - center).squared_norm() / (radius * radius);
  if (s2 >= 1.0) return 0.0;
  return amplitude * std::exp(1.0 + 1.0 / (s2 - 1.0));
}

double Phantom::value(const Vec3& x) const {
  double s = 0.0;
  for (const Bump& b : bumps) s += b.value(x);
  return s;
}

double Phantom::sup_norm() const {
  double m = 0.0;
  for (const Bump& b : bumps) m = std::max(m, std::abs(b.amplitude));
  return m;
}

void validate_phantom(const ConvexDomain& dom, const Phantom& phantom) {
  if (phantom.bumps.empty())
    throw config_error(errc::contract_violation, "phantom has no bumps");
  const int ndir = (dom.dimension() == 2) ? 64 : 0;
  for (const Bump& b : phantom.bumps) {
    if (!(b.radius > 0.0))
      throw config_error(errc::contract_violation, "bump radius must be positive");
    // Support-function distance from the bump center to the boundary.
    double dist = std::numeric_limits<double>::infinity();
    if (dom.dimension() == 2) {
      for (int k = 0; k < ndir; ++k) {
        const double th = 2.0 * M_PI * k / ndir;
        const Vec3 w{std::cos(th), std::sin(th), 0.0};
        dist = std::min(dist, dom.support(w) - dot(b.center, w));
      }
    } else {
      const SphereRule& rule = sphere_rule();
      for (std::size_t k = 0; k < rule.dirs.size(); k += 7)
        dist = std::min(dist, dom.support(rule.dirs[k]) - dot(b.center, rule.dirs[k]));
    }
    if (!(dist > b.radius))
      throw config_error(errc::out_of_domain,
                         "bump support is not strictly inside the domain");
  }
}

double spherical_mean(const Phantom& phantom, const Vec3& x, double r, int dim) {
  if (r == 0.0) return phantom.value(x);
  double s = 0.0;
  for (const Bump& b : phantom.bumps) s += bump_mean(b, x, r, dim);
  return s;
}

double spherical_mean(const std::function<double(const Vec3&)>& f, const Vec3& x, double r,
                      int dim) {
  if (r == 0.0) return f(x);
  double s = 0.0;
  if (dim == 2) {
    for (int k = 0; k < kCircleAngles; ++k) {
      const double th = 2.0 * M_PI * k / kCircleAngles;
      s += f(x + Vec3{r * std::cos(th), r * std::sin(th), 0.0});
    }
    return s / kCircleAngles;
  }
  const SphereRule& rule = sphere_rule();
  for (std::size_t k = 0; k < rule.dirs.size(); ++k)
    s += rule.weights[k] * f(x + r * rule.dirs[k]);
  return s;
}

namespace {

MeansData fill_means(const ConvexDomain& dom, const Phantom& phantom,
                     SurfaceQuadrature boundary, int n_r, double r_max) {
  if (n_r < 16) throw config_error(errc::contract_violation, "means grid needs n_r >= 16");
  validate_phantom(dom, phantom);
  MeansData d;
  d.dim = dom.dimension();
  d.boundary = std::move(boundary);
  d.r_max = (r_max > 0.0) ? r_max : 1.05 * dom.diameter();
  d.n_r = n_r;
  d.values.assign(d.boundary.size() * static_cast<std::size_t>(n_r), 0.0);
  const int nc = static_cast<int>(d.boundary.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < nc; ++i) {
    const Vec3 x = d.boundary.nodes[i];
    for (int j = 0; j < n_r; ++j) d.at(i, j) = spherical_mean(phantom, x, d.r(j), d.dim);
  }
  return d;
}

}  // namespace

MeansData means_dataset(const ConvexDomain& dom, const Phantom& phantom, int n_centers,
                        int n_r, double r_max) {
  if (dom.dimension() != 2)
    throw config_error(errc::unsupported_dimension, "means_dataset is the planar variant");
  return fill_means(dom, phantom, boundary_quadrature(dom, n_centers), n_r, r_max);
}

MeansData means_dataset3(const ConvexDomain& dom, const Phantom& phantom, int n_mu, int n_phi,
                         int n_r, double r_max) {
  if (dom.dimension() != 3)
    throw config_error(errc::unsupported_dimension, "means_dataset3 is the spatial variant");
  return fill_means(dom, phantom, boundary_quadrature3(dom, n_mu, n_phi), n_r, r_max);
}

double FilteredData::max_tail() const {
  double m = 0.0;
  for (double t : tail) m = std::max(m, t);
  return m;
}

double FilteredData::value(int center, double r) const {
  if (r < 0.0 || r > r_max) return 0.0;
  return cheb::eval(g[center], 2.0 * r / r_max - 1.0);
}

FilteredData radial_filter(const MeansData& data) {
  FilteredData out;
  out.dim = data.dim;
  out.boundary = data.boundary;
  out.r_max = data.r_max;
  const int nc = static_cast<int>(data.boundary.size());
  out.g.resize(nc);
  out.tail.assign(nc, 0.0);

  const int deg = std::min(512, data.n_r / 2);
  const std::vector<double> lob = cheb::lobatto_nodes(deg);
  const double h = data.r_max / (data.n_r - 1);
  const double dscale = 2.0 / data.r_max;  // du/dr

#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < nc; ++i) {
    // Resample the uniform radial samples onto Lobatto nodes with 6-point
    // local Lagrange interpolation (the equispaced->Chebyshev bridge; a
    // direct least-squares fit on the uniform grid is ill-conditioned).
    std::vector<double> resampled(lob.size());
    for (std::size_t k = 0; k < lob.size(); ++k) {
      const double r = 0.5 * data.r_max * (1.0 + lob[k]);
      int jlo = static_cast<int>(std::floor(r / h)) - 2;
      jlo = std::clamp(jlo, 0, data.n_r - 6);
      double acc = 0.0;
      for (int m = 0; m < 6; ++m) {
        double w = 1.0;
        const double rm = (jlo + m) * h;
        for (int l = 0; l < 6; ++l) {
          if (l == m) continue;
          const double rl = (jlo + l) * h;
          w *= (r - rl) / (rm - rl);
        }
        acc += w * data.at(i, jlo + m);
      }
      resampled[k] = acc;
    }
    std::vector<double> c = cheb::fit_lobatto(resampled);
    out.tail[i] = cheb::tail_fraction(c);
    c = cheb::chop(std::move(c));
    if (data.dim == 2) {
      out.g[i] = cheb::derivative(c, dscale);
    } else {
      // g = d/dr [ (2r)^{-1} d/dr (r M) ] via exact coefficient operations:
      // p = r M, q = p', w = q/(2r), g = w'. q(0) = M(x,0) = 0 for boundary
      // centers, so the (1+u) division is exact.
      std::vector<double> p = cheb::multiply_by_u(c);
      if (p.size() < c.size()) p.resize(c.size(), 0.0);
      for (std::size_t k = 0; k < c.size(); ++k) p[k] += c[k];
      for (double& v : p) v *= 0.5 * data.r_max;
      const std::vector<double> q = cheb::derivative(p, dscale);
      std::vector<double> w = cheb::divide_one_plus_u(q);
      for (double& v : w) v /= data.r_max;
      out.g[i] = cheb::derivative(w, dscale);
    }
  }
  for (int i = 0; i < nc; ++i) {
    if (out.tail[i] > 1e-4)
      throw numerical_error(errc::non_converged_filter,
                            "radial samples do not resolve the means: fit tail " +
                                std::to_string(out.tail[i]) + " at center " +
                                std::to_string(i) + " exceeds 1e-4");
  }
  return out;
}

ScalarGrid rasterize(const Phantom& phantom, const GridSpec& spec) {
  ScalarGrid g;
  g.spec = spec;
  g.values.assign(spec.count(), 0.0);
  const int nz = (spec.dim == 3) ? spec.nz : 1;
  for (int i = 0; i < spec.nx; ++i)
    for (int j = 0; j < spec.ny; ++j)
      for (int k = 0; k < nz; ++k)
        g.values[spec.index(i, j, k)] = phantom.value(spec.center(i, j, k));
  return g;
}

}  // namespace mradon
