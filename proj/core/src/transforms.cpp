#include "mradon/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mradon/cheb.hpp"
#include "mradon/errors.hpp"

namespace mradon {

namespace {

// Distance from an interior point to the boundary along a unit direction,
// bisected down to machine precision (the interval is exact up to rounding).
double ray_exit(const ConvexDomain& dom, const Vec3& p0, const Vec3& dir, double reach) {
  double lo = 0.0, hi = reach;
  if (dom.contains(p0 + hi * dir)) return hi;  // cannot happen for reach > diameter
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (dom.contains(p0 + mid * dir)) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 4e-16 * std::max(1.0, hi)) break;
  }
  return 0.5 * (lo + hi);
}

void axpy(std::vector<double>& y, double alpha, const std::vector<double>& x) {
  if (y.size() < x.size()) y.resize(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace

double radon_chi(const ConvexDomain& dom, const Vec3& w, double t) {
  const SupportInterval iv = dom.support_interval(w);
  if (t <= iv.h_minus || t >= iv.h_plus) return 0.0;
  const double reach = 1.01 * dom.diameter() + 1.0;
  const Vec3 wu = w.normalized();
  Vec3 p0 = chord_seed(dom, w, t);
  p0 += (t / w.norm() - dot(p0, wu)) * wu;  // pin the seed onto the slice exactly
  if (!dom.contains(p0)) return 0.0;        // only within rounding of a tangency
  if (dom.dimension() == 2) {
    const Vec3 e{-wu.y, wu.x, 0.0};
    return ray_exit(dom, p0, e, reach) + ray_exit(dom, p0, -1.0 * e, reach);
  }
  const Vec3 seed = (std::abs(wu.x) < 0.9) ? Vec3{1.0, 0.0, 0.0} : Vec3{0.0, 1.0, 0.0};
  const Vec3 e1 = cross(wu, seed).normalized();
  const Vec3 e2 = cross(wu, e1);
  constexpr int kAngles = 256;
  double area = 0.0;
  for (int j = 0; j < kAngles; ++j) {
    const double alpha = 2.0 * M_PI * j / kAngles;
    const Vec3 dir = std::cos(alpha) * e1 + std::sin(alpha) * e2;
    const double rho = ray_exit(dom, p0, dir, reach);
    area += 0.5 * rho * rho;
  }
  return area * (2.0 * M_PI / kAngles);
}

double ChordProfile::value(double t) const {
  const double u = tau(t);
  if (std::abs(u) >= 1.0) return 0.0;
  return std::pow(1.0 - u * u, 0.5 * (dim - 1)) * cheb::eval(psi, u);
}

double HilbertProfile::value(double s) const {
  const double u = (s - B) / C;
  if (std::abs(u) > 1.0)
    throw numerical_error(errc::out_of_range, "Hilbert profile evaluated outside its chord");
  return cheb::eval(coeffs, u);
}

ChordProfile chord_profile(const ConvexDomain& dom, const Vec3& w, int mode_count) {
  if (mode_count < 16)
    throw config_error(errc::contract_violation, "chord_profile requires mode_count >= 16");
  ChordProfile p;
  p.omega = w;
  p.interval = dom.support_interval(w);
  p.B = 0.5 * (p.interval.h_plus + p.interval.h_minus);
  p.C = 0.5 * (p.interval.h_plus - p.interval.h_minus);
  p.dim = dom.dimension();
  p.mode_count = mode_count;
  const std::vector<double> u = cheb::gauss_nodes(mode_count);
  std::vector<double> vals(u.size());
  for (std::size_t i = 0; i < u.size(); ++i)
    vals[i] = radon_chi(dom, w, p.B + p.C * u[i]);
  std::vector<double> a;
  if (p.dim == 2) {
    // Divide the square-root factor out at the nodes; none sits close enough
    // to an endpoint for the division to amplify the slice noise.
    for (std::size_t i = 0; i < u.size(); ++i) vals[i] /= std::sqrt(1.0 - u[i] * u[i]);
    a = cheb::fit_gauss(vals);
    p.tail = cheb::tail_fraction(a);
  } else {
    // The full (1-u^2) factor would amplify endpoint-node noise by ~1/(1-u^2),
    // so denoise the raw slice fit and divide the factor out exactly in
    // coefficient space: psi = Rchi / ((1+u)(1-u)), with u -> -u flips
    // turning the second factor into the first.
    a = cheb::fit_gauss(vals);
    p.tail = cheb::tail_fraction(a);
    a = cheb::divide_one_plus_u(cheb::chop(std::move(a)));
    for (std::size_t k = 1; k < a.size(); k += 2) a[k] = -a[k];
    a = cheb::divide_one_plus_u(a);
    for (std::size_t k = 1; k < a.size(); k += 2) a[k] = -a[k];
  }
  p.psi = cheb::chop(std::move(a));
  p.converged = p.tail <= 1e-4;
  return p;
}

HilbertProfile hilbert_finite(const ChordProfile& profile) {
  if (profile.dim != 2)
    throw config_error(errc::unsupported_dimension,
                       "finite Hilbert transform of a slice profile is defined for n = 2");
  HilbertProfile h;
  h.omega = profile.omega;
  h.B = profile.B;
  h.C = profile.C;
  const std::vector<double> beta = cheb::to_second_kind(profile.psi);
  h.coeffs.assign(beta.size() + 1, 0.0);
  for (std::size_t j = 0; j < beta.size(); ++j) h.coeffs[j + 1] = beta[j];
  h.coeffs = cheb::chop(std::move(h.coeffs));
  h.tail = profile.tail;
  h.converged = profile.converged;
  return h;
}

namespace {

double endpoint_checked_tau(double s, double B, double C) {
  const double tau = (s - B) / C;
  if (std::abs(tau) > 0.96)
    throw numerical_error(errc::endpoint_proximity,
                          "s-derivative requested within 2% of a chord endpoint");
  return tau;
}

}  // namespace

double chord_derivative(const ChordProfile& profile, int order, double s) {
  if (order < 0 || order > profile.dim)
    throw config_error(errc::contract_violation, "derivative order must lie in [0, n]");
  const double tau = endpoint_checked_tau(s, profile.B, profile.C);
  std::vector<double> q = profile.psi;
  for (int j = 0; j < order; ++j) {
    // d/du [ (1-u^2)^{e/2} q ] = (1-u^2)^{(e-2)/2} [ (1-u^2) q' - e u q ]
    const double e = profile.dim - 1 - 2 * j;
    std::vector<double> next = cheb::multiply_one_minus_u2(cheb::derivative(q));
    axpy(next, -e, cheb::multiply_by_u(q));
    q = std::move(next);
  }
  const double expo = 0.5 * (profile.dim - 1 - 2 * order);
  return std::pow(profile.C, -order) * std::pow(1.0 - tau * tau, expo) * cheb::eval(q, tau);
}

double chord_derivative(const HilbertProfile& profile, int order, double s) {
  if (order < 0)
    throw config_error(errc::contract_violation, "derivative order must be non-negative");
  const double tau = endpoint_checked_tau(s, profile.B, profile.C);
  std::vector<double> d = profile.coeffs;
  for (int j = 0; j < order; ++j) d = cheb::derivative(d);
  return std::pow(profile.C, -order) * cheb::eval(d, tau);
}

double intertwine_check(const std::function<double(double)>& phi, double a, double b,
                        int modes) {
  if (!(b > a)) throw config_error(errc::contract_violation, "empty interval");
  const double B = 0.5 * (b + a), C = 0.5 * (b - a);
  const std::vector<double> u = cheb::gauss_nodes(modes);
  std::vector<double> vals(u.size());
  for (std::size_t i = 0; i < u.size(); ++i)
    vals[i] = phi(B + C * u[i]) / std::sqrt(1.0 - u[i] * u[i]);
  const std::vector<double> psi = cheb::chop(cheb::fit_gauss(vals));

  auto lift = [](const std::vector<double>& beta) {
    std::vector<double> c(beta.size() + 1, 0.0);
    for (std::size_t j = 0; j < beta.size(); ++j) c[j + 1] = beta[j];
    return c;
  };
  const std::vector<double> h1 = lift(cheb::to_second_kind(psi));
  std::vector<double> psi_s = cheb::multiply_by_u(psi);
  for (double& c : psi_s) c *= C;
  axpy(psi_s, B, psi);
  const std::vector<double> h2 = lift(cheb::to_second_kind(psi_s));
  const double integral = C * cheb::arch_integral(psi, 1, 0.0, 0.0, 0);

  double worst = 0.0;
  constexpr int kGrid = 201;
  for (int i = 0; i < kGrid; ++i) {
    const double tau = -0.98 + 1.96 * i / (kGrid - 1);
    const double t = B + C * tau;
    const double r = cheb::eval(h2, tau) - t * cheb::eval(h1, tau) + integral / M_PI;
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

double HilbertInverse::value(double t) const {
  const double B = 0.5 * (b + a), C = 0.5 * (b - a);
  const double tau = (t - B) / C;
  if (std::abs(tau) >= 1.0 - 1e-12)
    throw numerical_error(errc::out_of_range,
                          "inverse Hilbert transform evaluated at or beyond an endpoint");
  std::vector<double> lifted(gamma.size() + 1, 0.0);
  for (std::size_t j = 0; j < gamma.size(); ++j) lifted[j + 1] = gamma[j];
  const double num = -M_PI * C * cheb::eval(lifted, tau) + mean;
  return num / (M_PI * C * std::sqrt(1.0 - tau * tau));
}

HilbertInverse hilbert_inverse_finite(const std::function<double(double)>& G, double a,
                                      double b, double mean, int modes) {
  if (!(b > a)) throw config_error(errc::contract_violation, "empty interval");
  if (modes < 16)
    throw config_error(errc::contract_violation, "hilbert_inverse_finite requires modes >= 16");
  HilbertInverse inv;
  inv.a = a;
  inv.b = b;
  inv.mean = mean;
  const double B = 0.5 * (b + a), C = 0.5 * (b - a);
  const int M = modes;
  std::vector<double> g(M);
  std::vector<double> theta(M);
  for (int i = 0; i < M; ++i) {
    theta[i] = (i + 1) * M_PI / (M + 1);
    g[i] = G(B + C * std::cos(theta[i]));
  }
  // Second-kind coefficients by Gauss-Chebyshev(U) quadrature:
  //   gamma_k = (2/(M+1)) sum_i sin(theta_i) sin((k+1) theta_i) G_i.
  inv.gamma.assign(M, 0.0);
  for (int k = 0; k < M; ++k) {
    double s = 0.0;
    for (int i = 0; i < M; ++i) s += std::sin(theta[i]) * std::sin((k + 1) * theta[i]) * g[i];
    inv.gamma[k] = 2.0 * s / (M + 1);
  }
  inv.gamma = cheb::chop(std::move(inv.gamma));
  return inv;
}

}  // namespace mradon
