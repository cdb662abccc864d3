#include "mradon/rigidity.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "mradon/cheb.hpp"
#include "mradon/errors.hpp"
#include "mradon/inversion.hpp"
#include "mradon/transforms.hpp"

namespace mradon {

namespace {

std::vector<Vec3> direction_set(int dim, int n) {
  std::vector<Vec3> dirs;
  dirs.reserve(n);
  if (dim == 2) {
    for (int i = 0; i < n; ++i) {
      const double th = M_PI * (i + 0.5) / n;  // half turn: opposite dirs are redundant
      dirs.push_back({std::cos(th), std::sin(th), 0.0});
    }
    return dirs;
  }
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {  // Fibonacci hemisphere
    const double z = (i + 0.5) / n;
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * i;
    dirs.push_back({rho * std::cos(phi), rho * std::sin(phi), z});
  }
  return dirs;
}

// Columns of the homogeneous degree-k monomial basis evaluated at w.
std::vector<double> monomials(const Vec3& w, int k, int dim) {
  std::vector<double> row;
  if (dim == 2) {
    for (int a = 0; a <= k; ++a)
      row.push_back(std::pow(w.x, a) * std::pow(w.y, k - a));
    return row;
  }
  for (int a = 0; a <= k; ++a)
    for (int b = 0; a + b <= k; ++b)
      row.push_back(std::pow(w.x, a) * std::pow(w.y, b) * std::pow(w.z, k - a - b));
  return row;
}

}  // namespace

double moment(const ConvexDomain& dom, const Vec3& w, int k, int modes) {
  if (k < 0) throw config_error(errc::contract_violation, "moment order must be >= 0");
  const ChordProfile p = chord_profile(dom, w, modes);
  return p.C * cheb::arch_integral(p.psi, p.dim - 1, p.B, p.C, k);
}

double moment_residual(const ConvexDomain& dom, int k, int n_dirs, int modes) {
  if (k < 0) throw config_error(errc::contract_violation, "moment order must be >= 0");
  if (n_dirs < 8) throw config_error(errc::insufficient_directions, "need at least 8 directions");
  const int dim = dom.dimension();
  const std::vector<Vec3> dirs = direction_set(dim, n_dirs);
  const double halfspan = 0.5 * dom.diameter();

  const std::vector<double> flat{1.0};
  Eigen::VectorXd m(n_dirs);
  double mass_sum = 0.0;
  std::vector<std::vector<double>> rows(n_dirs);
  for (int i = 0; i < n_dirs; ++i) {
    const ChordProfile p = chord_profile(dom, dirs[i], modes);
    const double alpha = p.psi.empty() ? 0.0 : p.psi[0];
    m(i) = alpha * p.C * cheb::arch_integral(flat, dim - 1, p.B, p.C, k);
    mass_sum += std::abs(alpha * p.C * cheb::arch_integral(flat, dim - 1, p.B, p.C, 0));
    rows[i] = monomials(dirs[i], k, dim);
  }
  const int ncol = static_cast<int>(rows[0].size());
  Eigen::MatrixXd A(n_dirs, ncol);
  for (int i = 0; i < n_dirs; ++i)
    for (int j = 0; j < ncol; ++j) A(i, j) = rows[i][j];
  const Eigen::VectorXd beta = A.colPivHouseholderQr().solve(m);
  const double num = (m - A * beta).norm();
  const double floor = (mass_sum / n_dirs) * std::pow(halfspan, k);
  return num / std::max(m.norm(), floor);
}

CenterEstimate estimate_center(const ConvexDomain& dom, int n_dirs) {
  if (n_dirs < 8) throw config_error(errc::insufficient_directions, "need at least 8 directions");
  const int dim = dom.dimension();
  const std::vector<Vec3> dirs = direction_set(dim, n_dirs);
  Eigen::MatrixXd A(n_dirs, dim);
  Eigen::VectorXd b(n_dirs);
  for (int i = 0; i < n_dirs; ++i) {
    const SupportInterval iv = dom.support_interval(dirs[i]);
    b(i) = 0.5 * (iv.h_plus + iv.h_minus);
    A(i, 0) = dirs[i].x;
    A(i, 1) = dirs[i].y;
    if (dim == 3) A(i, 2) = dirs[i].z;
  }
  const Eigen::VectorXd beta = A.colPivHouseholderQr().solve(b);
  CenterEstimate ce;
  ce.center = {beta(0), beta(1), dim == 3 ? beta(2) : 0.0};
  ce.residual = std::sqrt((b - A * beta).squaredNorm() / n_dirs) / (0.5 * dom.diameter());
  return ce;
}

QuadraticEstimate estimate_quadratic_form(const ConvexDomain& dom, int n_dirs) {
  if (n_dirs < 8) throw config_error(errc::insufficient_directions, "need at least 8 directions");
  const int dim = dom.dimension();
  const std::vector<Vec3> dirs = direction_set(dim, n_dirs);
  const int ncol = (dim == 2) ? 3 : 6;
  Eigen::MatrixXd A(n_dirs, ncol);
  Eigen::VectorXd y(n_dirs);
  for (int i = 0; i < n_dirs; ++i) {
    const Vec3& w = dirs[i];
    const SupportInterval iv = dom.support_interval(w);
    const double half = 0.5 * (iv.h_plus - iv.h_minus);
    y(i) = half * half;
    if (dim == 2) {
      A(i, 0) = w.x * w.x;
      A(i, 1) = w.y * w.y;
      A(i, 2) = 2.0 * w.x * w.y;
    } else {
      A(i, 0) = w.x * w.x;
      A(i, 1) = w.y * w.y;
      A(i, 2) = w.z * w.z;
      A(i, 3) = 2.0 * w.x * w.y;
      A(i, 4) = 2.0 * w.x * w.z;
      A(i, 5) = 2.0 * w.y * w.z;
    }
  }
  const Eigen::VectorXd beta = A.colPivHouseholderQr().solve(y);
  QuadraticEstimate qe;
  const double halfspan = 0.5 * dom.diameter();
  qe.residual = std::sqrt((y - A * beta).squaredNorm() / n_dirs) / (halfspan * halfspan);

  Eigen::Matrix3d S = Eigen::Matrix3d::Zero();
  S(0, 0) = beta(0);
  S(1, 1) = beta(1);
  S(0, 1) = S(1, 0) = beta(dim == 2 ? 2 : 3);
  if (dim == 3) {
    S(2, 2) = beta(2);
    S(0, 2) = S(2, 0) = beta(4);
    S(1, 2) = S(2, 1) = beta(5);
  }
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) qe.form[3 * r + c] = S(r, c);

  if (dim == 2) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(S.topLeftCorner<2, 2>());
    if (es.eigenvalues()(0) <= 0.0)
      throw numerical_error(errc::non_convex_fit,
                            "fitted half-width form is not positive definite");
    for (int j = 0; j < 2; ++j) {
      const int src = 1 - j;  // descending
      qe.semi_axes[j] = std::sqrt(es.eigenvalues()(src));
      qe.axes[3 * j + 0] = es.eigenvectors()(0, src);
      qe.axes[3 * j + 1] = es.eigenvectors()(1, src);
    }
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(S);
    if (es.eigenvalues()(0) <= 0.0)
      throw numerical_error(errc::non_convex_fit,
                            "fitted half-width form is not positive definite");
    for (int j = 0; j < 3; ++j) {
      const int src = 2 - j;
      qe.semi_axes[j] = std::sqrt(es.eigenvalues()(src));
      for (int c = 0; c < 3; ++c) qe.axes[3 * j + c] = es.eigenvectors()(c, src);
    }
  }
  return qe;
}

double endpoint_exponent(const ConvexDomain& dom, const Vec3& w) {
  const SupportInterval iv = dom.support_interval(w);
  const double span = iv.width();
  const double kappa = dom.curvature_at(dom.support_point(w));
  if (!(kappa > 1e-6))
    throw numerical_error(errc::irregular_direction,
                          "tangency point is flat to working precision; the endpoint "
                          "exponent is not the regular one");
  constexpr int kDepths = 10;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (int mth = 0; mth < kDepths; ++mth) {
    const double eps = span * 1e-2 * std::pow(0.5, mth);
    const double v = radon_chi(dom, w, iv.h_plus - eps);
    if (!(v > 0.0))
      throw numerical_error(errc::degenerate_domain,
                            "slice vanished at an interior offset while probing the endpoint");
    const double lx = std::log(eps), ly = std::log(v);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (kDepths * sxy - sx * sy) / (kDepths * sxx - sx * sx);
}

namespace {

struct KernelSupResult {
  double sup = 0.0;
  int skipped = 0;
};

// Largest |error kernel| over seeded interior pairs, skipping directions with
// non-converged profiles and pairs whose offset hugs a chord endpoint.
KernelSupResult kernel_sup(const ConvexDomain& dom, const Vec3& center, std::uint64_t seed,
                           int n_pairs, int modes) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const int dim = dom.dimension();
  const Vec3 ex{1, 0, 0}, ey{0, 1, 0}, ez{0, 0, 1};
  const double rx = std::max(dom.support(ex) - center.x, center.x - (-dom.support(-1.0 * ex)));
  const double ry = std::max(dom.support(ey) - center.y, center.y - (-dom.support(-1.0 * ey)));
  const double rz = (dim == 3)
                        ? std::max(dom.support(ez) - center.z, center.z - (-dom.support(-1.0 * ez)))
                        : 0.0;
  auto draw_inside = [&]() {
    for (int tries = 0; tries < 4096; ++tries) {
      Vec3 p{center.x + rx * unit(rng), center.y + ry * unit(rng),
             dim == 3 ? center.z + rz * unit(rng) : 0.0};
      // keep a margin: accept only points of the 0.9-scaled body
      const Vec3 q = center + (1.0 / 0.9) * (p - center);
      if (dom.contains(p) && dom.contains(q)) return p;
    }
    throw numerical_error(errc::degenerate_domain, "interior sampling failed");
  };
  KernelSupResult out;
  for (int m = 0; m < n_pairs; ++m) {
    const Vec3 x0 = draw_inside();
    Vec3 x1 = draw_inside();
    if ((x1 - x0).norm() < 1e-3) {
      ++out.skipped;
      continue;
    }
    try {
      const PairChart pc = pair_chart(x0, x1);
      const ChordProfile profile = chord_profile(dom, pc.omega, modes);
      if (!profile.converged) {
        ++out.skipped;
        continue;
      }
      double v;
      const double d = (x1 - x0).norm();
      if (dim == 2) {
        v = chord_derivative(hilbert_finite(profile), 2, pc.s_star) / d;
      } else {
        v = chord_derivative(profile, 3, pc.s_star) / (d * d);
      }
      out.sup = std::max(out.sup, std::abs(v));
    } catch (const error& e) {
      if (e.kind() == errc::endpoint_proximity || e.kind() == errc::degenerate_pair) {
        ++out.skipped;
        continue;
      }
      throw;
    }
  }
  return out;
}

double planar_reference_signal() {
  static const double ref = [] {
    const Superellipse body(4.0, 2.0, 1.0, Vec3{0, 0, 0}, 0.0);
    const double diam = body.diameter();
    const KernelSupResult ks = kernel_sup(body, Vec3{0, 0, 0}, 777u, 40, 257);
    return ks.sup * diam * diam;
  }();
  return ref;
}

}  // namespace

RigidityReport rigidity_report(const ConvexDomain& dom, int n_dirs, std::uint64_t seed) {
  if (n_dirs < 8)
    throw config_error(errc::insufficient_directions,
                       "rigidity diagnostics need at least 8 directions");
  RigidityReport rep;
  const int dim = dom.dimension();
  const double diam = dom.diameter();

  rep.center = estimate_center(dom, n_dirs);
  try {
    rep.quadratic = estimate_quadratic_form(dom, n_dirs);
  } catch (const error& e) {
    if (e.kind() != errc::non_convex_fit) throw;
    rep.quadratic_fit_ok = false;
  }
  for (int k = 0; k <= 3; ++k) rep.moment_residuals.push_back(moment_residual(dom, k, n_dirs));

  const KernelSupResult ks = kernel_sup(dom, rep.center.center, seed, 40, 257);
  const double raw = ks.sup * std::pow(diam, 2.0 * (dim - 1));
  rep.kernel_signal = (dim == 2) ? raw / planar_reference_signal() : raw;

  const int n_probe = 8;
  const double target = 0.5 * (dim - 1);
  std::vector<Vec3> probe_dirs;
  if (dim == 2) {
    for (int j = 0; j < n_probe; ++j) {
      const double th = M_PI * j / n_probe;  // includes the coordinate axes
      probe_dirs.push_back({std::cos(th), std::sin(th), 0.0});
    }
  } else {
    probe_dirs = direction_set(3, n_probe - 1);
    probe_dirs.push_back({0, 0, 1});
  }
  for (const Vec3& w : probe_dirs) {
    try {
      const double e = endpoint_exponent(dom, w);
      rep.exponents.push_back(e);
      rep.exponent_deviation = std::max(rep.exponent_deviation, std::abs(e - target));
    } catch (const error& e) {
      if (e.kind() != errc::irregular_direction) throw;
      rep.exponents.push_back(std::numeric_limits<double>::quiet_NaN());
      ++rep.irregular_directions;
    }
  }

  struct Signal {
    const char* name;
    double value;
    double threshold;
  };
  double max_moment = 0.0;
  for (double r : rep.moment_residuals) max_moment = std::max(max_moment, r);
  const Signal signals[] = {
      {"support midpoints deviate from a fixed center", rep.center.residual, 1e-5},
      {"squared half-widths deviate from a quadratic form", rep.quadratic.residual, 1e-5},
      {"arch-model moments deviate from polynomials", max_moment, 1e-4},
      {"reconstruction-error kernel is present", rep.kernel_signal, 1e-4},
      {"endpoint exponents deviate from the regular value", rep.exponent_deviation, 0.05},
  };
  bool all_clean = rep.quadratic_fit_ok;
  bool tripped = !rep.quadratic_fit_ok;
  if (!rep.quadratic_fit_ok)
    rep.reasons.emplace_back("half-width form is not positive definite");
  for (const Signal& s : signals) {
    if (s.value > s.threshold) all_clean = false;
    if (s.value >= 10.0 * s.threshold) {
      tripped = true;
      rep.reasons.emplace_back(s.name);
    }
  }
  rep.verdict = tripped ? RigidityReport::Verdict::non_ellipsoid
                        : (all_clean ? RigidityReport::Verdict::ellipsoid_consistent
                                     : RigidityReport::Verdict::inconclusive);
  return rep;
}

}  // namespace mradon
