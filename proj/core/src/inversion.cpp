#include "mradon/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mradon/cheb.hpp"
#include "mradon/errors.hpp"
#include "mradon/quadrature.hpp"

namespace mradon {

PairChart pair_chart(const Vec3& x0, const Vec3& x1) {
  const Vec3 diff = x1 - x0;
  const double d = diff.norm();
  if (d < 1e-12)
    throw numerical_error(errc::degenerate_pair, "error kernel needs two distinct points");
  PairChart pc;
  pc.omega = diff / d;
  pc.s_star = dot(pc.omega, 0.5 * (x0 + x1));  // = (|x1|^2 - |x0|^2) / (2|x1-x0|)
  return pc;
}

double error_kernel(const ConvexDomain& dom, const Vec3& x0, const Vec3& x1, int modes) {
  const PairChart pc = pair_chart(x0, x1);
  const double d = (x1 - x0).norm();
  const ChordProfile profile = chord_profile(dom, pc.omega, modes);
  if (dom.dimension() == 2) {
    const HilbertProfile hp = hilbert_finite(profile);
    return chord_derivative(hp, 2, pc.s_star) / d;
  }
  return chord_derivative(profile, 3, pc.s_star) / (d * d);
}

ErrorKernel::ErrorKernel(const ConvexDomain& dom, int modes, int n_buckets) {
  if (dom.dimension() != 2)
    throw config_error(errc::unsupported_dimension,
                       "bucketed error kernel is the planar variant; use error_kernel "
                       "directly for n = 3");
  if (n_buckets < 8)
    throw config_error(errc::contract_violation, "need at least 8 direction buckets");
  buckets_.resize(n_buckets);
#pragma omp parallel for schedule(dynamic)
  for (int b = 0; b < n_buckets; ++b) {
    const double th = (b + 0.5) * M_PI / n_buckets;
    const Vec3 w{std::cos(th), std::sin(th), 0.0};
    const ChordProfile profile = chord_profile(dom, w, modes);
    const HilbertProfile hp = hilbert_finite(profile);
    Bucket& bk = buckets_[b];
    bk.B = hp.B;
    bk.C = hp.C;
    bk.d2 = cheb::derivative(cheb::derivative(hp.coeffs));
    bk.converged = profile.converged;
  }
  for (const Bucket& bk : buckets_)
    if (!bk.converged) ++flagged_;
  if (flagged_ == n_buckets)
    throw numerical_error(errc::non_converged_profile,
                          "no direction bucket produced a converged profile");
}

double ErrorKernel::converged_value(int b, double s) const {
  const Bucket& bk = buckets_[b];
  const double tau = (s - bk.B) / bk.C;
  if (std::abs(tau) > 0.96)
    throw numerical_error(errc::endpoint_proximity,
                          "pair offset within 2% of a chord endpoint");
  return cheb::eval(bk.d2, tau) / (bk.C * bk.C);
}

double ErrorKernel::bucket_value(long m, double s) const {
  const long nb = static_cast<long>(buckets_.size());
  // Index m is periodic with period nb up to the half-turn rule
  // D(theta + pi, s) = -D(theta, -s): each period crossing flips the sign of
  // both the value and the offset.
  long q = m / nb;
  if (m % nb < 0) --q;
  const int b = static_cast<int>(m - q * nb);
  const double sign = (q % 2 == 0) ? 1.0 : -1.0;
  const double s_eff = sign * s;
  if (buckets_[b].converged) return sign * converged_value(b, s_eff);
  // Bridge a flagged bucket by linear interpolation in angle between the
  // nearest converged neighbors (flagged runs hug isolated directions).
  long lo = m - 1, hi = m + 1;
  auto canon = [nb](long i) { return static_cast<int>(((i % nb) + nb) % nb); };
  while (!buckets_[canon(lo)].converged) --lo;
  while (!buckets_[canon(hi)].converged) ++hi;
  const double vlo = bucket_value(lo, s);
  const double vhi = bucket_value(hi, s);
  const double lambda = static_cast<double>(m - lo) / static_cast<double>(hi - lo);
  return (1.0 - lambda) * vlo + lambda * vhi;
}

double ErrorKernel::operator()(const Vec3& x0, const Vec3& x1) const {
  const Vec3 diff = x1 - x0;
  const double d = diff.norm();
  if (d < 1e-12)
    throw numerical_error(errc::degenerate_pair, "error kernel needs two distinct points");
  const double s_star = dot(diff / d, 0.5 * (x0 + x1));
  const double delta = M_PI / buckets_.size();
  const double b_real = std::atan2(diff.y, diff.x) / delta - 0.5;
  const long m0 = static_cast<long>(std::floor(b_real));
  const double lambda = b_real - m0;
  const double v = (1.0 - lambda) * bucket_value(m0, s_star) + lambda * bucket_value(m0 + 1, s_star);
  return v / d;
}

std::vector<double> apply_error_operator(const ErrorKernel& kernel, const ScalarGrid& f,
                                         const std::vector<Vec3>& probes) {
  const GridSpec& spec = f.spec;
  const double vol = spec.cell_volume();
  const double excl2 = 0.25 * std::min(spec.dx, spec.dy) * std::min(spec.dx, spec.dy);
  std::vector<double> out(probes.size(), 0.0);
  const int np = static_cast<int>(probes.size());
#pragma omp parallel for schedule(dynamic)
  for (int p = 0; p < np; ++p) {
    const Vec3 x0 = probes[p];
    double acc = 0.0;
    for (int i = 0; i < spec.nx; ++i) {
      for (int j = 0; j < spec.ny; ++j) {
        const double v = f.values[f.spec.index(i, j, 0)];
        if (v == 0.0) continue;
        const Vec3 xc = spec.center(i, j, 0);
        if ((xc - x0).squared_norm() < excl2) continue;  // principal-value exclusion
        try {
          acc += v * kernel(x0, xc);
        } catch (const error& e) {
          // Pairs of near-boundary cells on nearly tangent lines chart within
          // the endpoint guard band where the spectral derivative is not
          // trustworthy; the kernel is bounded there and the sliver is one
          // cell thin, so dropping it stays below the midpoint-rule error.
          if (e.kind() != errc::endpoint_proximity && e.kind() != errc::degenerate_pair) throw;
        }
      }
    }
    out[p] = acc * vol;
  }
  return out;
}

CalibrationResult calibrate_constant(std::span<const double> measured,
                                     std::span<const double> predicted) {
  if (measured.size() != predicted.size() || measured.empty())
    throw config_error(errc::contract_violation, "calibration needs matching nonempty samples");
  double spp = 0.0, sep = 0.0, see = 0.0;
  for (std::size_t i = 0; i < measured.size(); ++i) {
    spp += predicted[i] * predicted[i];
    sep += measured[i] * predicted[i];
    see += measured[i] * measured[i];
  }
  if (spp <= 1e-12 * see || (spp == 0.0 && see == 0.0))
    throw numerical_error(errc::unidentifiable_constant,
                          "predicted error signal is too small to calibrate against "
                          "(ellipsoidal domains admit no identifiable constant)");
  CalibrationResult r;
  r.c = sep / spp;
  double rr = 0.0;
  for (std::size_t i = 0; i < measured.size(); ++i) {
    const double d = measured[i] - r.c * predicted[i];
    rr += d * d;
  }
  r.fit_residual = (see > 0.0) ? std::sqrt(rr / see) : 0.0;
  return r;
}

Backprojection::Backprojection(const FilteredData& data)
    : dim_(data.dim), boundary_(data.boundary), r_max_(data.r_max) {
  n_table_ = 1025;
  table_max_ = 0.99 * r_max_;
  const int nc = static_cast<int>(boundary_.size());
  table_.resize(nc);
  const double R = r_max_;
  static const quad::Rule base = quad::gauss_legendre(1024);
  const quad::Rule gl = quad::mapped(base, 0.0, R);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < nc; ++i) {
    std::vector<double>& tab = table_[i];
    tab.assign(n_table_, 0.0);
    const std::vector<double>& gc = data.g[i];
    if (dim_ == 3) {
      for (int k = 0; k < n_table_; ++k) {
        const double d = table_max_ * k / (n_table_ - 1);
        tab[k] = cheb::eval(gc, 2.0 * d / R - 1.0);
      }
      continue;
    }
    // n=2: principal-value inner integral by singularity subtraction:
    //   pv int_0^R g/(r^2-d^2) dr
    //     = int_0^R (g(r)-g(d))/(r^2-d^2) dr + g(d)/(2d) log((R-d)/(R+d)).
    std::vector<double> gvals(gl.x.size());
    for (std::size_t j = 0; j < gl.x.size(); ++j)
      gvals[j] = cheb::eval(gc, 2.0 * gl.x[j] / R - 1.0);
    for (int k = 0; k < n_table_; ++k) {
      const double d = table_max_ * k / (n_table_ - 1);
      const double gd = cheb::eval(gc, 2.0 * d / R - 1.0);
      const double d2 = d * d;
      double s = 0.0;
      for (std::size_t j = 0; j < gl.x.size(); ++j)
        s += gl.w[j] * (gvals[j] - gd) / (gl.x[j] * gl.x[j] - d2);
      if (d > 1e-14) s += gd * std::log((R - d) / (R + d)) / (2.0 * d);
      tab[k] = s;
    }
  }
}

double Backprojection::interp(int center, double d) const {
  const double hT = table_max_ / (n_table_ - 1);
  const double t = d / hT;
  int k0 = static_cast<int>(std::floor(t)) - 1;
  k0 = std::clamp(k0, 0, n_table_ - 4);
  const std::vector<double>& tab = table_[center];
  double acc = 0.0;
  for (int m = 0; m < 4; ++m) {
    double w = 1.0;
    for (int l = 0; l < 4; ++l) {
      if (l == m) continue;
      w *= (t - (k0 + l)) / static_cast<double>(m - l);
    }
    acc += w * tab[k0 + m];
  }
  return acc;
}

double Backprojection::operator()(const Vec3& x0) const {
  double acc = 0.0;
  const int nc = static_cast<int>(boundary_.size());
  for (int i = 0; i < nc; ++i) {
    const Vec3 diff = x0 - boundary_.nodes[i];
    const double d = diff.norm();
    if (d > table_max_)
      throw numerical_error(errc::out_of_domain,
                            "backprojection point farther from a boundary center than the "
                            "radial data reaches");
    const double flux = dot(boundary_.normals[i], diff) * boundary_.weights[i];
    if (dim_ == 2) {
      acc += flux * interp(i, d);
    } else {
      acc += flux / d * interp(i, d);
    }
  }
  return acc / M_PI;
}

ScalarGrid Backprojection::reconstruct(const GridSpec& spec, const ConvexDomain* mask) const {
  ScalarGrid g;
  g.spec = spec;
  g.values.assign(spec.count(), 0.0);
  const int nz = (spec.dim == 3) ? spec.nz : 1;
#pragma omp parallel for collapse(2) schedule(dynamic)
  for (int i = 0; i < spec.nx; ++i) {
    for (int j = 0; j < spec.ny; ++j) {
      for (int k = 0; k < nz; ++k) {
        const Vec3 c = spec.center(i, j, k);
        if (mask != nullptr && !mask->contains(c)) continue;
        g.values[spec.index(i, j, k)] = (*this)(c);
      }
    }
  }
  return g;
}

namespace {

double relative_l2(const ScalarGrid& f, const ScalarGrid& truth) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < truth.values.size(); ++i) {
    const double d = f.values[i] - truth.values[i];
    num += d * d;
    den += truth.values[i] * truth.values[i];
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace

NeumannResult neumann_solve(const Backprojection& ub, const ErrorKernel& kernel, double c,
                            const GridSpec& spec, const ConvexDomain& dom, int steps,
                            const ScalarGrid* truth) {
  if (spec.dim != 2)
    throw config_error(errc::unsupported_dimension, "Neumann correction is the planar variant");
  if (steps < 1) throw config_error(errc::contract_violation, "need at least one step");
  if (truth && truth->values.size() != spec.count())
    throw config_error(errc::contract_violation,
                       "truth grid does not match the reconstruction grid");
  NeumannResult res;
  const ScalarGrid f0 = ub.reconstruct(spec, &dom);
  if (truth) res.error_norms.push_back(relative_l2(f0, *truth));
  std::vector<std::size_t> inside;
  std::vector<Vec3> probes;
  for (int i = 0; i < spec.nx; ++i) {
    for (int j = 0; j < spec.ny; ++j) {
      const Vec3 x = spec.center(i, j, 0);
      if (dom.contains(x)) {
        inside.push_back(spec.index(i, j, 0));
        probes.push_back(x);
      }
    }
  }
  ScalarGrid fk = f0;
  double prev_corr = 0.0;
  for (int step = 1; step <= steps; ++step) {
    const std::vector<double> pred = apply_error_operator(kernel, fk, probes);
    ScalarGrid fn = f0;
    for (std::size_t p = 0; p < inside.size(); ++p) fn.values[inside[p]] += c * pred[p];
    double corr = 0.0;
    for (std::size_t idx = 0; idx < fn.values.size(); ++idx) {
      const double d = fn.values[idx] - fk.values[idx];
      corr += d * d;
    }
    corr = std::sqrt(corr);
    if (!std::isfinite(corr) || (step >= 2 && corr > 1.05 * prev_corr))
      throw numerical_error(errc::divergence,
                            "Neumann correction is not contracting (correction norm " +
                                std::to_string(corr) + " after step " + std::to_string(step) +
                                ")");
    res.correction_norms.push_back(corr);
    prev_corr = corr;
    fk = std::move(fn);
    if (truth) res.error_norms.push_back(relative_l2(fk, *truth));
  }
  res.f = std::move(fk);
  return res;
}

}  // namespace mradon
