#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "mradon/errors.hpp"

// Chebyshev toolkit: node families, fits by discrete cosine sums, Clenshaw
// evaluation, spectral differentiation, and the basis manipulations needed by
// the factored chord profiles (second-kind conversion, (1+u) division,
// weighted arch integrals).
namespace mradon::cheb {

// First-kind Chebyshev-Gauss nodes u_i = cos((2i+1)pi/(2N)), i = 0..N-1.
// They exclude the endpoints, which is what lets profile fits divide by
// (1-u^2)^{(n-1)/2} safely.
inline std::vector<double> gauss_nodes(int n) {
  std::vector<double> u(n);
  for (int i = 0; i < n; ++i) u[i] = std::cos((2.0 * i + 1.0) * M_PI / (2.0 * n));
  return u;
}

// Chebyshev-Lobatto nodes u_j = cos(pi j / N), j = 0..N (N+1 points, endpoints included).
inline std::vector<double> lobatto_nodes(int n) {
  std::vector<double> u(n + 1);
  for (int j = 0; j <= n; ++j) u[j] = std::cos(M_PI * j / n);
  return u;
}

// Interpolating T-coefficients from values at gauss_nodes(N).
// a_k = (2 - delta_{k0})/N * sum_i v_i T_k(u_i), computed by the three-term
// recurrence (no trig in the inner loop).
inline std::vector<double> fit_gauss(std::span<const double> values) {
  const int n = static_cast<int>(values.size());
  std::vector<double> a(n, 0.0);
  const std::vector<double> u = gauss_nodes(n);
  for (int i = 0; i < n; ++i) {
    const double vi = values[i];
    double tkm = 1.0, tk = u[i];
    a[0] += vi;
    if (n > 1) a[1] += vi * tk;
    for (int k = 2; k < n; ++k) {
      const double tkp = 2.0 * u[i] * tk - tkm;
      a[k] += vi * tkp;
      tkm = tk;
      tk = tkp;
    }
  }
  a[0] /= n;
  for (int k = 1; k < n; ++k) a[k] *= 2.0 / n;
  return a;
}

// Interpolating T-coefficients from values at lobatto_nodes(N) (N+1 values).
// DCT-I: a_k = (2/N) * sum''_j v_j cos(pi k j / N), end terms halved, and the
// k = 0, N coefficients halved once more.
inline std::vector<double> fit_lobatto(std::span<const double> values) {
  const int np = static_cast<int>(values.size());
  const int n = np - 1;
  const std::vector<double> u = lobatto_nodes(n);
  std::vector<double> a(np, 0.0);
  for (int j = 0; j <= n; ++j) {
    const double w = (j == 0 || j == n) ? 0.5 : 1.0;
    const double vj = values[j] * w;
    double tkm = 1.0, tk = u[j];
    a[0] += vj;
    if (n >= 1) a[1] += vj * tk;
    for (int k = 2; k <= n; ++k) {
      const double tkp = 2.0 * u[j] * tk - tkm;
      a[k] += vj * tkp;
      tkm = tk;
      tk = tkp;
    }
  }
  for (int k = 0; k <= n; ++k) a[k] *= 2.0 / n;
  a[0] *= 0.5;
  a[n] *= 0.5;
  return a;
}

// Clenshaw evaluation of sum a_k T_k(x).
inline double eval(std::span<const double> a, double x) {
  const int n = static_cast<int>(a.size());
  if (n == 0) return 0.0;
  double b1 = 0.0, b2 = 0.0;
  for (int k = n - 1; k >= 1; --k) {
    const double b0 = 2.0 * x * b1 - b2 + a[k];
    b2 = b1;
    b1 = b0;
  }
  return x * b1 - b2 + a[0];
}

inline double eval_at_plus1(std::span<const double> a) {
  double s = 0.0;
  for (double c : a) s += c;
  return s;
}

inline double eval_at_minus1(std::span<const double> a) {
  double s = 0.0;
  double sign = 1.0;
  for (double c : a) {
    s += sign * c;
    sign = -sign;
  }
  return s;
}

// Coefficients of d/dx sum a_k T_k, times an optional chain-rule scale.
inline std::vector<double> derivative(std::span<const double> a, double scale = 1.0) {
  const int n = static_cast<int>(a.size());
  if (n <= 1) return {0.0};
  std::vector<double> d(n - 1, 0.0);
  double bkp1 = 0.0, bkp2 = 0.0;  // d_{k+1}, d_{k+2}
  for (int k = n - 2; k >= 0; --k) {
    const double dk = bkp2 + 2.0 * (k + 1) * a[k + 1];
    d[k] = dk;
    bkp2 = bkp1;
    bkp1 = dk;
  }
  d[0] *= 0.5;
  for (double& c : d) c *= scale;
  return d;
}

// Relative magnitude of the trailing `frac` share of coefficients; the
// non-convergence metric (computed before any chopping).
inline double tail_fraction(std::span<const double> a, double frac = 0.1) {
  const int n = static_cast<int>(a.size());
  if (n == 0) return 0.0;
  double amax = 0.0;
  for (double c : a) amax = std::max(amax, std::abs(c));
  if (amax == 0.0) return 0.0;
  const int ntail = std::max(1, static_cast<int>(n * frac));
  double tmax = 0.0;
  for (int k = n - ntail; k < n; ++k) tmax = std::max(tmax, std::abs(a[k]));
  return tmax / amax;
}

// Truncate trailing coefficients below rel * max|a_k| (spectral denoising;
// keeps at least one coefficient).
inline std::vector<double> chop(std::vector<double> a, double rel = 1e-13) {
  double amax = 0.0;
  for (double c : a) amax = std::max(amax, std::abs(c));
  int last = 0;
  for (int k = 0; k < static_cast<int>(a.size()); ++k)
    if (std::abs(a[k]) > rel * amax) last = k;
  a.resize(last + 1);
  return a;
}

// T-coefficients -> U-coefficients of the same polynomial:
// beta_0 = a_0 - a_2/2, beta_j = (a_j - a_{j+2})/2.
inline std::vector<double> to_second_kind(std::span<const double> a) {
  const int n = static_cast<int>(a.size());
  std::vector<double> b(n, 0.0);
  for (int j = 0; j < n; ++j) {
    double v = a[j] / (j >= 1 ? 2.0 : 1.0);
    if (j + 2 < n) v -= a[j + 2] / 2.0;
    b[j] = v;
  }
  return b;
}

// Coefficients of u * sum a_k T_k (one degree longer).
inline std::vector<double> multiply_by_u(std::span<const double> a) {
  const int n = static_cast<int>(a.size());
  std::vector<double> out(n + 1, 0.0);
  if (n == 0) return out;
  out[1] += a[0];
  for (int k = 1; k < n; ++k) {
    out[k + 1] += 0.5 * a[k];
    out[k - 1] += 0.5 * a[k];
  }
  return out;
}

// Coefficients of (1 - u^2) * sum a_k T_k.
inline std::vector<double> multiply_one_minus_u2(std::span<const double> a) {
  std::vector<double> u2a = multiply_by_u(multiply_by_u(a));
  std::vector<double> out(u2a.size(), 0.0);
  for (size_t k = 0; k < a.size(); ++k) out[k] = a[k];
  for (size_t k = 0; k < u2a.size(); ++k) out[k] -= u2a[k];
  return out;
}

// Solve (1 + u) b(u) = c(u) in the T-basis by the stable descending
// recurrence. Requires c(-1) = 0 (the caller removes any rounding residual);
// the achieved backward residual is that of the interpolation itself.
inline std::vector<double> divide_one_plus_u(std::span<const double> c_in) {
  std::vector<double> c(c_in.begin(), c_in.end());
  const int n = static_cast<int>(c.size());
  if (n <= 1) return {0.0};
  // Force c(-1) = 0 exactly by absorbing the rounding residual into c_0.
  c[0] -= eval_at_minus1(c);
  std::vector<double> b(n - 1, 0.0);
  double bk = 0.0, bkp = 0.0;  // b_m, b_{m+1} while descending m
  for (int m = n - 1; m >= 2; --m) {
    const double bm1 = 2.0 * (c[m] - bk) - bkp;
    b[m - 1] = bm1;
    bkp = bk;
    bk = bm1;
  }
  b[0] = c[1] - bkp * 0.5 - bk;  // c_1 = b_1 + b_0 + b_2/2  (b_0 full weight)
  return b;
}

// integral over [-1,1] of (1-u^2)^{half_power/2} * (sum a_k T_k(u)) * (B + C u)^k_pow du,
// by the u = cos(theta) trapezoid rule (the Clenshaw-Curtis machinery for this
// weight; spectrally accurate for half_power odd, O(N^-4)+ for even).
inline double arch_integral(std::span<const double> a, int half_power, double B, double C,
                            int k_pow, int npts = 1024) {
  double s = 0.0;
  const double h = M_PI / npts;
  for (int i = 1; i < npts; ++i) {
    const double th = i * h;
    const double sn = std::sin(th), u = std::cos(th);
    double w = sn;  // du factor
    for (int m = 0; m < half_power; ++m) w *= sn;
    double poly = 1.0;
    const double lin = B + C * u;
    for (int m = 0; m < k_pow; ++m) poly *= lin;
    s += w * poly * eval(a, u);
  }
  return s * h;
}

}  // namespace mradon::cheb
