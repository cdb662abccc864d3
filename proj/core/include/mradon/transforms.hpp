#pragma once

#include <functional>
#include <vector>

#include "mradon/geometry.hpp"
#include "mradon/vec.hpp"

namespace mradon {

// Per-direction slice function t -> Rchi(w,t) = (n-1)-volume of the slice
// {x.w = t}, held in factored spectral form:
//   Rchi(w, B + C u) = (1 - u^2)^{(n-1)/2} * psi(u),  u in [-1,1],
// with psi expanded in first-kind Chebyshev polynomials. The factor carries
// the exact endpoint behavior at regular directions, so Hilbert transforms
// and s-derivatives act spectrally instead of amplifying endpoint noise.
struct ChordProfile {
  Vec3 omega;
  SupportInterval interval;
  double B = 0.0, C = 0.0;  // midpoint (h+ + h-)/2 and half-width (h+ - h-)/2
  int dim = 2;
  int mode_count = 0;
  std::vector<double> psi;  // chopped T-coefficients of psi(u)
  double tail = 0.0;        // pre-chop relative tail magnitude (last 10%)
  bool converged = true;    // tail <= 1e-4

  double tau(double t) const { return (t - B) / C; }
  // Reconstructed slice volume; 0 outside [h-, h+].
  double value(double t) const;
};

// H(Rchi)(w, .) as first-kind Chebyshev coefficients in tau on [h-, h+]
// (the finite Hilbert transform is invariant under the affine pull-back).
struct HilbertProfile {
  Vec3 omega;
  double B = 0.0, C = 0.0;
  std::vector<double> coeffs;
  double tail = 0.0;
  bool converged = true;

  double value(double s) const;
};

// Slice volume by direct geometric root-finding (bisection to machine
// precision along the slice). n=2: chord length; n=3: slice area via the
// (1/2) integral of rho^2 over 256 in-plane angles. Returns 0 off [h-, h+].
double radon_chi(const ConvexDomain& dom, const Vec3& w, double t);

// Factored spectral fit of the slice function at mode_count Chebyshev-Gauss
// nodes. mode_count >= 16. Non-convergence (tail > 1e-4, expected near
// zero-curvature directions) is flagged on the result, not thrown.
ChordProfile chord_profile(const ConvexDomain& dom, const Vec3& w, int mode_count = 129);

// Finite Hilbert transform H F(t) = (1/pi) p.v. integral F(s)/(t-s) ds of the
// profile, via the second-kind basis map sqrt(1-u^2) U_k -> T_{k+1}. n=2 only.
HilbertProfile hilbert_finite(const ChordProfile& profile);

// d^order/ds^order of the represented function at s, by exact term-by-term
// differentiation of the factored form and chain-rule scaling. order <= n;
// s must be at least 0.02*(h+ - h-) away from both endpoints.
double chord_derivative(const ChordProfile& profile, int order, double s);
double chord_derivative(const HilbertProfile& profile, int order, double s);

// max_t | H(s phi)(t) - t H(phi)(t) + (1/pi) integral(phi) | over an interior
// test grid, for smooth phi supported on [a,b] vanishing at least like a
// square root at the endpoints.
double intertwine_check(const std::function<double(double)>& phi, double a, double b,
                        int modes = 257);

// Explicit finite inverse Hilbert transform on [a,b]:
//   F(t) = ( -pi C sum gamma_k T_{k+1}(tau) + mean ) / ( pi C sqrt(1-tau^2) ),
// where gamma are second-kind coefficients of G at Chebyshev U-nodes and
// mean = integral of F. Evaluation outside (a,b) raises out-of-range.
struct HilbertInverse {
  double a = 0.0, b = 0.0, mean = 0.0;
  std::vector<double> gamma;
  double value(double t) const;
};
HilbertInverse hilbert_inverse_finite(const std::function<double(double)>& G, double a,
                                      double b, double mean, int modes = 257);

}  // namespace mradon
