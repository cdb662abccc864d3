#pragma once

#include <cmath>
#include <vector>

namespace mradon::quad {

struct Rule {
  std::vector<double> x, w;
  int size() const { return static_cast<int>(x.size()); }
};

// Gauss-Legendre nodes/weights on [-1,1] via Newton iteration on P_n.
inline Rule gauss_legendre(int n) {
  Rule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    r.x[i] = -x;
    r.x[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    r.w[i] = w;
    r.w[n - 1 - i] = w;
  }
  return r;
}

// Map a [-1,1] rule to [a,b] in place.
inline Rule mapped(const Rule& r, double a, double b) {
  Rule m = r;
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  for (int i = 0; i < m.size(); ++i) {
    m.x[i] = c + h * r.x[i];
    m.w[i] = h * r.w[i];
  }
  return m;
}

}  // namespace mradon::quad
