#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "doctest.h"
#include "mradon/forward.hpp"
#include "mradon/geometry.hpp"

using namespace mradon;

namespace {
double bump_profile(double s) {  // unit bump as a function of |x-c|/radius
  return s < 1.0 ? std::exp(1.0 + 1.0 / (s * s - 1.0)) : 0.0;
}
}  // namespace

TEST_CASE("bump values: peak at the center, compact support, smooth falloff") {
  const Bump b{Vec3{0.3, -0.2, 0.0}, 0.5, 2.0};
  CHECK(b.value(b.center) == doctest::Approx(2.0));
  CHECK(b.value(Vec3{0.8, -0.2, 0.0}) == 0.0);          // on the support edge
  CHECK(b.value(Vec3{1.5, 0.0, 0.0}) == 0.0);           // outside
  CHECK(b.value(Vec3{0.55, -0.2, 0.0}) ==
        doctest::Approx(2.0 * bump_profile(0.5)).epsilon(1e-14));
  Phantom ph{{b, Bump{Vec3{0.0, 0.0, 0.0}, 0.2, -1.0}}};
  CHECK(ph.value(Vec3{0.0, 0.0, 0.0}) ==
        doctest::Approx(-1.0 + 2.0 * bump_profile(std::hypot(0.3, 0.2) / 0.5)).epsilon(1e-13));
  CHECK(ph.sup_norm() == doctest::Approx(2.0));
}

TEST_CASE("spherical means reduce to the radial profile about the bump center") {
  // Averaging a radially symmetric function over spheres centered at its own
  // center gives back the radial profile exactly, in both dimensions.
  const Phantom ph{{Bump{Vec3{0.25, -0.1, 0.0}, 0.4, 1.7}}};
  for (double r : {0.05, 0.15, 0.3, 0.39, 0.5}) {
    CHECK(spherical_mean(ph, ph.bumps[0].center, r, 2) ==
          doctest::Approx(1.7 * bump_profile(r / 0.4)).epsilon(1e-12));
  }
  const Phantom ph3{{Bump{Vec3{0.1, 0.2, -0.3}, 0.35, 0.9}}};
  for (double r : {0.1, 0.2, 0.34, 0.4}) {
    CHECK(spherical_mean(ph3, ph3.bumps[0].center, r, 3) ==
          doctest::Approx(0.9 * bump_profile(r / 0.35)).epsilon(1e-10));
  }
}

TEST_CASE("planar spherical mean matches adaptive quadrature off center") {
  const Phantom ph{{Bump{Vec3{0.3, 0.1, 0.0}, 0.45, 1.0}}};
  const Vec3 x{-0.2, 0.35, 0.0};
  for (double r : {0.3, 0.55, 0.8}) {
    const auto integrand = [&](double th) {
      return ph.value(Vec3{x.x + r * std::cos(th), x.y + r * std::sin(th), 0.0});
    };
    const double ref = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
                           integrand, 0.0, 2.0 * M_PI, 12, 1e-13) /
                       (2.0 * M_PI);
    CHECK(spherical_mean(ph, x, r, 2) == doctest::Approx(ref).epsilon(1e-10));
  }
}

TEST_CASE("means datasets: layout, radial grid, and conserved mass per center") {
  const Ellipsoid e(1.6, 1.0, Vec3{0.1, 0.0, 0.0}, 0.2);
  const Phantom ph{{Bump{Vec3{0.3, 0.2, 0.0}, 0.35, 1.0},
                    Bump{Vec3{-0.4, -0.1, 0.0}, 0.3, 0.6}}};
  const MeansData data = means_dataset(e, ph, 64, 256);
  CHECK(data.dim == 2);
  CHECK(data.boundary.size() == 64);
  CHECK(data.n_r == 256);
  CHECK(data.r(0) == 0.0);
  CHECK(data.r(255) == doctest::Approx(data.r_max));
  CHECK(data.values.size() == 64 * 256);
  // mass identity: for every center x, integral of M(x, r) 2 pi r dr equals
  // the phantom's total mass
  std::vector<double> masses;
  for (int i : {0, 17, 45}) {
    double m = 0.0;
    for (int j = 0; j < data.n_r; ++j)
      m += data.at(i, j) * 2.0 * M_PI * data.r(j);
    m *= data.r_max / (data.n_r - 1);
    masses.push_back(m);
  }
  // the spread is set by the angular quadrature inside each mean (measured
  // ~3e-7 relative, independent of the radial count), not by the radial sum
  CHECK(masses[1] == doctest::Approx(masses[0]).epsilon(1e-6));
  CHECK(masses[2] == doctest::Approx(masses[0]).epsilon(1e-6));

  // linearity in the phantom
  const Phantom pa{{ph.bumps[0]}}, pb{{ph.bumps[1]}};
  const MeansData da = means_dataset(e, pa, 64, 256), db = means_dataset(e, pb, 64, 256);
  for (int j : {3, 100, 200})
    CHECK(data.at(20, j) == doctest::Approx(da.at(20, j) + db.at(20, j)).epsilon(1e-12));
}

TEST_CASE("means are equivariant under rotating the whole scene") {
  const double ang = 0.9;
  const Ellipsoid e0(1.5, 1.0), e1(1.5, 1.0, Vec3{}, ang);
  const double ca = std::cos(ang), sa = std::sin(ang);
  const Vec3 c0{0.4, 0.2, 0.0};
  const Vec3 c1{ca * c0.x - sa * c0.y, sa * c0.x + ca * c0.y, 0.0};
  const Phantom p0{{Bump{c0, 0.3, 1.0}}}, p1{{Bump{c1, 0.3, 1.0}}};
  const MeansData d0 = means_dataset(e0, p0, 48, 128), d1 = means_dataset(e1, p1, 48, 128);
  // boundary charts rotate together with the body, so center i matches center
  // i; the residual is the angular quadrature sampling different nodes in the
  // rotated frame (measured ~6e-8)
  for (int i : {0, 11, 30})
    for (int j : {10, 64, 120})
      CHECK(std::abs(d0.at(i, j) - d1.at(i, j)) < 1e-6);
}

TEST_CASE("phantoms touching the boundary are refused") {
  const Ellipsoid e(1.0, 1.0);
  const Phantom bad{{Bump{Vec3{0.7, 0.0, 0.0}, 0.4, 1.0}}};  // pokes outside
  CHECK_THROWS_AS(means_dataset(e, bad, 32, 64), config_error);
  const Phantom touching{{Bump{Vec3{0.6, 0.0, 0.0}, 0.4, 1.0}}};  // tangent
  CHECK_THROWS_AS(means_dataset(e, touching, 32, 64), config_error);
}

TEST_CASE("radial filter reproduces closed-form derivative chains") {
  // Synthetic single-center datasets with polynomial radial data.
  auto make = [](int dim, double r_max, int n_r, double (*f)(double)) {
    MeansData d;
    d.dim = dim;
    d.boundary.dim = dim;
    d.boundary.nodes = {Vec3{}};
    d.boundary.normals = {Vec3{1, 0, 0}};
    d.boundary.weights = {1.0};
    d.r_max = r_max;
    d.n_r = n_r;
    d.values.resize(n_r);
    for (int j = 0; j < n_r; ++j) d.values[j] = f(r_max * j / (n_r - 1));
    return d;
  };
  SUBCASE("planar: d/dr of r^3 is 3 r^2") {
    const MeansData d = make(2, 2.0, 256, [](double r) { return r * r * r; });
    const FilteredData g = radial_filter(d);
    CHECK(g.max_tail() < 1e-12);
    for (double r : {0.2, 0.9, 1.7})
      CHECK(g.value(0, r) == doctest::Approx(3.0 * r * r).epsilon(1e-9));
  }
  SUBCASE("spatial: the odd-dimension chain maps r^3 to 4 r") {
    const MeansData d = make(3, 2.0, 256, [](double r) { return r * r * r; });
    const FilteredData g = radial_filter(d);
    for (double r : {0.3, 1.0, 1.6})
      CHECK(g.value(0, r) == doctest::Approx(4.0 * r).epsilon(1e-8));
  }
  SUBCASE("constants are annihilated in both dimensions") {
    for (int dim : {2, 3}) {
      const MeansData d = make(dim, 1.5, 128, [](double) { return 2.5; });
      const FilteredData g = radial_filter(d);
      for (double r : {0.2, 0.7, 1.3})
        CHECK(std::abs(g.value(0, r)) < 1e-10);
    }
  }
  SUBCASE("outside the radial window the filtered data vanishes") {
    const MeansData d = make(2, 1.0, 128, [](double r) { return r; });
    const FilteredData g = radial_filter(d);
    CHECK(g.value(0, 1.5) == 0.0);
    CHECK(g.value(0, -0.1) == 0.0);
  }
}

TEST_CASE("rasterize samples cell centers") {
  const Phantom ph{{Bump{Vec3{0.0, 0.0, 0.0}, 0.5, 1.0}}};
  GridSpec spec;
  spec.dim = 2;
  spec.nx = spec.ny = 8;
  spec.nz = 1;
  spec.x0 = spec.y0 = -1.0;
  spec.dx = spec.dy = 0.25;
  spec.dz = 1.0;
  const ScalarGrid g = rasterize(ph, spec);
  for (int i : {0, 3, 7})
    for (int j : {1, 4, 6})
      CHECK(g.values[spec.index(i, j, 0)] ==
            doctest::Approx(ph.value(spec.center(i, j, 0))).epsilon(1e-14));
}
