#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <random>

#include "doctest.h"
#include "mradon/geometry.hpp"
#include "mradon/rigidity.hpp"

using namespace mradon;

namespace {
Vec3 dir2(double th) { return {std::cos(th), std::sin(th), 0.0}; }
}  // namespace

TEST_CASE("slice moments of ellipses match closed forms") {
  const double a = 2.0, b = 1.0;
  SUBCASE("centered: k = 0, 1, 2") {
    const Ellipsoid e(a, b);
    for (double th : {0.1, 0.9, 2.2}) {
      const Vec3 w = dir2(th);
      const double h = std::sqrt(a * a * w.x * w.x + b * b * w.y * w.y);
      CHECK(moment(e, w, 0) == doctest::Approx(M_PI * a * b).epsilon(1e-10));
      CHECK(moment(e, w, 1) == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
      CHECK(moment(e, w, 2) == doctest::Approx(M_PI * a * b * h * h / 4.0).epsilon(1e-10));
    }
  }
  SUBCASE("translated: the first moment is mass times center offset") {
    const Vec3 c{0.6, -0.35, 0.0};
    const Ellipsoid e(a, b, c, 0.7);
    for (double th : {0.3, 1.4}) {
      const Vec3 w = dir2(th);
      CHECK(moment(e, w, 0) == doctest::Approx(M_PI * a * b).epsilon(1e-10));
      CHECK(moment(e, w, 1) == doctest::Approx(M_PI * a * b * c.dot(w)).epsilon(1e-9));
    }
  }
}

TEST_CASE("superellipse mass matches the Gamma-function closed form") {
  const double a1 = 2.0, a2 = 1.0;
  for (int p : {4, 6}) {
    const Superellipse se(p, a1, a2);
    const double area = 4.0 * a1 * a2 *
                        boost::math::tgamma(1.0 + 1.0 / p) *
                        boost::math::tgamma(1.0 + 1.0 / p) /
                        boost::math::tgamma(1.0 + 2.0 / p);
    CHECK(moment(se, dir2(0.4), 0) == doctest::Approx(area).epsilon(1e-9));
    CHECK(moment(se, dir2(1.7), 0) == doctest::Approx(area).epsilon(1e-9));
  }
}

TEST_CASE("arch-model moment residuals separate ellipses from superellipses") {
  const Ellipsoid e(2.0, 1.0, Vec3{0.3, 0.1, 0.0}, 0.5);
  for (int k : {0, 1, 2})
    CHECK(moment_residual(e, k, 32) < 1e-10);
  const Superellipse se(4, 2.0, 1.0);
  CHECK(moment_residual(se, 2, 32) > 1e-2);
  CHECK(moment_residual(se, 0, 32) > 5e-2);
  // odd moments vanish by central symmetry, for every centered body
  CHECK(moment_residual(se, 1, 32) < 1e-10);
}

TEST_CASE("support midpoints recover the center of symmetric bodies") {
  const Vec3 c{0.8, -0.55, 0.0};
  const CenterEstimate ce = estimate_center(Ellipsoid(1.7, 0.9, c, 1.1));
  CHECK((ce.center - c).norm() < 1e-12);
  CHECK(ce.residual < 1e-12);
  const CenterEstimate cs = estimate_center(Superellipse(6, 1.4, 0.8, c, 0.3));
  CHECK((cs.center - c).norm() < 1e-10);
  CHECK(cs.residual < 1e-10);
}

TEST_CASE("quadratic width fit recovers ellipse semi-axes and pose") {
  const double ang = 0.65;
  const QuadraticEstimate qe = estimate_quadratic_form(Ellipsoid(2.0, 1.0, Vec3{0.4, 0.2, 0.0}, ang));
  CHECK(qe.residual < 1e-12);
  CHECK(qe.semi_axes[0] == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(qe.semi_axes[1] == doctest::Approx(1.0).epsilon(1e-10));
  // leading principal direction is the rotated x-axis (up to sign)
  const double align = std::abs(qe.axes[0] * std::cos(ang) + qe.axes[1] * std::sin(ang));
  CHECK(align == doctest::Approx(1.0).epsilon(1e-10));

  const QuadraticEstimate qb = estimate_quadratic_form(Ellipsoid::ball(1.3));
  for (int i = 0; i < 3; ++i) CHECK(qb.semi_axes[i] == doctest::Approx(1.3).epsilon(1e-10));

  // the superellipse width data is not quadratic: a large residual remains
  CHECK(estimate_quadratic_form(Superellipse(4, 2.0, 1.0)).residual > 1e-2);
}

TEST_CASE("tangency exponents: regular value, irregular refusal") {
  const Ellipsoid e(1.5, 1.0);
  CHECK(endpoint_exponent(e, dir2(0.0)) == doctest::Approx(0.5).epsilon(5e-2));
  CHECK(endpoint_exponent(e, dir2(1.2)) == doctest::Approx(0.5).epsilon(5e-2));
  CHECK(endpoint_exponent(Ellipsoid::ball(1.0), Vec3{0.0, 0.0, 1.0}) ==
        doctest::Approx(1.0).epsilon(5e-2));
  const Superellipse se(4, 2.0, 1.0);
  // the axis tangency points are flat: refused instead of fitted
  CHECK_THROWS_AS(endpoint_exponent(se, dir2(0.0)), numerical_error);
  // generic directions are regular
  CHECK(endpoint_exponent(se, dir2(0.8)) == doctest::Approx(0.5).epsilon(5e-2));
}

TEST_CASE("rigidity verdicts separate the model bodies") {
  const RigidityReport re = rigidity_report(Ellipsoid(2.0, 1.0, Vec3{0.5, -0.3, 0.0}, 1.2), 16);
  CHECK(re.verdict == RigidityReport::Verdict::ellipsoid_consistent);
  CHECK(re.kernel_signal < 1e-4);
  const RigidityReport rs = rigidity_report(Superellipse(4, 2.0, 1.0), 16);
  CHECK(rs.verdict == RigidityReport::Verdict::non_ellipsoid);
  CHECK(rs.kernel_signal > 1e-3);
  CHECK(rs.irregular_directions > 0);  // probe set includes the axis directions
  CHECK(!rs.reasons.empty());
}

TEST_CASE("verdicts and signals are invariant under rigid motions and scaling") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI), off(-1.0, 1.0);
  const RigidityReport base = rigidity_report(Superellipse(6, 2.0, 1.0), 16);
  for (int trial = 0; trial < 2; ++trial) {
    const Superellipse moved(6, 2.0, 1.0, Vec3{off(rng), off(rng), 0.0}, ang(rng));
    const RigidityReport rep = rigidity_report(moved, 16);
    CHECK(rep.verdict == RigidityReport::Verdict::non_ellipsoid);
    // the quadratic fit samples world-frame directions, so for a body that no
    // quadric matches exactly the fitted axes drift at the fit-residual scale
    // under rotation (measured up to 7e-4 relative)
    CHECK(rep.quadratic.semi_axes[0] ==
          doctest::Approx(base.quadratic.semi_axes[0]).epsilon(5e-3));
  }
  // doubling the body leaves the dimensionless kernel signal unchanged
  const RigidityReport doubled = rigidity_report(Superellipse(6, 4.0, 2.0), 16);
  CHECK(doubled.kernel_signal == doctest::Approx(base.kernel_signal).epsilon(1e-6));
}

TEST_CASE("too few probe directions are refused") {
  CHECK_THROWS_AS(rigidity_report(Ellipsoid(1.0, 1.0), 4), config_error);
}
