#include <doctest.h>

#include "oracles.hpp"

#include <fingeo/curveflow.hpp>
#include <fingeo/errors.hpp>
#include <fingeo/geodesic.hpp>

using namespace fingeo;

TEST_CASE("perimeter oracles agree") {
  for (auto [a, b] : {std::pair{1.0, 1.1}, {1.0, 1.2}, {1.1, 1.2}, {1.0, 1.0}}) {
    CHECK(oracle::ellipse_perimeter(a, b) == doctest::Approx(oracle::ellipse_perimeter_quadrature(a, b)).epsilon(1e-13));
  }
  CHECK(oracle::ellipse_perimeter(1.0, 1.0) == doctest::Approx(2 * kPi).epsilon(1e-15));
}

TEST_CASE("round great-circle flow") {
  const FinslerMetric m = make_round();
  const GeodesicState s{Vec3(1, 0, 0), Vec3(0, 1, 0)};
  const GeodesicState half = flow_to(m, s, kPi);
  CHECK((half.x - Vec3(-1, 0, 0)).norm() < 1e-8);
  CHECK((half.v - Vec3(0, -1, 0)).norm() < 1e-8);
  const GeodesicArc full = flow(m, s, 2 * kPi);
  CHECK((full.samples.back().x - s.x).norm() < 1e-8);
  CHECK((full.samples.back().v - s.v).norm() < 1e-8);
  CHECK(full.speed_drift < 1e-12);
}

TEST_CASE("negative times run the reversed geodesic") {
  const FinslerMetric m = make_quartic(0.1);
  const GeodesicState s = unit_state(m, Vec3(0.6, 0, 0.8), Vec3(0, 1, 0));
  const GeodesicState fwd = flow_to(m, s, 1.3);
  const GeodesicState back = flow_to(m, fwd, -1.3);
  CHECK(closure_error(back, s) < 1e-10);
}

TEST_CASE("planar ellipse stays planar") {
  const FinslerMetric m = make_ellipsoid(1.0, 1.1, 1.2);
  const GeodesicState s = unit_state(m, Vec3(1, 0, 0), Vec3(0, 1, 0));
  const GeodesicArc arc = flow(m, s, oracle::ellipse_perimeter(1.0, 1.1));
  double z = 0.0;
  for (const auto& p : arc.samples) z = std::max(z, std::abs(p.x[2]));
  CHECK(z < 1e-7);
  CHECK(closure_error(arc.samples.front(), arc.samples.back()) < 1e-8);
}

TEST_CASE("exponential map") {
  const FinslerMetric m = make_round();
  CHECK((exp_map(m, Vec3(0, 0, 1), kPi / 2 * Vec3(1, 0, 0)) - Vec3(1, 0, 0)).norm() < 1e-8);
  CHECK(exp_map(m, Vec3(0, 0, 1), Vec3::Zero()) == Vec3(0, 0, 1));
  CHECK((exp_map(m, Vec3(0, 0, 1), 2 * kPi * Vec3(1, 0, 0)) - Vec3(0, 0, 1)).norm() < 1e-7);
}

TEST_CASE("distance") {
  CHECK(distance(make_round(), Vec3(1, 0, 0), Vec3(0, 1, 0)) == doctest::Approx(kPi / 2).epsilon(1e-9));

  const FinslerMetric q = make_quartic(0.1);
  const Vec3 x = Vec3(0.3, 0.2, 0.9).normalized(), y = Vec3(-0.5, 0.7, 0.1).normalized();
  CHECK(std::abs(distance(q, x, y) - distance(q, y, x)) < 1e-7);

  const FinslerMetric e = make_ellipsoid(1.0, 1.1, 1.2);
  const double expected = std::min(oracle::ellipse_perimeter(1.0, 1.1), oracle::ellipse_perimeter(1.0, 1.2)) / 2;
  CHECK(distance(e, Vec3(1, 0, 0), Vec3(-1, 0, 0)) == doctest::Approx(expected).epsilon(1e-7));

  const Connection c = connect(e, Vec3(1, 0, 0), Vec3(0, 0, 1));
  CHECK(c.length == doctest::Approx(oracle::ellipse_perimeter(1.0, 1.2) / 4).epsilon(1e-7));
}

TEST_CASE("injectivity radius estimate") {
  const double r = injectivity_radius_estimate(make_round());
  CHECK(r >= 0.81 * kPi);
  CHECK(r <= kPi);
  const double e = injectivity_radius_estimate(make_ellipsoid(1.0, 1.1, 1.2));
  CHECK(e > 0.0);
  CHECK(e <= 1.2 * kPi);
  const double s = injectivity_radius_estimate(make_scaled(make_round(), 2.0));
  CHECK(s == doctest::Approx(2 * r).epsilon(0.05));
}

TEST_CASE("closed geodesic refinement") {
  const Loop equator = great_circle(Vec3::UnitZ(), 64);
  const GeodesicArc round = refine_closed_geodesic(make_round(), equator);
  CHECK(round.duration == doctest::Approx(2 * kPi).epsilon(1e-9));
  CHECK(round.closure < 1e-8);

  const FinslerMetric e = make_ellipsoid(1.0, 1.1, 1.2);
  const GeodesicArc ell = refine_closed_geodesic(e, equator);
  CHECK(ell.duration == doctest::Approx(oracle::ellipse_perimeter(1.0, 1.1)).epsilon(1e-9));

  const GeodesicArc xz = refine_closed_geodesic(e, unit_state(e, Vec3(1, 0, 0), Vec3(0, 0, 1)), 7.0);
  CHECK(xz.duration == doctest::Approx(oracle::ellipse_perimeter(1.0, 1.2)).epsilon(1e-9));

  try {
    refine_closed_geodesic(make_round(), latitude_circle(Vec3::UnitZ(), kPi / 4, 64));
    FAIL("expected a precondition rejection");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::PreconditionViolated);
  }
}

TEST_CASE("geodesic acceleration rejects non-convex states") {
  // F = |v| + 2 v1^2 / |v| has A = 1 - 2 < 0 at v = e1.
  const FinslerMetric bad =
      finite_difference_derivatives([](const Vec3&, const Vec3& v) { return v.norm() + 2 * v[0] * v[0] / v.norm(); });
  CHECK(convexity_A(bad, Vec3(0, 0, 1), Vec3(1, 0, 0)) == doctest::Approx(-1.0).epsilon(1e-4));
  CHECK_THROWS_AS(geodesic_acceleration(bad, Vec3(0, 0, 1), Vec3(1, 0, 0)), Error);
}
