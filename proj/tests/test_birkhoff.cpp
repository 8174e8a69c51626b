#include <doctest.h>

#include "oracles.hpp"

#include <fingeo/birkhoff.hpp>
#include <fingeo/errors.hpp>

#include <random>

using namespace fingeo;

namespace {

AnnulusChart chart_over(const FinslerMetric& m, const Vec3& x0, const Vec3& v0, double period_guess) {
  return build_chart(m, refine_closed_geodesic(m, unit_state(m, x0, v0), period_guess));
}

const AnnulusChart& ellipsoid_chart() {
  static const AnnulusChart c = chart_over(make_ellipsoid(1.0, 1.1, 1.2), Vec3(1, 0, 0), Vec3(0, 1, 0), 6.6);
  return c;
}

const AnnulusChart& round_chart() {
  static const AnnulusChart c = chart_over(make_round(), Vec3(1, 0, 0), Vec3(0, 1, 0), 2 * kPi);
  return c;
}

double wrapped(double d, double l) { return std::remainder(d, l); }

}  // namespace

TEST_CASE("annulus coordinates on the round equator") {
  const AnnulusChart& c = round_chart();
  CHECK(c.period() == doctest::Approx(2 * kPi).epsilon(1e-10));
  for (double t : {0.0, 1.0, 4.0}) {
    for (double s : {-0.9, -0.3, 0.0, 0.5, 0.95}) {
      const Vec3 nu = c.nu(t, s);
      const Vec3 gd = c.velocity(t).normalized();
      CHECK(std::acos(std::clamp(nu.dot(gd), -1.0, 1.0)) == doctest::Approx(std::acos(s)).epsilon(1e-9));
      CHECK(c.side_normal(t).dot(nu) >= -1e-12);
      CHECK(c.s_of(t, nu) == doctest::Approx(s).epsilon(1e-10));
    }
  }
}

TEST_CASE("Liouville form pulls back to s dt") {
  const AnnulusChart& c = ellipsoid_chart();
  const FinslerMetric& m = c.metric();
  // Loop (t0 + rt cos th, s0 + rs sin th); alpha(dx) = F_v(x, nu) . dx with x = gamma(t).
  const double t0 = 1.3, s0 = 0.2, rt = 0.7, rs = 0.4;
  const int K = 512;
  double lhs = 0.0, rhs = 0.0;
  for (int k = 0; k < K; ++k) {
    const double th = 2 * kPi * k / K;
    const double t = t0 + rt * std::cos(th), s = s0 + rs * std::sin(th);
    const double dt = -rt * std::sin(th) * 2 * kPi / K;
    lhs += m.Fv(c.point(t), c.nu(t, s)).dot(c.velocity(t)) * dt;
    rhs += s * dt;
  }
  CHECK(std::abs(lhs - rhs) < 1e-6);
  CHECK(rhs == doctest::Approx(-kPi * rt * rs).epsilon(1e-12));
}

TEST_CASE("round equator: the return map is the identity") {
  const AnnulusChart& c = round_chart();
  for (double t : {0.3, 2.0, 5.5}) {
    for (double s : {-0.7, 0.0, 0.6}) {
      const ReturnRecord r = return_map(c, t, s);
      REQUIRE(r.status == ReturnStatus::Ok);
      CHECK(std::abs(wrapped(r.t_hit - t, c.period())) < 1e-8);
      CHECK(std::abs(r.s_hit - s) < 1e-8);
      CHECK(r.tau == doctest::Approx(2 * kPi).epsilon(1e-8));
    }
  }
  const PeriodicPointsResult pp = periodic_points(c, 1, 0);
  CHECK(pp.continuum);
}

TEST_CASE("ellipsoid: crossings of the other planar ellipses are fixed") {
  const AnnulusChart& c = ellipsoid_chart();
  const double l = c.period();
  // Refinement may slide the start along the orbit, so locate (1,0,0) first.
  // The x1x3 ellipse crosses at t0 and t0 + l/2, the x2x3 ellipse at
  // t0 + l/4 and t0 + 3l/4 (quarter-perimeter symmetry).
  const double t0 = c.nearest(Vec3(1, 0, 0));
  CHECK((c.point(t0) - Vec3(1, 0, 0)).norm() < 1e-9);
  struct Expect {
    double t, length;
  };
  const double P13 = oracle::ellipse_perimeter(1.0, 1.2), P23 = oracle::ellipse_perimeter(1.1, 1.2);
  for (Expect e : {Expect{0.0, P13}, Expect{l / 4, P23}, Expect{l / 2, P13}, Expect{3 * l / 4, P23}}) {
    e.t += t0;
    const ReturnRecord r = return_map(c, e.t, 0.0);
    REQUIRE(r.status == ReturnStatus::Ok);
    CHECK(std::abs(wrapped(r.t_hit - e.t, l)) < 1e-6);
    CHECK(std::abs(r.s_hit) < 1e-6);
    CHECK(r.tau == doctest::Approx(e.length).epsilon(1e-8));
  }

  const PeriodicPointsResult pp = periodic_points(c, 1, 0);
  CHECK_FALSE(pp.continuum);
  CHECK(pp.points.size() >= 4);
  for (const auto& p : pp.points) {
    CHECK(p.closure < 1e-6);
    const GeodesicState start = c.coord(p.t, p.s);
    const GeodesicState end = flow_to(c.metric(), start, p.flight_time);
    CHECK(closure_error(start, end) < 1e-6);
  }
}

TEST_CASE("ellipsoid section is symplectic and reversible") {
  const AnnulusChart& c = ellipsoid_chart();
  for (int i = 0; i < 4; ++i) {
    for (double s : {-0.5, 0.1, 0.6}) {
      const double t = c.period() * (i + 0.25) / 4;
      CHECK(std::abs(jacobian_det(c, t, s) - 1.0) < 1e-3);
      CHECK(reversibility_defect(c, t, s) < 1e-8);
    }
  }
  CHECK(std::abs(exactness_defect(c, 2.0, 0.0, 0.3, 0.3)) < 1e-5);
}

TEST_CASE("boundary extension") {
  const BoundaryExtension r = boundary_extension(round_chart(), 16);
  for (std::size_t i = 0; i < r.t.size(); ++i) {
    CHECK(r.t2[i] - r.t[i] == doctest::Approx(2 * kPi).epsilon(1e-8));
    CHECK(r.t[i] - r.tm2[i] == doctest::Approx(2 * kPi).epsilon(1e-8));
  }

  const BoundaryExtension e = boundary_extension(ellipsoid_chart(), 32);
  for (std::size_t i = 1; i < e.t.size(); ++i) CHECK(e.t2[i] > e.t2[i - 1]);
  // Winding one: t2(t + l) = t2(t) + l.
  const AnnulusChart& c = ellipsoid_chart();
  const ConjugateTimes a = conjugate_times(c.metric(), c.base(), 0.0, 3 * c.period());
  const ConjugateTimes b = conjugate_times(c.metric(), c.base(), c.period(), 3 * c.period());
  REQUIRE(a.forward.size() >= 2);
  REQUIRE(b.forward.size() >= 2);
  CHECK(b.forward[1] - a.forward[1] == doctest::Approx(c.period()).epsilon(1e-7));
  CHECK(e.t2[0] == doctest::Approx(a.forward[1]).epsilon(1e-9));
}

TEST_CASE("twist report") {
  TwistOptions opt;
  opt.n_t = 16;
  opt.n_s = 33;
  opt.check_index = false;
  const TwistReport r = twist_check(round_chart(), opt);
  CHECK(std::abs(r.margin_top) < 1e-6);
  CHECK(std::abs(r.margin_bottom) < 1e-6);
  CHECK_FALSE(r.twist);

  // Longest ellipse of a flatter ellipsoid.
  const FinslerMetric m = make_ellipsoid(1.0, 1.05, 1.1);
  const AnnulusChart c = chart_over(m, Vec3(0, 1, 0), Vec3(0, 0, 1), 6.75);
  CHECK(c.period() == doctest::Approx(oracle::ellipse_perimeter(1.05, 1.1)).epsilon(1e-9));
  TwistOptions o2;
  o2.n_t = 16;
  o2.n_s = 33;
  const TwistReport t = twist_check(c, o2);
  CHECK(t.index_consistent);
  CHECK(t.boundary_limit_error < 1e-3);
  REQUIRE(t.ind_omega.size() == t.t.size());
  for (std::size_t i = 0; i < t.t.size(); ++i) {
    const bool short_return = t.period - (t.t2[i] - t.t[i]) > 0;
    CHECK(short_return == (t.ind_omega[i] >= 2));
  }
}
