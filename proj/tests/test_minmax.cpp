#include <doctest.h>

#include "oracles.hpp"

#include <fingeo/errors.hpp>
#include <fingeo/minmax.hpp>

using namespace fingeo;

namespace {

const FinslerMetric& ellipsoid() {
  static const FinslerMetric m = make_ellipsoid(1.0, 1.1, 1.2);
  return m;
}

bool same_member(const FamilyMember& a, const FamilyMember& b) {
  return ((a.axis - b.axis).norm() < 1e-12 && std::abs(a.lambda - b.lambda) < 1e-12) ||
         ((a.axis + b.axis).norm() < 1e-12 && std::abs(a.lambda + b.lambda) < 1e-12);
}

bool contains(const CircleFamily& big, const CircleFamily& small) {
  for (const auto& m : small.members) {
    bool found = false;
    for (const auto& b : big.members) found = found || same_member(m, b);
    if (!found) return false;
  }
  return true;
}

// Smallest |x_k| bound over the trace: the coordinate plane the arc lies in.
double planarity(const GeodesicArc& arc) {
  Vec3 mx = Vec3::Zero();
  for (const auto& s : arc.samples) mx = mx.cwiseMax(s.x.cwiseAbs());
  return mx.minCoeff();
}

// Centrally symmetric polygon near the great circle normal to `axis`: the
// normal wobble and the tangential jitter both use odd modes.
BrokenLoop polygon(const Vec3& axis, int k, double normal_wobble, double tangent_wobble) {
  const Loop c = great_circle(axis, k);
  BrokenLoop b;
  for (int i = 0; i < k; ++i) {
    const double u = 2 * kPi * i / k;
    const Vec3 t = axis.cross(c.samples[i]);
    const Vec3 p = c.samples[i] + normal_wobble * std::sin(3 * u) * axis + tangent_wobble * std::sin(u) * t;
    b.vertices.push_back(p.normalized());
  }
  return b;
}

}  // namespace

TEST_CASE("circle families") {
  const CircleFamily f1 = family(1, 3, 64);
  const FinslerMetric round = make_round();
  double best = 0.0;
  for (std::size_t i = 0; i < f1.members.size(); ++i) {
    const double lam = f1.members[i].lambda;
    const double L = loop_length(round, f1.member(i));
    CHECK(L == doctest::Approx(2 * kPi * std::sqrt(1 - lam * lam)).epsilon(1e-5));
    best = std::max(best, L);
  }
  CHECK(best == doctest::Approx(2 * kPi).epsilon(1e-5));

  const CircleFamily f2 = family(2, 3, 64), f3 = family(3, 3, 64);
  CHECK(contains(f2, f1));
  CHECK(contains(f3, f2));
  for (const CircleFamily* f : {&f1, &f2, &f3}) {
    for (std::size_t i = 0; i < f->members.size(); ++i) CHECK(check_embedded(f->member(i)).embedded);
  }
}

TEST_CASE("round min-max values are 2 pi") {
  MinmaxParams p;
  p.flow.rho0 = 0.5;
  for (int dim = 1; dim <= 3; ++dim) {
    CAPTURE(dim);
    const MinmaxResult r = minmax_value(make_round(), family(dim, 2, 64), p);
    CHECK(std::abs(r.ell - 2 * kPi) < 1e-3);
  }
}

TEST_CASE("ellipsoid min-max values") {
  MinmaxParams p;
  p.flow.rho0 = 0.5;
  const double expected[] = {oracle::ellipse_perimeter(1.0, 1.1), oracle::ellipse_perimeter(1.0, 1.2),
                             oracle::ellipse_perimeter(1.1, 1.2)};
  double prev = 0.0;
  for (int dim = 1; dim <= 3; ++dim) {
    CAPTURE(dim);
    const MinmaxResult r = minmax_value(ellipsoid(), family(dim, 2, 64), p);
    CHECK(std::abs(r.ell - expected[dim - 1]) < 5e-3 * expected[dim - 1]);
    CHECK(r.ell >= prev - 1e-6);
    prev = r.ell;
  }
}

TEST_CASE("broken geodesic descent") {
  const FinslerMetric round = make_round();
  const DescentResult eq = descend_broken(round, polygon(Vec3(0.1, 0.0, 1.0).normalized(), 16, 0.02, 0.05));
  CHECK(eq.energy == doctest::Approx(4 * kPi * kPi).epsilon(1e-4 / (4 * kPi * kPi)));
  for (std::size_t i = 1; i < eq.energies.size(); ++i) CHECK(eq.energies[i] <= eq.energies[i - 1] + 1e-12);

  BrokenLoop tiny;
  for (int i = 0; i < 8; ++i) {
    const double u = 2 * kPi * i / 8;
    tiny.vertices.push_back(Vec3(0.005 * std::cos(u), 0.008 * std::sin(u), 1.0).normalized());
  }
  const DescentResult t = descend_broken(round, tiny);
  CHECK(t.energy < 1e-8);
  CHECK(t.energy < broken_energy(round, tiny));

  const double P = oracle::ellipse_perimeter(1.0, 1.2);
  // In-plane jitter keeps both the central and the x2 -> -x2 symmetry.
  const DescentResult xz = descend_broken(ellipsoid(), polygon(Vec3::UnitY(), 24, 0.0, 0.05));
  CHECK(std::abs(xz.energy - P * P) < 5e-3 * P * P);
}

TEST_CASE("broken loops from smooth loops") {
  // k = ceil(8 pi) = 26 divides the 208 samples, so the vertices are equally spaced.
  const Loop eq = great_circle(Vec3::UnitZ(), 208);
  const BrokenLoop b = broken_from_loop(make_round(), eq, 1.0);
  CHECK(b.vertices.size() == 26);
  CHECK(broken_energy(make_round(), b) == doctest::Approx(4 * kPi * kPi).epsilon(1e-9));
}

TEST_CASE("three geodesics on the ellipsoid") {
  ThreeGeodesicsOptions opt;
  const ThreeGeodesics res = three_geodesics(ellipsoid(), opt);
  CHECK_FALSE(res.degenerate);
  REQUIRE(res.geodesics.size() == 3);
  const double expected[] = {oracle::ellipse_perimeter(1.0, 1.1), oracle::ellipse_perimeter(1.0, 1.2),
                             oracle::ellipse_perimeter(1.1, 1.2)};
  for (int k = 0; k < 3; ++k) {
    const ClosedGeodesic& g = res.geodesics[k];
    CHECK(g.simple);
    CHECK(g.arc.closure < 1e-8);
    CHECK(std::abs(g.arc.duration - expected[k]) < 5e-3 * expected[k]);
    CHECK(planarity(g.arc) < 1e-6);
    REQUIRE(g.index.has_value());
    if (k > 0) {
      CHECK(g.arc.duration > res.geodesics[k - 1].arc.duration);
      CHECK_FALSE(same_geodesic(ellipsoid(), g.arc, res.geodesics[k - 1].arc));
    }
  }
}

TEST_CASE("three geodesics on the round sphere are degenerate") {
  const ThreeGeodesics res = three_geodesics(make_round(), ThreeGeodesicsOptions{});
  CHECK(res.degenerate);
  REQUIRE(res.levels.size() == 3);
  for (double l : res.levels) CHECK(std::abs(l - 2 * kPi) < 1e-3);
}

TEST_CASE("spheroid: the meridian level repeats") {
  const FinslerMetric m = make_ellipsoid(1.0, 1.0, 1.2);
  const ThreeGeodesics res = three_geodesics(m, ThreeGeodesicsOptions{});
  REQUIRE(res.levels.size() == 3);
  const double P = oracle::ellipse_perimeter(1.0, 1.2);
  CHECK(std::abs(res.levels[0] - 2 * kPi) < 5e-3 * 2 * kPi);
  CHECK(std::abs(res.levels[1] - P) < 5e-3 * P);
  CHECK(std::abs(res.levels[2] - P) < 5e-3 * P);
}

TEST_CASE("same geodesic") {
  const FinslerMetric round = make_round();
  const GeodesicArc a = flow(round, {Vec3(1, 0, 0), Vec3(0, 1, 0)}, 2 * kPi);
  const GeodesicArc b = flow(round, {Vec3(0, 1, 0), Vec3(-1, 0, 0)}, 2 * kPi);
  const GeodesicArc c = flow(round, {Vec3(1, 0, 0), Vec3(0, 0, 1)}, 2 * kPi);
  CHECK(same_geodesic(round, a, b));
  CHECK_FALSE(same_geodesic(round, a, c));
}
