#include <doctest.h>

#include "oracles.hpp"

#include <fingeo/curveflow.hpp>
#include <fingeo/errors.hpp>

#include <random>

using namespace fingeo;

namespace {

double max_dist(const Loop& a, const Loop& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, (a.samples[i] - b.samples[i]).norm());
  return d;
}

Loop from_plane(int n, double phase, auto&& curve) {
  Loop l;
  for (int i = 0; i < n; ++i) {
    const double u = 2 * kPi * (i + phase) / n;
    const Vec2 p = curve(u);
    l.samples.push_back(Vec3(p[0], p[1], 1.0).normalized());
  }
  return l;
}

// Brute force: great-circle arcs AB and CD cross when each pair of endpoints
// lies on opposite sides of the other arc's plane.
bool arcs_cross(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  const Vec3 n1 = a.cross(b), n2 = c.cross(d);
  const double sc = n1.dot(c), sd = n1.dot(d), sa = n2.dot(a), sb = n2.dot(b);
  return sc * sd < 0 && sa * sb < 0 && (a + b).dot(c + d) > 0;
}

bool brute_force_embedded(const Loop& l) {
  const std::size_t n = l.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      if (arcs_cross(l.samples[i], l.samples[(i + 1) % n], l.samples[j], l.samples[(j + 1) % n])) return false;
    }
  }
  return true;
}

Loop wobbly(int n) {
  Loop l = circle(Vec3(0.2, -0.1, 1.0).normalized(), 0.3, n);
  for (std::size_t i = 0; i < l.size(); ++i) {
    const double u = 2 * kPi * static_cast<double>(i) / n;
    l.samples[i] = (l.samples[i] + 0.03 * std::cos(2 * u) * Vec3(1, 0.5, 0)).normalized();
  }
  return l;
}

}  // namespace

TEST_CASE("normal velocity of circles") {
  const FinslerMetric m = make_round();
  const VelocityField eq = normal_velocity(m, great_circle(Vec3::UnitZ(), 128));
  for (double w : eq.w) CHECK(std::abs(w) < 1e-8);

  const Loop lat = latitude_circle(Vec3::UnitZ(), kPi / 3, 128);
  const VelocityField v = normal_velocity(m, lat);
  const LoopGeometry g = analyze_loop(m, lat);
  for (std::size_t i = 0; i < lat.size(); ++i) {
    CHECK(std::abs(std::abs(v.w[i]) - 1.0 / std::sqrt(3.0)) < 1e-6);
    CHECK(v.w[i] * g.normal[i].dot(Vec3::UnitZ()) > 0.0);  // toward the nearer pole
  }
}

TEST_CASE("normal velocity is geometric") {
  const int n = 1024, k = 4;
  auto curve = [](double u) { return Vec2(0.5 * std::cos(u) + 0.05 * std::cos(3 * u), 0.4 * std::sin(u)); };
  const Loop a = from_plane(n, 0.0, curve);
  // theta(u) = u + 0.3 sin(k u) / k fixes u = pi j / k, i.e. every n / (2k)-th sample.
  const Loop b = from_plane(n, 0.0, [&](double u) { return curve(u + 0.3 * std::sin(k * u) / k); });
  for (const FinslerMetric& m : {make_round(), make_quartic(0.1)}) {
    const VelocityField wa = normal_velocity(m, a), wb = normal_velocity(m, b);
    for (int i = 0; i < n; i += n / (2 * k)) CHECK(std::abs(wa.w[i] - wb.w[i]) < 1e-6);
  }
}

TEST_CASE("normal velocity is odd under reversal") {
  const Loop l = wobbly(96);
  for (const FinslerMetric& m : {make_round(), make_ellipsoid(1.0, 1.1, 1.2), make_quartic(0.1)}) {
    const VelocityField w = normal_velocity(m, l), wr = normal_velocity(m, reversed(l));
    for (std::size_t i = 0; i < l.size(); ++i) CHECK(std::abs(wr.w[i] + w.w[(l.size() - i) % l.size()]) < 1e-10);
    CHECK(w.discrepancy < 1e-4);
  }
}

TEST_CASE("single steps") {
  const FinslerMetric m = make_round();
  const Loop eq = great_circle(Vec3::UnitZ(), 128);
  CHECK(max_dist(step(m, eq, 1e-3, 0.0), eq) < 1e-10);

  const Loop lat = latitude_circle(Vec3::UnitZ(), kPi / 3, 128);
  const LoopGeometry g = analyze_loop(m, lat);
  CHECK(loop_length(m, step(m, lat, 0.5 * dt_max(g, 0.0), 0.0)) < g.length);

  const Loop small = latitude_circle(Vec3::UnitZ(), 0.1, 64);
  CHECK(max_dist(step(m, small, 0.01, 1.0), small) == 0.0);

  const Loop w = wobbly(96);
  const double dt = 0.5 * dt_max(analyze_loop(m, w), 0.0);
  const Loop base = step(m, w, dt, 0.0);
  CHECK(max_dist(step(m, shifted(w, 17), dt, 0.0), shifted(base, 17)) < 1e-12);
  CHECK(max_dist(step(m, reversed(w), dt, 0.0), reversed(base)) < 1e-12);
}

TEST_CASE("cutoff") {
  CHECK(cutoff(0.5, 1.0) == 0.0);
  CHECK(cutoff(1.0, 1.0) == 0.0);
  CHECK(cutoff(2.0, 1.0) == 1.0);
  CHECK(cutoff(5.0, 0.0) == 1.0);
  double prev = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double c = cutoff(1.0 + i / 100.0, 1.0);
    CHECK(c >= prev);
    prev = c;
  }
  // Second derivative vanishes at both ends of the ramp.
  const double h = 1e-3;
  for (double x : {1.0, 2.0}) CHECK(std::abs(cutoff(x + h, 1.0) - 2 * cutoff(x, 1.0) + cutoff(x - h, 1.0)) / (h * h) < 1e-2);
}

TEST_CASE("redistribution") {
  const Loop w = wobbly(96);
  const Loop r = redistribute(w);
  double lo = 1e300, hi = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    CHECK(std::abs(r.samples[i].norm() - 1.0) < 1e-14);
    const double d = (r.samples[(i + 1) % r.size()] - r.samples[i]).norm();
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  CHECK(hi / lo < 1.01);
  CHECK(max_dist(redistribute(shifted(w, 5)), shifted(r, 5)) < 1e-12);
}

TEST_CASE("embedding check") {
  CHECK(check_embedded(great_circle(Vec3::UnitZ(), 64)).embedded);

  const Loop eight = from_plane(101, 0.5, [](double u) { return Vec2(0.5 * std::sin(u), 0.3 * std::sin(2 * u)); });
  CHECK_FALSE(brute_force_embedded(eight));
  CHECK_FALSE(check_embedded(eight).embedded);

  // Peanut whose waist closes to a gap of 1e-3 with sample spacing about 1e-2.
  const Loop peanut = from_plane(128, 0.0, [](double u) {
    return Vec2(0.2 * std::cos(u), 0.1 * std::sin(u) * (5e-3 + std::cos(u) * std::cos(u)));
  });
  CHECK(brute_force_embedded(peanut));
  const EmbeddingReport rep = check_embedded(peanut);
  CHECK(rep.embedded);
  CHECK(rep.proximity_warning);
  CHECK(rep.min_separation < 1.1e-3);

  std::mt19937_64 rng(5);
  for (int k = 0; k < 20; ++k) {
    std::uniform_real_distribution<double> amp(0.0, 0.8);
    const double a = amp(rng), b = amp(rng);
    const Loop l = from_plane(80, 0.37, [&](double u) {
      return Vec2(std::cos(u) + a * std::cos(3 * u), std::sin(u) + b * std::sin(2 * u)) * 0.4;
    });
    CHECK(check_embedded(l).embedded == brute_force_embedded(l));
  }
}

TEST_CASE("round flow converges to a great circle") {
  std::mt19937_64 rng(3);
  const Loop seed = perturbed_great_circle(128, 0.01, rng);
  FlowParams p;
  const FlowResult r = evolve(make_round(), seed, p);
  CHECK(r.status == FlowStatus::Converged);
  CHECK(std::abs(r.ell - 2 * kPi) < 1e-4);
  CHECK(r.max_v < p.eps);
  CHECK(dissipation_check(r.trace) < 1e-2);
  for (std::size_t i = 1; i < r.trace.records.size(); ++i) {
    CHECK(r.trace.records[i].length <= r.trace.records[i - 1].length + 1e-12);
  }
}

TEST_CASE("small circles shrink below the floor") {
  FlowParams p;
  p.rho0 = 0.5;
  const FlowResult r = evolve(make_round(), latitude_circle(Vec3::UnitZ(), kPi / 6, 64), p);
  CHECK(r.status == FlowStatus::BelowFloor);
  CHECK(r.loop.size() == 64);
  CHECK(loop_length(make_round(), r.loop) <= 2 * p.rho0);
}

TEST_CASE("ellipsoid flow settles on the shortest ellipse") {
  const FinslerMetric m = make_ellipsoid(1.0, 1.1, 1.2);
  const FlowResult r = evolve(m, circle(Vec3(0.05, 0.05, 1.0).normalized(), 0.0, 64), FlowParams{});
  CHECK(r.status == FlowStatus::Converged);
  CHECK(std::abs(r.ell - oracle::ellipse_perimeter(1.0, 1.1)) < 1e-3);
}

TEST_CASE("stationary loops dissipate nothing") {
  const FlowResult r = evolve_for(make_round(), great_circle(Vec3::UnitX(), 64), FlowParams{}, 0.2);
  CHECK(dissipation_check(r.trace) == 0.0);
}

TEST_CASE("timeout carries the trace") {
  FlowParams p;
  p.t_max = 0.0;
  std::mt19937_64 rng(1);
  try {
    evolve(make_round(), perturbed_great_circle(64, 0.01, rng), p);
    FAIL("expected a timeout");
  } catch (const FlowTimeout& e) {
    CHECK(e.code() == ErrorCode::Timeout);
    CHECK(e.trace().records.size() == 1);
    CHECK(e.last().size() == 64);
  }
}
