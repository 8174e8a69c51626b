#pragma once

#include <fingeo/metric.hpp>
#include <fingeo/ode.hpp>

#include <array>
#include <limits>
#include <vector>

namespace fingeo {

struct Loop;

struct GeodesicState {
  Vec3 x = Vec3::Zero();
  Vec3 v = Vec3::Zero();
};

struct GeodesicArc {
  GeodesicState initial;
  double duration = 0.0;
  std::vector<double> times;
  std::vector<GeodesicState> samples;
  double speed_drift = 0.0;  // max |F - F(initial)| / F(initial) over samples
  double closure = std::numeric_limits<double>::quiet_NaN();  // set for closed arcs
};

using State6 = std::array<double, 6>;

inline State6 pack(const GeodesicState& s) { return {s.x[0], s.x[1], s.x[2], s.v[0], s.v[1], s.v[2]}; }
inline GeodesicState unpack(const double* y) {
  return {Vec3(y[0], y[1], y[2]), Vec3(y[3], y[4], y[5])};
}

// Second derivative of a constant-speed geodesic through (x, v). This is the
// Euler-Lagrange equation of G = F^2/2 restricted to S^2:
//   E^T (G_vv a + G_vx v - G_x) = 0,  a.x = -|v|^2.
// Throws ConvexityViolation when E^T G_vv E is not positive definite.
Vec3 geodesic_acceleration(const FinslerMetric& metric, const Vec3& x, const Vec3& v);

// Normalizes x and removes the radial part of v.
void project_state(double* y);

// Linearized flow of K tangent vectors alongside the base state. The state is
// (x, v, dx_1, dv_1, ..., dx_K, dv_K); directional derivatives of the vector
// field are central differences.
template <std::size_t K>
void linearized_rhs(const FinslerMetric& metric, const std::array<double, 6 * (K + 1)>& y,
                    std::array<double, 6 * (K + 1)>& dy);
template <std::size_t K>
void project_linearized(std::array<double, 6 * (K + 1)>& y);

struct IntegrationOptions {
  double tol = 1e-12;
  double max_step = 0.25;
};

AdaptiveIntegrator<6> make_geodesic_integrator(const FinslerMetric& metric, const IntegrationOptions& opt = {});
template <std::size_t K>
AdaptiveIntegrator<6 * (K + 1)> make_linearized_integrator(const FinslerMetric& metric,
                                                            const IntegrationOptions& opt = {});

// Normalizes v to F-speed 1.
GeodesicState unit_state(const FinslerMetric& metric, const Vec3& x, const Vec3& v);

// Integrates from `state` (F-unit) for arclength T. Samples are uniform in
// time; n_samples = 0 picks about 32 per unit length.
GeodesicArc flow(const FinslerMetric& metric, const GeodesicState& state, double T, double tol = 1e-12,
                 int n_samples = 0);
// Endpoint only.
GeodesicState flow_to(const FinslerMetric& metric, const GeodesicState& state, double T, double tol = 1e-12);

SpherePoint exp_map(const FinslerMetric& metric, const SpherePoint& x, const Vec3& v);

struct Connection {
  double length = 0.0;
  Vec3 v0 = Vec3::Zero();  // F-unit initial velocity
  Vec3 v1 = Vec3::Zero();  // F-unit final velocity
};

// Minimizing geodesic from x to y by Newton shooting on exp_x, seeded with the
// round logarithm (a fan of 8 seeds for nearly antipodal pairs). `seed`, when
// nonzero, replaces the round seed. Throws NoConnection after 50 iterations.
Connection connect(const FinslerMetric& metric, const SpherePoint& x, const SpherePoint& y,
                   const Vec3& seed = Vec3::Zero());
double distance(const FinslerMetric& metric, const SpherePoint& x, const SpherePoint& y);

struct InjectivityOptions {
  int n_points = 12;
  int n_dirs = 6;
};

// Heuristic lower bound 0.9 min(first conjugate time, half shortest geodesic
// loop) over a grid of unit states. Falls back to pi/2 min F on the round unit
// bundle when neither is detected.
double injectivity_radius_estimate(const FinslerMetric& metric, const InjectivityOptions& opt = {});

// Closure mismatch of a periodic orbit: max(round distance of endpoints,
// round angle between the end velocities).
double closure_error(const GeodesicState& a, const GeodesicState& b);

struct RefineOptions {
  double tol = 1e-8;
  int segments = 8;
  int max_iterations = 40;
  int n_samples = 0;
};

// Multiple-shooting Gauss-Newton for a closed geodesic near `seed`, which must
// satisfy max|V| < 0.1. The returned arc has unit speed and closure < tol.
GeodesicArc refine_closed_geodesic(const FinslerMetric& metric, const Loop& seed, const RefineOptions& opt = {});
GeodesicArc refine_closed_geodesic(const FinslerMetric& metric, const GeodesicState& guess, double period,
                                   const RefineOptions& opt = {});

// State of a closed arc at time t (taken modulo the period) by re-integration.
GeodesicState state_at(const FinslerMetric& metric, const GeodesicArc& arc, double t, double tol = 1e-12);

}  // namespace fingeo
