#include <fingeo/invariants.hpp>

#include <fingeo/curveflow.hpp>
#include <fingeo/errors.hpp>
#include <fingeo/geodesic.hpp>
#include <fingeo/jacobi.hpp>

#include <algorithm>
#include <cmath>
#include <random>

namespace fingeo {

bool InvariantReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const InvariantCheck& c) { return c.passed; });
}

namespace {

struct UnitState {
  Vec3 x, v;
};

std::vector<UnitState> random_states(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  std::vector<UnitState> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    Vec3 x(gauss(rng), gauss(rng), gauss(rng));
    x.normalize();
    Vec3 v(gauss(rng), gauss(rng), gauss(rng));
    v = project_tangent(x, v).normalized();
    out.push_back({x, v});
  }
  return out;
}

double max_dist(const Loop& a, const Loop& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, (a.samples[i] - b.samples[i]).norm());
  return d;
}

void add(InvariantReport& rep, std::string name, double value, double tol, std::string detail = {}) {
  rep.checks.push_back({std::move(name), value, tol, value <= tol, std::move(detail)});
}

void add_failure(InvariantReport& rep, std::string name, const std::exception& e) {
  rep.checks.push_back({std::move(name), std::numeric_limits<double>::infinity(), 0.0, false, e.what()});
}

// Central differences of F and of the analytic F_v in ambient coordinates.
double derivative_defect(const FinslerMetric& metric, const Vec3& x, const Vec3& v) {
  const MetricJet j = metric.jet(x, v);
  const double h = 1e-6;
  double err = 0.0;
  for (int k = 0; k < 3; ++k) {
    const Vec3 e = Vec3::Unit(k);
    const double fv = (metric.F(x, v + h * e) - metric.F(x, v - h * e)) / (2 * h);
    const double fx = (metric.F(x + h * e, v) - metric.F(x - h * e, v)) / (2 * h);
    err = std::max({err, std::abs(fv - j.Fv[k]), std::abs(fx - j.Fx[k])});
    const Vec3 col_v = (metric.jet(x, v + h * e).Fv - metric.jet(x, v - h * e).Fv) / (2 * h);
    const Vec3 col_x = (metric.jet(x + h * e, v).Fv - metric.jet(x - h * e, v).Fv) / (2 * h);
    err = std::max(err, (col_v - j.Fvv.col(k)).cwiseAbs().maxCoeff());
    err = std::max(err, (col_x - j.Fvx.col(k)).cwiseAbs().maxCoeff());
  }
  return err / std::max(1.0, j.F);
}

}  // namespace

InvariantReport run_invariants(const FinslerMetric& metric, const InvariantOptions& opt) {
  InvariantReport rep;
  rep.metric = metric.name();

  const ConvexityReport conv = convexity_grid(metric, opt.convexity_points, opt.convexity_dirs);
  if (!(conv.a0 > 0.0)) {
    throw Error(ErrorCode::ConvexityViolation, "A = " + std::to_string(conv.a0) + " at x = (" +
                                                   std::to_string(conv.x[0]) + ", " + std::to_string(conv.x[1]) +
                                                   ", " + std::to_string(conv.x[2]) + ")");
  }
  rep.checks.push_back({"convexity_grid", conv.a0, 0.0, true, "min A over the grid"});

  std::mt19937_64 rng(opt.seed);
  const auto states = random_states(opt.n_states, rng);
  double homog = 0.0, rev = 0.0, euler = 0.0, kernel = 0.0, deriv = 0.0;
  for (const auto& s : states) {
    const double F = metric.F(s.x, s.v);
    for (double c : {0.5, 2.0, 3.7}) homog = std::max(homog, std::abs(metric.F(s.x, c * s.v) - c * F) / (c * F));
    rev = std::max(rev, std::abs(metric.F(s.x, -s.v) - F) / F);
    const MetricJet j = metric.jet(s.x, s.v);
    euler = std::max(euler, std::abs(j.Fv.dot(s.v) - F) / F);
    kernel = std::max(kernel, (j.Fvv * s.v).norm() / std::max(1.0, j.Fvv.norm()));
    if (metric.has_analytic_derivatives()) deriv = std::max(deriv, derivative_defect(metric, s.x, s.v));
  }
  add(rep, "homogeneity", homog, 1e-12);
  add(rep, "reversibility", rev, 1e-12);
  add(rep, "euler_identity", euler, 1e-10);
  add(rep, "fiber_hessian_kernel", kernel, 1e-8);
  if (metric.has_analytic_derivatives()) add(rep, "derivatives_vs_differences", deriv, 1e-6);

  // Geodesic flow.
  try {
    double drift = 0.0, back = 0.0;
    for (int i = 0; i < 4; ++i) {
      const GeodesicState s = unit_state(metric, states[i].x, states[i].v);
      drift = std::max(drift, flow(metric, s, 5.0).speed_drift);
      const GeodesicState e = flow_to(metric, s, 5.0);
      const GeodesicState r = flow_to(metric, {e.x, -e.v}, 5.0);
      back = std::max(back, closure_error(r, {s.x, -s.v}));
    }
    add(rep, "geodesic_speed", drift, 1e-9);
    add(rep, "geodesic_time_reversal", back, 1e-8);
  } catch (const Error& e) {
    add_failure(rep, "geodesic_flow", e);
  }

  // Curve flow on a tilted, perturbed small circle.
  try {
    Loop loop = circle(Vec3(0.3, -0.2, 1.0).normalized(), 0.25, opt.loop_samples);
    std::normal_distribution<double> gauss;
    for (std::size_t i = 0; i < loop.size(); ++i) {
      const double u = 2 * kPi * static_cast<double>(i) / static_cast<double>(loop.size());
      const Vec3 bump = 0.02 * std::sin(3 * u) * loop.samples[i].cross(Vec3(0.0, 0.0, 1.0));
      loop.samples[i] = (loop.samples[i] + bump).normalized();
    }
    const LoopGeometry g = analyze_loop(metric, loop);
    const double dt = 0.5 * dt_max(g, 0.0);
    const Loop base = step(metric, loop, dt, 0.0);
    const int k = static_cast<int>(loop.size()) / 3;
    const double shift_err = max_dist(step(metric, shifted(loop, k), dt, 0.0), shifted(base, k));
    const double rev_err = max_dist(step(metric, reversed(loop), dt, 0.0), reversed(base));
    add(rep, "flow_shift_equivariance", shift_err, 1e-10);
    add(rep, "flow_reversal_equivariance", rev_err, 1e-10);

    const VelocityField w = normal_velocity(metric, loop);
    const VelocityField wr = normal_velocity(metric, reversed(loop));
    const std::size_t n = loop.size();
    double odd = 0.0, scale = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      odd = std::max(odd, std::abs(wr.w[i] + w.w[(n - i) % n]));
      scale = std::max(scale, std::abs(w.w[i]));
    }
    add(rep, "velocity_oddness", odd / scale, 1e-10);
    add(rep, "velocity_consistency", w.discrepancy / scale, 1e-4, "extrinsic vs chart normal velocity");
  } catch (const Error& e) {
    add_failure(rep, "curve_flow", e);
  }

  // Sturm interlacing along a few geodesics.
  try {
    int bad = 0;
    for (int i = 0; i < 3; ++i) {
      const GeodesicState s = unit_state(metric, states[i].x, states[i].v);
      const SturmCheck sc = sturm_check(metric, s, 12.0);
      if (!sc.interlaced || sc.zeros_horizontal.empty()) ++bad;
    }
    add(rep, "sturm_interlacing", bad, 0.0, "geodesics without interlaced zeros");
  } catch (const Error& e) {
    add_failure(rep, "sturm_interlacing", e);
  }

  // Monodromy of the closed geodesic near the x3 = 0 great circle.
  try {
    const GeodesicState s = unit_state(metric, Vec3::UnitX(), Vec3::UnitY());
    const double guess = loop_length(metric, great_circle(Vec3::UnitZ(), 256));
    const GeodesicArc closed = refine_closed_geodesic(metric, s, guess);
    const Monodromy M = monodromy(metric, closed);
    add(rep, "monodromy_symplectic", std::abs(M.det - 1.0), 1e-6, "|det M - 1|");
  } catch (const Error& e) {
    add_failure(rep, "monodromy_symplectic", e);
  }
  return rep;
}

}  // namespace fingeo
