#include <fingeo/curveflow.hpp>

#include <fingeo/chart.hpp>
#include <fingeo/errors.hpp>

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

namespace fingeo {

namespace {

inline std::size_t wrap(long i, std::size_t n) {
  const long m = static_cast<long>(n);
  return static_cast<std::size_t>(((i % m) + m) % m);
}

template <class T>
T d1(const std::vector<T>& y, std::size_t i, double du) {
  const std::size_t n = y.size();
  const long k = static_cast<long>(i);
  return (y[wrap(k - 2, n)] - 8.0 * y[wrap(k - 1, n)] + 8.0 * y[wrap(k + 1, n)] - y[wrap(k + 2, n)]) / (12.0 * du);
}

template <class T>
T d2(const std::vector<T>& y, std::size_t i, double du) {
  const std::size_t n = y.size();
  const long k = static_cast<long>(i);
  return (-y[wrap(k - 2, n)] + 16.0 * y[wrap(k - 1, n)] - 30.0 * y[i] + 16.0 * y[wrap(k + 1, n)] -
          y[wrap(k + 2, n)]) /
         (12.0 * du * du);
}

void require_samples(const Loop& loop) {
  if (loop.size() < 8) throw Error(ErrorCode::InvalidParameter, "loop needs at least 8 samples");
}

}  // namespace

Loop circle(const Vec3& axis, double lambda, int n) {
  if (n < 8) throw Error(ErrorCode::InvalidParameter, "loop needs at least 8 samples");
  if (!(std::abs(lambda) < 1.0)) throw Error(ErrorCode::InvalidParameter, "circle offset must satisfy |lambda| < 1");
  const Vec3 a = normalize_point(axis);
  const Mat32 e = tangent_basis(a);
  const double r = std::sqrt(1.0 - lambda * lambda);
  Loop loop;
  loop.samples.resize(n);
  for (int i = 0; i < n; ++i) {
    const double phi = 2.0 * kPi * i / n;
    loop.samples[i] = normalize_point(lambda * a + r * (std::cos(phi) * e.col(0) + std::sin(phi) * e.col(1)));
  }
  return loop;
}

Loop great_circle(const Vec3& axis, int n) { return circle(axis, 0.0, n); }

Loop latitude_circle(const Vec3& axis, double colatitude, int n) { return circle(axis, std::cos(colatitude), n); }

Loop perturbed_great_circle(int n, double amplitude, std::mt19937_64& rng) {
  if (n < 8) throw Error(ErrorCode::InvalidParameter, "loop needs at least 8 samples");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int modes[3] = {1, 3, 5};
  double amp[3], phase[3], total = 0.0;
  for (int k = 0; k < 3; ++k) {
    amp[k] = 0.5 + 0.5 * unif(rng);
    phase[k] = 2.0 * kPi * unif(rng);
    total += amp[k];
  }
  Eigen::Quaterniond q(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
  q.normalize();
  const Mat3 rot = q.toRotationMatrix();
  Loop loop;
  loop.samples.resize(n);
  for (int i = 0; i < n; ++i) {
    const double phi = 2.0 * kPi * i / n;
    double z = 0.0;
    for (int k = 0; k < 3; ++k) z += amplitude * amp[k] / total * std::cos(modes[k] * phi + phase[k]);
    loop.samples[i] = rot * normalize_point(Vec3(std::cos(phi), std::sin(phi), z));
  }
  return loop;
}

Loop loop_from_arc(const FinslerMetric& metric, const GeodesicArc& arc, int n) {
  const GeodesicArc a = flow(metric, arc.initial, arc.duration, 1e-12, n + 1);
  Loop loop;
  for (int i = 0; i < n; ++i) loop.samples.push_back(a.samples[i].x);
  return loop;
}

Loop reversed(const Loop& loop) {
  Loop out;
  const std::size_t n = loop.size();
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.samples[i] = loop.samples[(n - i) % n];
  return out;
}

Loop shifted(const Loop& loop, int k) {
  Loop out;
  const std::size_t n = loop.size();
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.samples[i] = loop.samples[wrap(static_cast<long>(i) + k, n)];
  return out;
}

LoopGeometry analyze_loop(const FinslerMetric& metric, const Loop& loop) {
  require_samples(loop);
  const std::size_t n = loop.size();
  const double du = 1.0 / static_cast<double>(n);
  const auto& x = loop.samples;
  LoopGeometry g;
  g.velocity.resize(n);
  g.normal.resize(n);
  g.speed.resize(n);
  g.kappa.resize(n);
  g.A.resize(n);
  g.w.resize(n);
  g.min_spacing = std::numeric_limits<double>::infinity();
  double spacing_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 v = d1(x, i, du);
    const Vec3 acc = d2(x, i, du);
    const double speed = v.norm();
    if (!(speed > 0.0)) throw Error(ErrorCode::ZeroSection, "loop has zero speed");
    const Vec3 tau = v / speed;
    const Vec3 nrm = x[i].cross(tau);
    const MetricJet j = metric.jet(x[i], tau);
    const double kappa = acc.dot(nrm) / (speed * speed);
    const double A = nrm.dot(j.Fvv * nrm);
    const double B = -x[i].dot(j.Fvv * nrm) + nrm.dot(j.Fvx * tau) - j.Fx.dot(nrm);
    g.velocity[i] = v;
    g.normal[i] = nrm;
    g.speed[i] = speed;
    g.kappa[i] = kappa;
    g.A[i] = A;
    g.w[i] = A * kappa + B;
    g.length += j.F * speed * du;
    g.max_abs_w = std::max(g.max_abs_w, std::abs(g.w[i]));
    const double chord = (x[(i + 1) % n] - x[i]).norm();
    g.min_spacing = std::min(g.min_spacing, chord);
    spacing_sum += chord;
  }
  g.mean_spacing = spacing_sum / static_cast<double>(n);
  return g;
}

double loop_length(const FinslerMetric& metric, const Loop& loop) {
  require_samples(loop);
  const std::size_t n = loop.size();
  const double du = 1.0 / static_cast<double>(n);
  double len = 0.0;
  for (std::size_t i = 0; i < n; ++i) len += metric.F(loop.samples[i], d1(loop.samples, i, du)) * du;
  return len;
}

std::vector<double> normal_velocity_chart(const FinslerMetric& metric, const Loop& loop) {
  require_samples(loop);
  const std::size_t n = loop.size();
  const double du = 1.0 / static_cast<double>(n);
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Chart chart(loop.samples[i]);
    std::vector<Vec2> y(9);
    for (int j = -4; j <= 4; ++j) {
      const Vec3& p = loop.samples[wrap(static_cast<long>(i) + j, n)];
      if (!chart.contains(p)) throw Error(ErrorCode::InvalidParameter, "loop too coarse for the chart stencil");
      y[j + 4] = chart.map(p);
    }
    auto ydot = [&](int j) {
      const int c = j + 4;
      return Vec2((y[c - 2] - 8.0 * y[c - 1] + 8.0 * y[c + 1] - y[c + 2]) / (12.0 * du));
    };
    std::vector<Vec2> p(5);
    for (int j = -2; j <= 2; ++j) p[j + 2] = chart.fiber_gradient(metric, y[j + 4], ydot(j));
    const Vec2 dp = (p[0] - 8.0 * p[1] + 8.0 * p[3] - p[4]) / (12.0 * du);
    const Vec2 yd = ydot(0);
    const Vec2 el = dp - chart.base_gradient(metric, y[4], yd);
    const Vec3 vel = chart.differential(y[4]) * yd;
    const double speed = vel.norm();
    const Vec3 nrm = chart.unmap(y[4]).cross(vel / speed);
    w[i] = el.dot(chart.pull_vector(y[4], nrm)) / speed;
  }
  return w;
}

VelocityField normal_velocity(const FinslerMetric& metric, const Loop& loop) {
  const LoopGeometry g = analyze_loop(metric, loop);
  const std::vector<double> wa = normal_velocity_chart(metric, loop);
  VelocityField out;
  out.w = g.w;
  for (std::size_t i = 0; i < wa.size(); ++i) out.discrepancy = std::max(out.discrepancy, std::abs(wa[i] - g.w[i]));
  const double scale = 1.0 + g.max_abs_w;
  out.warning = out.discrepancy > 1e-5 * scale;
  if (out.discrepancy > 1e-4 * scale) {
    std::ostringstream os;
    os << "extrinsic and chart normal velocities differ by " << out.discrepancy;
    throw Error(ErrorCode::VelocityInconsistency, os.str());
  }
  return out;
}

namespace {

// Cyclic tridiagonal solve a_i x_{i-1} + b_i x_i + c_i x_{i+1} = r_i by
// Sherman-Morrison on the Thomas algorithm.
std::vector<Vec3> solve_cyclic(const std::vector<double>& a, std::vector<double> b, const std::vector<double>& c,
                               const std::vector<Vec3>& r) {
  const std::size_t n = b.size();
  const double alpha = c[n - 1];
  const double beta = a[0];
  const double gamma = -b[0];
  b[0] -= gamma;
  b[n - 1] -= alpha * beta / gamma;

  auto thomas = [&](const std::vector<Vec3>& rhs) {
    std::vector<double> cp(n);
    std::vector<Vec3> dp(n);
    cp[0] = c[0] / b[0];
    dp[0] = rhs[0] / b[0];
    for (std::size_t i = 1; i < n; ++i) {
      const double m = b[i] - a[i] * cp[i - 1];
      cp[i] = c[i] / m;
      dp[i] = (rhs[i] - a[i] * dp[i - 1]) / m;
    }
    std::vector<Vec3> out(n);
    out[n - 1] = dp[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) out[i] = dp[i] - cp[i] * out[i + 1];
    return out;
  };

  const std::vector<Vec3> xs = thomas(r);
  std::vector<Vec3> u(n, Vec3::Zero());
  u[0] = Vec3::Constant(gamma);
  u[n - 1] = Vec3::Constant(alpha);
  const std::vector<Vec3> z = thomas(u);
  std::vector<Vec3> out(n);
  const Vec3 num = xs[0] + beta * xs[n - 1] / gamma;
  const Vec3 den = Vec3::Ones() + z[0] + beta * z[n - 1] / gamma;
  const Vec3 fact = num.cwiseQuotient(den);
  for (std::size_t i = 0; i < n; ++i) out[i] = xs[i] - fact.cwiseProduct(z[i]);
  return out;
}

}  // namespace

Loop redistribute(const Loop& loop) {
  require_samples(loop);
  const std::size_t n = loop.size();
  const auto& y = loop.samples;
  std::vector<double> S(n + 1, 0.0), h(n);
  for (std::size_t j = 0; j < n; ++j) {
    h[j] = (y[(j + 1) % n] - y[j]).norm();
    if (!(h[j] > 0.0)) throw Error(ErrorCode::InvalidParameter, "coincident consecutive samples");
    S[j + 1] = S[j] + h[j];
  }
  const double total = S[n];
  std::vector<double> a(n), b(n), c(n);
  std::vector<Vec3> r(n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t jm = (j + n - 1) % n;
    const std::size_t jp = (j + 1) % n;
    a[j] = h[jm];
    b[j] = 2.0 * (h[jm] + h[j]);
    c[j] = h[j];
    r[j] = 6.0 * ((y[jp] - y[j]) / h[j] - (y[j] - y[jm]) / h[jm]);
  }
  const std::vector<Vec3> M = solve_cyclic(a, b, c, r);

  const double delta = total / static_cast<double>(n);
  double s0 = 0.0;
  for (std::size_t j = 0; j < n; ++j) s0 += S[j] - static_cast<double>(j) * delta;
  s0 /= static_cast<double>(n);

  Loop out;
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = std::fmod(s0 + static_cast<double>(i) * delta, total);
    if (s < 0.0) s += total;
    std::size_t j = static_cast<std::size_t>(std::upper_bound(S.begin(), S.end(), s) - S.begin());
    j = std::min(std::max<std::size_t>(j, 1), n) - 1;
    const std::size_t jp = (j + 1) % n;
    const double hl = s - S[j];
    const double hr = S[j + 1] - s;
    const double hj = h[j];
    const Vec3 p = M[j] * (hr * hr * hr) / (6.0 * hj) + M[jp] * (hl * hl * hl) / (6.0 * hj) +
                   (y[j] / hj - M[j] * hj / 6.0) * hr + (y[jp] / hj - M[jp] * hj / 6.0) * hl;
    out.samples[i] = normalize_point(p);
  }
  return out;
}

double cutoff(double length, double rho0) {
  if (!(rho0 > 0.0)) return 1.0;
  const double s = (length - rho0) / rho0;
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  return s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
}

double dt_max(const LoopGeometry& g, double rho0) {
  const double chi = cutoff(g.length, rho0);
  if (chi == 0.0) return std::numeric_limits<double>::infinity();
  const double amax = *std::max_element(g.A.begin(), g.A.end());
  return 0.4 * g.min_spacing * g.min_spacing / (chi * amax);
}

StepOutcome step_detailed(const FinslerMetric& metric, const Loop& loop, const LoopGeometry& g, double dt,
                          const StepOptions& opt) {
  (void)metric;
  StepOutcome out;
  const double chi = cutoff(g.length, opt.rho0);
  if (chi == 0.0 || g.max_abs_w == 0.0) {
    out.loop = loop;
    out.dt = dt;
    return out;
  }
  const std::size_t n = loop.size();
  for (int attempt = 0; attempt <= opt.max_halvings; ++attempt) {
    Loop moved;
    moved.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      moved.samples[i] = normalize_point(loop.samples[i] + dt * chi * g.w[i] * g.normal[i]);
    }
    Loop next = redistribute(moved);
    const EmbeddingReport rep = check_embedded(next);
    if (rep.embedded) {
      out.loop = std::move(next);
      out.dt = dt;
      out.halvings = attempt;
      out.proximity_warning = rep.proximity_warning;
      return out;
    }
    dt *= 0.5;
  }
  throw Error(ErrorCode::EmbeddednessLost, "loop self-intersects after every step halving");
}

Loop step(const FinslerMetric& metric, const Loop& loop, double dt, double rho0) {
  const LoopGeometry g = analyze_loop(metric, loop);
  return step_detailed(metric, loop, g, dt, {rho0, 8}).loop;
}

namespace {

double dissipation_rate(const LoopGeometry& g, double chi) {
  const double du = 1.0 / static_cast<double>(g.w.size());
  double d = 0.0;
  for (std::size_t i = 0; i < g.w.size(); ++i) d += g.w[i] * g.w[i] * g.speed[i] * du;
  return chi * d;
}

FlowResult run_flow(const FinslerMetric& metric, const Loop& start, const FlowParams& p, double duration,
                    bool stop_on_convergence) {
  if (!(p.rho0 >= 0.0)) throw Error(ErrorCode::InvalidParameter, "rho0 must be nonnegative");
  if (!(p.dt_fraction > 0.0)) throw Error(ErrorCode::InvalidParameter, "dt_fraction must be positive");
  const double floor = p.ell_floor >= 0.0 ? p.ell_floor : 2.0 * p.rho0;
  FlowResult res;
  Loop cur = start;
  LoopGeometry g = analyze_loop(metric, cur);
  double t = 0.0;
  double chi = cutoff(g.length, p.rho0);
  double D = dissipation_rate(g, chi);
  double cum = 0.0;
  bool tracking = false;
  std::deque<std::pair<double, double>> history;  // (t, D)

  for (;;) {
    res.trace.records.push_back({t, g.length, g.max_abs_w, D, cum});
    history.emplace_back(t, D);
    if (history.size() > 11) history.pop_front();

    if (stop_on_convergence) {
      if (!tracking && g.max_abs_w < 10.0 * p.eps) {
        tracking = true;
        std::ostringstream os;
        os << "tracking at t=" << t << " L=" << g.length;
        res.trace.events.push_back(os.str());
      }
      if (tracking && g.max_abs_w < p.eps) {
        double ell = g.length;
        if (history.size() >= 2 && D > 0.0 && history.front().second > 0.0) {
          const double rate =
              -std::log(D / history.front().second) / (history.back().first - history.front().first);
          if (rate > 0.0) ell = g.length - D / rate;
        }
        if (std::abs(g.length - ell) < p.eps * p.eps) {
          res.status = FlowStatus::Converged;
          res.ell = ell;
          break;
        }
      }
    }
    if (g.length < floor) {
      res.status = FlowStatus::BelowFloor;
      res.ell = g.length;
      break;
    }
    if (t >= duration) {
      res.status = FlowStatus::Elapsed;
      res.ell = g.length;
      break;
    }
    if (stop_on_convergence && t >= p.t_max) {
      std::ostringstream os;
      os << "flow did not enter U(l, " << p.eps << ") by t = " << p.t_max << " (max|V| = " << g.max_abs_w << ")";
      throw FlowTimeout(os.str(), std::move(res.trace), std::move(cur));
    }

    double dt = std::min(p.dt_cap, p.dt_fraction * dt_max(g, p.rho0));
    if (std::isfinite(duration)) dt = std::min(dt, duration - t);
    const StepOutcome so = step_detailed(metric, cur, g, dt, {p.rho0, 8});
    if (so.halvings > 0) res.trace.events.push_back("step halved " + std::to_string(so.halvings) + "x at t=" +
                                                    std::to_string(t));
    if (so.proximity_warning) res.trace.events.push_back("proximity warning at t=" + std::to_string(t));
    t += so.dt;
    cur = so.loop;
    const double prev_len = g.length;
    g = analyze_loop(metric, cur);
    if (g.length > prev_len + 1e-9 * prev_len) {
      res.trace.events.push_back("length increased at t=" + std::to_string(t));
    }
    chi = cutoff(g.length, p.rho0);
    const double Dn = dissipation_rate(g, chi);
    cum += 0.5 * so.dt * (D + Dn);
    D = Dn;
    ++res.steps;
  }
  res.loop = std::move(cur);
  res.max_v = g.max_abs_w;
  return res;
}

}  // namespace

FlowResult evolve(const FinslerMetric& metric, const Loop& loop, const FlowParams& params) {
  return run_flow(metric, loop, params, std::numeric_limits<double>::infinity(), true);
}

FlowResult evolve_for(const FinslerMetric& metric, const Loop& loop, const FlowParams& params, double duration) {
  return run_flow(metric, loop, params, duration, false);
}

double dissipation_check(const FlowTrace& trace) {
  if (trace.records.size() < 2) return 0.0;
  const auto& a = trace.records.front();
  const auto& b = trace.records.back();
  const double dl = a.length - b.length;
  const double di = b.dissipation_cum - a.dissipation_cum;
  if (std::abs(dl) < 1e-10 && std::abs(di) < 1e-10) return 0.0;
  return std::abs(dl - di) / std::abs(dl);
}

}  // namespace fingeo
