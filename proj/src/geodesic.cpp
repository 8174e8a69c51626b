#include <fingeo/geodesic.hpp>

#include <fingeo/curveflow.hpp>
#include <fingeo/errors.hpp>
#include <fingeo/jacobi.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fingeo {

Vec3 geodesic_acceleration(const FinslerMetric& metric, const Vec3& x, const Vec3& v) {
  const MetricJet j = metric.jet(x, v);
  const Mat3 gvv = j.Gvv();
  const double v2 = v.squaredNorm();
  const Vec3 rhs = j.Gx() - j.Gvx() * v + v2 * (gvv * x);
  const Mat32 e = tangent_basis(x);
  const Mat2 m = e.transpose() * gvv * e;
  const double det = m.determinant();
  if (!(m(0, 0) > 0.0 && det > 0.0)) {
    std::ostringstream os;
    os << "fiber Hessian of G is not positive definite at x=(" << x.transpose() << ") v=(" << v.transpose() << ")";
    throw Error(ErrorCode::ConvexityViolation, os.str());
  }
  const Vec2 r = e.transpose() * rhs;
  const Vec2 alpha((m(1, 1) * r[0] - m(0, 1) * r[1]) / det, (m(0, 0) * r[1] - m(1, 0) * r[0]) / det);
  return e * alpha - v2 * x;
}

void project_state(double* y) {
  Eigen::Map<Vec3> x(y);
  Eigen::Map<Vec3> v(y + 3);
  x /= x.norm();
  v -= v.dot(x) * x;
}

namespace {

void geodesic_field(const FinslerMetric& metric, const double* y, double* dy) {
  const Vec3 x(y[0], y[1], y[2]);
  const Vec3 v(y[3], y[4], y[5]);
  const Vec3 a = geodesic_acceleration(metric, x, v);
  for (int i = 0; i < 3; ++i) {
    dy[i] = v[i];
    dy[3 + i] = a[i];
  }
}

}  // namespace

template <std::size_t K>
void linearized_rhs(const FinslerMetric& metric, const std::array<double, 6 * (K + 1)>& y,
                    std::array<double, 6 * (K + 1)>& dy) {
  geodesic_field(metric, y.data(), dy.data());
  const double vscale = std::max(1.0, Vec3(y[3], y[4], y[5]).norm());
  for (std::size_t k = 0; k < K; ++k) {
    const double* d = y.data() + 6 * (k + 1);
    double n2 = 0.0;
    for (int i = 0; i < 6; ++i) n2 += d[i] * d[i];
    double* out = dy.data() + 6 * (k + 1);
    if (n2 == 0.0) {
      for (int i = 0; i < 6; ++i) out[i] = 0.0;
      continue;
    }
    const double eps = 2e-6 * vscale / std::sqrt(n2);
    std::array<double, 6> yp{}, ym{}, fp{}, fm{};
    for (int i = 0; i < 6; ++i) {
      yp[i] = y[i] + eps * d[i];
      ym[i] = y[i] - eps * d[i];
    }
    geodesic_field(metric, yp.data(), fp.data());
    geodesic_field(metric, ym.data(), fm.data());
    for (int i = 0; i < 6; ++i) out[i] = (fp[i] - fm[i]) / (2.0 * eps);
  }
}

template <std::size_t K>
void project_linearized(std::array<double, 6 * (K + 1)>& y) {
  project_state(y.data());
  const Vec3 x(y[0], y[1], y[2]);
  const Vec3 v(y[3], y[4], y[5]);
  for (std::size_t k = 0; k < K; ++k) {
    Eigen::Map<Vec3> dx(y.data() + 6 * (k + 1));
    Eigen::Map<Vec3> dv(y.data() + 6 * (k + 1) + 3);
    dx -= dx.dot(x) * x;
    dv -= (dv.dot(x) + v.dot(dx)) * x;
  }
}

template void linearized_rhs<1>(const FinslerMetric&, const std::array<double, 12>&, std::array<double, 12>&);
template void linearized_rhs<2>(const FinslerMetric&, const std::array<double, 18>&, std::array<double, 18>&);
template void project_linearized<1>(std::array<double, 12>&);
template void project_linearized<2>(std::array<double, 18>&);

AdaptiveIntegrator<6> make_geodesic_integrator(const FinslerMetric& metric, const IntegrationOptions& opt) {
  typename AdaptiveIntegrator<6>::Options o;
  o.rtol = opt.tol;
  o.atol = opt.tol;
  o.max_step = opt.max_step;
  return AdaptiveIntegrator<6>([metric](const State6& y, State6& dy) { geodesic_field(metric, y.data(), dy.data()); },
                               [](State6& y) { project_state(y.data()); }, o);
}

template <std::size_t K>
AdaptiveIntegrator<6 * (K + 1)> make_linearized_integrator(const FinslerMetric& metric,
                                                            const IntegrationOptions& opt) {
  using S = std::array<double, 6 * (K + 1)>;
  typename AdaptiveIntegrator<6 * (K + 1)>::Options o;
  o.rtol = opt.tol;
  o.atol = opt.tol;
  o.max_step = opt.max_step;
  return AdaptiveIntegrator<6 * (K + 1)>([metric](const S& y, S& dy) { linearized_rhs<K>(metric, y, dy); },
                                         [](S& y) { project_linearized<K>(y); }, o);
}

template AdaptiveIntegrator<12> make_linearized_integrator<1>(const FinslerMetric&, const IntegrationOptions&);
template AdaptiveIntegrator<18> make_linearized_integrator<2>(const FinslerMetric&, const IntegrationOptions&);

GeodesicState unit_state(const FinslerMetric& metric, const Vec3& x, const Vec3& v) {
  const Vec3 xn = normalize_point(x);
  const Vec3 vt = project_tangent(xn, v);
  const double f = metric.F(xn, vt);
  if (!(f > 0.0)) throw Error(ErrorCode::ZeroSection, "cannot normalize a zero velocity");
  return {xn, vt / f};
}

GeodesicArc flow(const FinslerMetric& metric, const GeodesicState& state, double T, double tol, int n_samples) {
  if (!(T > 0.0)) throw Error(ErrorCode::InvalidParameter, "flow duration must be positive");
  const int n = n_samples > 1 ? n_samples : std::max(2, static_cast<int>(std::ceil(32.0 * T)) + 1);
  auto integ = make_geodesic_integrator(metric, {tol, 0.25});
  integ.reset(0.0, pack(state));

  GeodesicArc arc;
  arc.initial = state;
  arc.duration = T;
  arc.times.resize(n);
  arc.samples.resize(n);
  arc.times[0] = 0.0;
  arc.samples[0] = state;
  for (int k = 1; k < n; ++k) {
    const double t = (k == n - 1) ? T : T * k / (n - 1);
    integ.advance_to(t);
    arc.times[k] = t;
    arc.samples[k] = unpack(integ.state().data());
  }
  const double f0 = metric.F(state.x, state.v);
  for (const auto& s : arc.samples) {
    arc.speed_drift = std::max(arc.speed_drift, std::abs(metric.F(s.x, s.v) - f0) / f0);
  }
  return arc;
}

GeodesicState flow_to(const FinslerMetric& metric, const GeodesicState& state, double T, double tol) {
  if (T == 0.0) return state;
  auto integ = make_geodesic_integrator(metric, {tol, 0.25});
  if (T > 0.0) {
    integ.reset(0.0, pack(state));
    integ.advance_to(T);
    return unpack(integ.state().data());
  }
  // Backward in time: reverse the velocity, flow forward, reverse again.
  integ.reset(0.0, pack({state.x, -state.v}));
  integ.advance_to(-T);
  GeodesicState s = unpack(integ.state().data());
  s.v = -s.v;
  return s;
}

SpherePoint exp_map(const FinslerMetric& metric, const SpherePoint& x, const Vec3& v) {
  if (v.squaredNorm() == 0.0) return x;
  const double f = metric.F(x, v);
  return flow_to(metric, {x, v / f}, f).x;
}

namespace {

struct ShotResult {
  Vec3 end = Vec3::Zero();
  Vec3 vend = Vec3::Zero();
  Mat32 jac = Mat32::Zero();  // d end / d c for w = E c
};

ShotResult shoot(const FinslerMetric& metric, const Vec3& x, const Mat32& e, const Vec3& w) {
  auto integ = make_linearized_integrator<2>(metric, {1e-12, 0.25});
  std::array<double, 18> y{};
  for (int i = 0; i < 3; ++i) {
    y[i] = x[i];
    y[3 + i] = w[i];
    y[9 + i] = e(i, 0);
    y[15 + i] = e(i, 1);
  }
  integ.reset(0.0, y);
  integ.advance_to(1.0);
  const auto& s = integ.state();
  ShotResult r;
  r.end = Vec3(s[0], s[1], s[2]);
  r.vend = Vec3(s[3], s[4], s[5]);
  r.jac.col(0) = Vec3(s[6], s[7], s[8]);
  r.jac.col(1) = Vec3(s[12], s[13], s[14]);
  return r;
}

// Newton iteration on exp_x(E c) = y. Returns false on failure.
bool newton_shoot(const FinslerMetric& metric, const Vec3& x, const Vec3& y, Vec3 w, Vec3& w_out, Vec3& vend) {
  const Mat32 e = tangent_basis(x);
  const Mat3 py = Mat3::Identity() - y * y.transpose();
  w = project_tangent(x, w);
  ShotResult r = shoot(metric, x, e, w);
  double res = (r.end - y).norm();
  for (int it = 0; it < 50; ++it) {
    if (res < 1e-13) {
      w_out = w;
      vend = r.vend;
      return true;
    }
    const Mat32 jt = py * r.jac;
    const Vec3 rt = py * (r.end - y);
    const Mat2 n = jt.transpose() * jt;
    if (!(std::abs(n.determinant()) > 1e-300)) return false;
    const Vec2 dc = -n.ldlt().solve(jt.transpose() * rt);
    double lambda = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 20; ++ls) {
      const Vec3 wn = w + lambda * (e * dc);
      ShotResult rn;
      try {
        rn = shoot(metric, x, e, wn);
      } catch (const Error&) {
        lambda *= 0.5;
        continue;
      }
      const double resn = (rn.end - y).norm();
      if (resn < res || resn < 1e-13) {
        w = wn;
        r = rn;
        res = resn;
        improved = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!improved) {
      if (res < 1e-11) {
        w_out = w;
        vend = r.vend;
        return true;
      }
      return false;
    }
  }
  if (res < 1e-11) {
    w_out = w;
    vend = r.vend;
    return true;
  }
  return false;
}

}  // namespace

Connection connect(const FinslerMetric& metric, const SpherePoint& x, const SpherePoint& y, const Vec3& seed) {
  Connection c;
  if ((x - y).norm() == 0.0) return c;
  const double theta = round_distance(x, y);
  std::vector<Vec3> seeds;
  if (seed.squaredNorm() > 0.0) {
    seeds.push_back(seed);
  } else if (theta > kPi - 0.1) {
    const Mat32 e = tangent_basis(x);
    for (int k = 0; k < 8; ++k) {
      const double a = k * kPi / 4.0;
      seeds.push_back(theta * (std::cos(a) * e.col(0) + std::sin(a) * e.col(1)));
    }
  } else {
    seeds.push_back(round_log(x, y));
  }
  bool found = false;
  for (const Vec3& s : seeds) {
    Vec3 w, vend;
    if (!newton_shoot(metric, x, y, s, w, vend)) continue;
    const double len = metric.F(x, w);
    if (!found || len < c.length) {
      c.length = len;
      c.v0 = w / len;
      c.v1 = vend / len;
      found = true;
    }
  }
  if (!found) {
    std::ostringstream os;
    os << "shooting from (" << x.transpose() << ") to (" << y.transpose() << ") did not converge";
    throw Error(ErrorCode::NoConnection, os.str());
  }
  return c;
}

double distance(const FinslerMetric& metric, const SpherePoint& x, const SpherePoint& y) {
  return connect(metric, x, y).length;
}

double closure_error(const GeodesicState& a, const GeodesicState& b) {
  const double dx = round_distance(a.x / a.x.norm(), b.x / b.x.norm());
  const double dv = std::atan2(a.v.cross(b.v).norm(), a.v.dot(b.v));
  return std::max(dx, dv);
}

double injectivity_radius_estimate(const FinslerMetric& metric, const InjectivityOptions& opt) {
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  std::vector<GeodesicState> states;
  double fmax = 0.0;
  double fmin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < opt.n_points; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / opt.n_points;
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const Vec3 x(rho * std::cos(golden * i), rho * std::sin(golden * i), z);
    const Mat32 e = tangent_basis(x);
    for (int k = 0; k < opt.n_dirs; ++k) {
      const double th = kPi * (k + 0.5) / opt.n_dirs;
      const Vec3 u = std::cos(th) * e.col(0) + std::sin(th) * e.col(1);
      const double f = metric.F(x, u);
      fmax = std::max(fmax, f);
      fmin = std::min(fmin, f);
      states.push_back({x, u / f});
    }
  }

  double conj = std::numeric_limits<double>::infinity();
  double loop = std::numeric_limits<double>::infinity();
  const double horizon = 2.2 * kPi * fmax;
  for (const auto& s : states) {
    try {
      const auto zeros = jacobi_zeros(metric, s, 1.5 * kPi * fmax, 1);
      if (!zeros.empty()) conj = std::min(conj, zeros.front());
    } catch (const Error&) {
    }
    try {
      const int n = static_cast<int>(std::ceil(50.0 * horizon)) + 1;
      const GeodesicArc arc = flow(metric, s, horizon, 1e-10, n);
      std::vector<double> d(arc.samples.size());
      for (std::size_t k = 0; k < d.size(); ++k) d[k] = (arc.samples[k].x - s.x).norm();
      for (std::size_t k = 1; k + 1 < d.size(); ++k) {
        if (arc.times[k] > 0.1 && d[k] <= d[k - 1] && d[k] <= d[k + 1] && d[k] < 0.05) {
          loop = std::min(loop, arc.times[k]);
          break;
        }
      }
    } catch (const Error&) {
    }
  }
  const double bound = std::min(conj, 0.5 * loop);
  if (!std::isfinite(bound)) return 0.5 * kPi * fmin;
  return 0.9 * bound;
}

GeodesicState state_at(const FinslerMetric& metric, const GeodesicArc& arc, double t, double tol) {
  double tm = std::fmod(t, arc.duration);
  if (tm < 0.0) tm += arc.duration;
  return flow_to(metric, arc.initial, tm, tol);
}

namespace {

struct NodeState {
  Vec3 x;
  Vec3 v;  // F-unit
};

NodeState perturb(const FinslerMetric& metric, const NodeState& n, const Eigen::Vector3d& p) {
  const Mat32 e = tangent_basis(n.x);
  const Vec3 x = normalize_point(n.x + e * p.head<2>());
  Vec3 u = project_tangent(x, n.v);
  u /= u.norm();
  const Vec3 ur = std::cos(p[2]) * u + std::sin(p[2]) * x.cross(u);
  return {x, ur / metric.F(x, ur)};
}

Eigen::Matrix<double, 6, 1> seg_residual(const GeodesicState& end, const NodeState& target) {
  Eigen::Matrix<double, 6, 1> r;
  r.head<3>() = end.x - target.x;
  r.tail<3>() = end.v - target.v;
  return r;
}

GeodesicArc refine_nodes(const FinslerMetric& metric, std::vector<NodeState> nodes, double T,
                         const RefineOptions& opt) {
  const int k = static_cast<int>(nodes.size());
  const int nr = 6 * k;
  const int nu = 3 * k + 1;
  const double tol_int = 1e-12;
  std::vector<double> history;

  auto residual = [&](const std::vector<NodeState>& ns, double period) {
    Eigen::VectorXd r(nr);
    for (int j = 0; j < k; ++j) {
      const GeodesicState end = flow_to(metric, {ns[j].x, ns[j].v}, period / k, tol_int);
      r.segment<6>(6 * j) = seg_residual(end, ns[(j + 1) % k]);
    }
    return r;
  };

  Eigen::VectorXd r = residual(nodes, T);
  double rn = r.norm();
  history.push_back(rn);
  const double h = 1e-7;
  for (int it = 0; it < opt.max_iterations && rn > 1e-11; ++it) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(nr, nu);
    for (int j = 0; j < k; ++j) {
      const GeodesicState base_end = flow_to(metric, {nodes[j].x, nodes[j].v}, T / k, tol_int);
      (void)base_end;
      for (int m = 0; m < 3; ++m) {
        Eigen::Vector3d p = Eigen::Vector3d::Zero();
        p[m] = h;
        const NodeState np = perturb(metric, nodes[j], p);
        const NodeState nm = perturb(metric, nodes[j], -p);
        const GeodesicState ep = flow_to(metric, {np.x, np.v}, T / k, tol_int);
        const GeodesicState em = flow_to(metric, {nm.x, nm.v}, T / k, tol_int);
        J.block<6, 1>(6 * j, 3 * j + m) =
            (seg_residual(ep, nodes[(j + 1) % k]) - seg_residual(em, nodes[(j + 1) % k])) / (2.0 * h);
        const int prev = (j + k - 1) % k;
        Eigen::Matrix<double, 6, 1> dt;
        dt.head<3>() = -(np.x - nm.x) / (2.0 * h);
        dt.tail<3>() = -(np.v - nm.v) / (2.0 * h);
        J.block<6, 1>(6 * prev, 3 * j + m) += dt;
      }
    }
    {
      const Eigen::VectorXd rp = residual(nodes, T + h);
      const Eigen::VectorXd rm = residual(nodes, T - h);
      J.col(nu - 1) = (rp - rm) / (2.0 * h);
    }
    const Eigen::VectorXd step = -J.completeOrthogonalDecomposition().solve(r);
    double lambda = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 12; ++ls) {
      std::vector<NodeState> trial(k);
      for (int j = 0; j < k; ++j) trial[j] = perturb(metric, nodes[j], lambda * step.segment<3>(3 * j));
      const double Tt = T + lambda * step[nu - 1];
      Eigen::VectorXd rt;
      try {
        rt = residual(trial, Tt);
      } catch (const Error&) {
        lambda *= 0.5;
        continue;
      }
      if (rt.norm() < rn) {
        nodes = std::move(trial);
        T = Tt;
        r = rt;
        rn = r.norm();
        improved = true;
        break;
      }
      lambda *= 0.5;
    }
    history.push_back(rn);
    if (!improved) break;
  }

  const GeodesicState start{nodes[0].x, nodes[0].v};
  GeodesicArc arc = flow(metric, start, T, tol_int, opt.n_samples);
  arc.closure = closure_error(arc.samples.front(), arc.samples.back());
  if (!(arc.closure < opt.tol)) {
    std::ostringstream os;
    os << "closure " << arc.closure << " >= " << opt.tol << "; residual history:";
    for (double v : history) os << " " << v;
    throw Error(ErrorCode::RefinementFailed, os.str());
  }
  return arc;
}

}  // namespace

GeodesicArc refine_closed_geodesic(const FinslerMetric& metric, const GeodesicState& guess, double period,
                                   const RefineOptions& opt) {
  const int k = std::max(2, opt.segments);
  std::vector<NodeState> nodes;
  GeodesicState s = unit_state(metric, guess.x, guess.v);
  for (int j = 0; j < k; ++j) {
    nodes.push_back({s.x, s.v});
    s = flow_to(metric, s, period / k);
  }
  return refine_nodes(metric, std::move(nodes), period, opt);
}

GeodesicArc refine_closed_geodesic(const FinslerMetric& metric, const Loop& seed, const RefineOptions& opt) {
  const LoopGeometry g = analyze_loop(metric, seed);
  if (!(g.max_abs_w < 0.1)) {
    std::ostringstream os;
    os << "seed has max|V| = " << g.max_abs_w << ", refinement needs < 0.1";
    throw Error(ErrorCode::PreconditionViolated, os.str());
  }
  const int n = static_cast<int>(seed.size());
  const int k = std::max(2, std::min(opt.segments, n));
  std::vector<NodeState> nodes;
  for (int j = 0; j < k; ++j) {
    const int i = (j * n) / k;
    const GeodesicState s = unit_state(metric, seed.samples[i], g.velocity[i]);
    nodes.push_back({s.x, s.v});
  }
  return refine_nodes(metric, std::move(nodes), g.length, opt);
}

}  // namespace fingeo
