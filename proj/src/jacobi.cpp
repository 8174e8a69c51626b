#include <fingeo/jacobi.hpp>

#include <fingeo/errors.hpp>

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fingeo {

Vec3 kernel_normal(const FinslerMetric& metric, const Vec3& x, const Vec3& v) {
  return x.cross(metric.Fv(x, v)).normalized();
}

double normal_component(const FinslerMetric& metric, const Vec3& x, const Vec3& v, const Vec3& dx) {
  const Vec3 mu = kernel_normal(metric, x, v);
  const Vec3 n = x.cross(v).normalized();
  return dx.dot(n) / mu.dot(n);
}

namespace {

using State12 = std::array<double, 12>;

double f_of(const FinslerMetric& metric, const State12& y) {
  return normal_component(metric, Vec3(y[0], y[1], y[2]), Vec3(y[3], y[4], y[5]), Vec3(y[6], y[7], y[8]));
}

}  // namespace

JacobiSolution jacobi_from(const FinslerMetric& metric, const GeodesicState& start, const Vec3& dx0,
                           const Vec3& dv0, double horizon, const JacobiOptions& opt) {
  if (!(horizon > 0.0)) throw Error(ErrorCode::InvalidParameter, "Jacobi horizon must be positive");
  JacobiSolution sol;
  sol.along.initial = start;
  sol.along.duration = horizon;

  auto integ = make_linearized_integrator<1>(metric, {opt.tol, 0.25});
  State12 y{};
  for (int i = 0; i < 3; ++i) {
    y[i] = start.x[i];
    y[3 + i] = start.v[i];
    y[6 + i] = dx0[i];
    y[9 + i] = dv0[i];
  }
  integ.reset(0.0, y);
  const double f_start = f_of(metric, y);
  sol.times.push_back(0.0);
  sol.f.push_back(f_start);
  double last_sign = f_start;  // sign of the last nonzero value

  auto obs = [&](double t0, const State12& y0, double t1, const State12& y1) {
    const double f1 = f_of(metric, y1);
    sol.times.push_back(t1);
    sol.f.push_back(f1);
    const bool crossed = (last_sign != 0.0) && (f1 == 0.0 || (f1 > 0.0) != (last_sign > 0.0));
    if (crossed) {
      auto g = [&](double h) { return f_of(metric, integ.step_from(y0, h)); };
      const double h1 = t1 - t0;
      double hz = h1;
      const double g0 = g(0.0);
      if (f1 != 0.0 && g0 != 0.0) {
        std::uintmax_t iters = 100;
        auto tol = [&](double a, double b) { return std::abs(b - a) < opt.zero_tol; };
        const auto br = boost::math::tools::toms748_solve(g, 0.0, h1, g0, f1, tol, iters);
        hz = 0.5 * (br.first + br.second);
      } else if (g0 == 0.0) {
        hz = 0.0;
      }
      const double d = 1e-6;
      sol.zeros.push_back(t0 + hz);
      sol.fdot_at_zeros.push_back((g(hz + d) - g(hz - d)) / (2.0 * d));
      if (opt.max_zeros > 0 && sol.zeros.size() >= opt.max_zeros) return false;
    }
    if (f1 != 0.0) last_sign = f1;
    return true;
  };
  // The vertical field starts at a zero; the sign is taken from the first step.
  if (f_start == 0.0) {
    last_sign = 0.0;
    auto first = [&](double, const State12&, double t1, const State12& y1) {
      const double f1 = f_of(metric, y1);
      sol.times.push_back(t1);
      sol.f.push_back(f1);
      last_sign = f1;
      return false;
    };
    integ.advance_to(horizon, first);
  }
  if (integ.time() < horizon) integ.advance_to(horizon, obs);
  return sol;
}

JacobiSolution jacobi_from(const FinslerMetric& metric, const GeodesicState& start, double horizon,
                           const JacobiOptions& opt) {
  return jacobi_from(metric, start, Vec3::Zero(), kernel_normal(metric, start.x, start.v), horizon, opt);
}

JacobiSolution jacobi_field(const FinslerMetric& metric, const GeodesicArc& arc, double t0, double horizon) {
  const double h = horizon > 0.0 ? horizon : arc.duration;
  const GeodesicState s = t0 == 0.0 ? arc.initial : state_at(metric, arc, t0);
  JacobiSolution sol = jacobi_from(metric, s, h);
  sol.along = arc;
  sol.t0 = t0;
  return sol;
}

std::vector<double> jacobi_zeros(const FinslerMetric& metric, const GeodesicState& start, double horizon,
                                 std::size_t max_zeros) {
  JacobiOptions opt;
  opt.max_zeros = max_zeros;
  return jacobi_from(metric, start, horizon, opt).zeros;
}

ConjugateTimes conjugate_times(const FinslerMetric& metric, const GeodesicArc& arc, double t0, double horizon) {
  if (arc.duration > 0.0 && horizon > 10.0 * arc.duration * (1.0 + 1e-12)) {
    throw Error(ErrorCode::InvalidParameter, "conjugate-time horizon exceeds 10 arc lengths");
  }
  const GeodesicState s = t0 == 0.0 ? arc.initial : state_at(metric, arc, t0);
  ConjugateTimes ct;
  for (double z : jacobi_zeros(metric, s, horizon)) ct.forward.push_back(t0 + z);
  for (double z : jacobi_zeros(metric, {s.x, -s.v}, horizon)) ct.backward.push_back(t0 - z);
  return ct;
}

OmegaIndex index_omega(const FinslerMetric& metric, const GeodesicArc& closed, double t, int m) {
  if (m < 1) throw Error(ErrorCode::InvalidParameter, "iteration count must be positive");
  const double T = m * closed.duration;
  const GeodesicState s = t == 0.0 ? closed.initial : state_at(metric, closed, t);

  auto integ = make_linearized_integrator<1>(metric, {1e-12, 0.25});
  State12 y{};
  const Vec3 mu = kernel_normal(metric, s.x, s.v);
  for (int i = 0; i < 3; ++i) {
    y[i] = s.x[i];
    y[3 + i] = s.v[i];
    y[9 + i] = mu[i];
  }
  // Reuse the zero finder on [0, T + 2e-7] and read f(T) from a separate pass.
  const JacobiSolution sol = jacobi_from(metric, s, T + 2e-7);
  integ.reset(0.0, y);
  integ.advance_to(T);
  const double fT = f_of(metric, integ.state());

  OmegaIndex out;
  bool zero_near_end = false;
  for (double z : sol.zeros) {
    if (z < T - 1e-7) {
      ++out.ind_omega;
    } else {
      zero_near_end = true;
    }
  }
  if (std::abs(fT) < 1e-8) {
    out.nul_omega = 1;
  } else if (zero_near_end || std::abs(fT) <= 1e-7) {
    std::ostringstream os;
    os << "f(" << T << ") = " << fT << " is neither clearly zero nor clearly nonzero";
    throw Error(ErrorCode::DegenerateIndex, os.str());
  }
  return out;
}

Monodromy monodromy(const FinslerMetric& metric, const GeodesicArc& closed) {
  const GeodesicState s = closed.initial;
  const Vec3 x = s.x;
  const Vec3 v = s.v;
  const MetricJet j = metric.jet(x, v);
  const Vec3 mu = kernel_normal(metric, x, v);
  const double d = (v.dot(mu) * j.Fv.dot(x) - j.Fx.dot(mu)) / j.F;
  const Vec3 w = -v.dot(mu) * x + d * v;

  Eigen::Matrix<double, 6, 2> basis;
  basis.col(0) << Vec3::Zero(), mu;
  basis.col(1) << mu, w;

  auto integ = make_linearized_integrator<2>(metric, {1e-12, 0.25});
  std::array<double, 18> y{};
  for (int i = 0; i < 6; ++i) {
    y[i] = i < 3 ? x[i] : v[i - 3];
    y[6 + i] = basis(i, 0);
    y[12 + i] = basis(i, 1);
  }
  integ.reset(0.0, y);
  integ.advance_to(closed.duration);
  const auto& e = integ.state();
  const Vec3 xe(e[0], e[1], e[2]);
  const Vec3 ve(e[3], e[4], e[5]);
  const MetricJet je = metric.jet(xe, ve);
  const Vec3 ae = geodesic_acceleration(metric, xe, ve);

  Eigen::Matrix<double, 6, 2> img;
  for (int k = 0; k < 2; ++k) {
    const Vec3 dx(e[6 + 6 * k], e[7 + 6 * k], e[8 + 6 * k]);
    const Vec3 dv(e[9 + 6 * k], e[10 + 6 * k], e[11 + 6 * k]);
    const double alpha = je.F * je.Fv.dot(dx);
    const double dG = je.F * (je.Fx.dot(dx) + je.Fv.dot(dv));
    Eigen::Matrix<double, 6, 1> col;
    col << dx - alpha * ve, dv - alpha * ae - dG * ve;
    img.col(k) = col;
  }
  Monodromy out;
  out.matrix = basis.colPivHouseholderQr().solve(img);
  out.det = out.matrix.determinant();
  Eigen::EigenSolver<Mat2> es(out.matrix);
  out.eigs = {es.eigenvalues()[0], es.eigenvalues()[1]};
  if (std::abs(out.det - 1.0) > 1e-4) {
    std::ostringstream os;
    os << "monodromy determinant " << out.det << " deviates from 1";
    throw Error(ErrorCode::Symplecticity, os.str());
  }
  return out;
}

std::optional<int> nullity(const Mat2& m_power) {
  const Eigen::JacobiSVD<Mat2> svd(m_power - Mat2::Identity());
  int n = 0;
  for (int i = 0; i < 2; ++i) {
    const double sv = svd.singularValues()[i];
    if (sv < 1e-6) {
      ++n;
    } else if (sv <= 1e-4) {
      return std::nullopt;
    }
  }
  return n;
}

FloquetResult floquet(const FinslerMetric& metric, const GeodesicArc& closed) {
  const Monodromy mono = monodromy(metric, closed);
  return {nullity(mono.matrix), mono.eigs, mono.det};
}

std::vector<IndexReport> index_table(const FinslerMetric& metric, const GeodesicArc& closed, int M) {
  std::vector<IndexReport> out;
  if (M <= 0) return out;
  const Monodromy mono = monodromy(metric, closed);
  Mat2 power = Mat2::Identity();
  std::vector<std::string> violations;
  auto fail = [&](int m, const std::string& what) {
    violations.push_back("m=" + std::to_string(m) + ": " + what);
  };

  for (int m = 1; m <= M; ++m) {
    power = power * mono.matrix;
    IndexReport r;
    r.m = m;
    const OmegaIndex om = index_omega(metric, closed, 0.0, m);
    r.ind_omega = om.ind_omega;
    r.nul_omega = om.nul_omega;
    r.nul = nullity(power);
    r.monodromy_det = power.determinant();
    Eigen::EigenSolver<Mat2> es(power);
    r.floquet_eigs = {es.eigenvalues()[0], es.eigenvalues()[1]};

    // ind >= ind_O, ind + nul >= ind_O + nul_O, ind <= ind_O + 1,
    // ind + nul <= ind_O + nul_O + 1.
    r.ind_lo = r.ind_omega;
    r.ind_hi = r.ind_omega + 1;
    if (r.nul) {
      r.ind_lo = std::max(r.ind_lo, r.ind_omega + r.nul_omega - *r.nul);
      r.ind_hi = std::min(r.ind_hi, r.ind_omega + r.nul_omega + 1 - *r.nul);
    }
    if (!out.empty()) r.ind_lo = std::max(r.ind_lo, out.front().ind_lo);

    const IndexReport* base = out.empty() ? &r : &out.front();
    if (r.nul && *r.nul > 2) fail(m, "nul > 2");
    if (r.nul_omega > 1) fail(m, "nul_Omega > 1");
    if (base->nul && *base->nul == 2) {
      if (!r.nul || *r.nul != 2) fail(m, "nul(gamma) = 2 but nul of the iterate differs");
      if (r.ind_lo % 2 == 0) ++r.ind_lo;
      if (r.ind_hi % 2 == 0) --r.ind_hi;
    }
    if (r.ind_lo > r.ind_hi) {
      fail(m, "empty Morse index interval [" + std::to_string(r.ind_lo) + ", " + std::to_string(r.ind_hi) + "]");
    } else if (r.ind_lo == r.ind_hi) {
      r.ind = r.ind_lo;
    }
    if (m > 1) {
      if (base->nul_omega == 1) {
        if (r.ind_omega != m * base->ind_omega + m - 1) fail(m, "ind_Omega iteration formula");
        if (r.nul_omega != 1) fail(m, "nul_Omega not preserved under iteration");
      }
      if (r.ind_omega < m * base->ind_omega) fail(m, "ind_Omega(gamma^m) < m ind_Omega(gamma)");
      if (r.ind_omega + r.nul_omega < m * (base->ind_omega + base->nul_omega)) {
        fail(m, "ind_Omega + nul_Omega below m times the base value");
      }
      if (r.nul && base->nul && *r.nul < *base->nul) fail(m, "nul(gamma^m) < nul(gamma)");
      if (r.ind_hi < base->ind_lo) fail(m, "ind(gamma^m) < ind(gamma)");
    }
    out.push_back(r);
  }
  if (!violations.empty()) {
    std::ostringstream os;
    for (const auto& v : violations) os << v << "; ";
    throw Error(ErrorCode::RelationViolation, os.str());
  }
  return out;
}

IndexReport index_report(const FinslerMetric& metric, const GeodesicArc& closed, int m) {
  return index_table(metric, closed, m).back();
}

SturmCheck sturm_check(const FinslerMetric& metric, const GeodesicState& start, double horizon) {
  const Vec3 x = start.x;
  const Vec3 v = start.v;
  const MetricJet j = metric.jet(x, v);
  const Vec3 mu = kernel_normal(metric, x, v);
  const double d = (v.dot(mu) * j.Fv.dot(x) - j.Fx.dot(mu)) / j.F;
  const Vec3 w = -v.dot(mu) * x + d * v;

  SturmCheck out;
  out.zeros_vertical.push_back(0.0);
  for (double z : jacobi_from(metric, start, horizon).zeros) out.zeros_vertical.push_back(z);
  out.zeros_horizontal = jacobi_from(metric, start, mu, w, horizon).zeros;

  std::vector<std::pair<double, int>> merged;
  for (double z : out.zeros_vertical) merged.emplace_back(z, 0);
  for (double z : out.zeros_horizontal) merged.emplace_back(z, 1);
  std::sort(merged.begin(), merged.end());
  out.interlaced = true;
  for (std::size_t i = 1; i < merged.size(); ++i) {
    if (merged[i].second == merged[i - 1].second || merged[i].first - merged[i - 1].first < 1e-9) {
      out.interlaced = false;
    }
  }
  return out;
}

}  // namespace fingeo
