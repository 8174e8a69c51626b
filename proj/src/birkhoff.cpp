#include <fingeo/birkhoff.hpp>

#include <fingeo/curveflow.hpp>
#include <fingeo/errors.hpp>
#include <fingeo/parallel.hpp>

#include <boost/math/tools/roots.hpp>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

namespace fingeo {

AnnulusChart::AnnulusChart(FinslerMetric metric, const GeodesicArc& base, int n_samples)
    : metric_(std::move(metric)), base_(base), period_(base.duration) {
  if (!(period_ > 0.0)) throw Error(ErrorCode::ChartError, "base geodesic has no period");
  const int n = std::max(64, n_samples);
  const GeodesicArc arc = flow(metric_, base.initial, period_, 1e-12, n + 1);
  h_ = period_ / n;
  for (int i = 0; i <= n; ++i) {
    const GeodesicState& s = arc.samples[i];
    x_.push_back(s.x);
    v_.push_back(s.v);
    a_.push_back(geodesic_acceleration(metric_, s.x, s.v));
  }
}

double AnnulusChart::wrap(double t) const {
  double r = std::fmod(t, period_);
  if (r < 0.0) r += period_;
  return r;
}

namespace {

struct Hermite {
  double h0, h1, h2, h3, h4, h5;
};

Hermite hermite(double u) {
  const double u2 = u * u, u3 = u2 * u, u4 = u3 * u, u5 = u4 * u;
  return {1.0 - 10.0 * u3 + 15.0 * u4 - 6.0 * u5, u - 6.0 * u3 + 8.0 * u4 - 3.0 * u5,
          0.5 * (u2 - 3.0 * u3 + 3.0 * u4 - u5),  0.5 * (u3 - 2.0 * u4 + u5),
          -4.0 * u3 + 7.0 * u4 - 3.0 * u5,        10.0 * u3 - 15.0 * u4 + 6.0 * u5};
}

Hermite hermite_d(double u) {
  const double u2 = u * u, u3 = u2 * u, u4 = u3 * u;
  return {-30.0 * u2 + 60.0 * u3 - 30.0 * u4, 1.0 - 18.0 * u2 + 32.0 * u3 - 15.0 * u4,
          0.5 * (2.0 * u - 9.0 * u2 + 12.0 * u3 - 5.0 * u4), 0.5 * (3.0 * u2 - 8.0 * u3 + 5.0 * u4),
          -12.0 * u2 + 28.0 * u3 - 15.0 * u4, 30.0 * u2 - 60.0 * u3 + 30.0 * u4};
}

}  // namespace

Vec3 AnnulusChart::point(double t) const {
  const double tw = wrap(t);
  const std::size_t n = x_.size() - 1;
  const std::size_t k = std::min(n - 1, static_cast<std::size_t>(tw / h_));
  const double u = (tw - static_cast<double>(k) * h_) / h_;
  const Hermite b = hermite(u);
  const Vec3 p = b.h0 * x_[k] + h_ * b.h1 * v_[k] + h_ * h_ * b.h2 * a_[k] + h_ * h_ * b.h3 * a_[k + 1] +
                 h_ * b.h4 * v_[k + 1] + b.h5 * x_[k + 1];
  return normalize_point(p);
}

Vec3 AnnulusChart::velocity(double t) const {
  const double tw = wrap(t);
  const std::size_t n = x_.size() - 1;
  const std::size_t k = std::min(n - 1, static_cast<std::size_t>(tw / h_));
  const double u = (tw - static_cast<double>(k) * h_) / h_;
  const Hermite b = hermite_d(u);
  const Vec3 d = (b.h0 * x_[k] + h_ * b.h1 * v_[k] + h_ * h_ * b.h2 * a_[k] + h_ * h_ * b.h3 * a_[k + 1] +
                  h_ * b.h4 * v_[k + 1] + b.h5 * x_[k + 1]) /
                 h_;
  const Vec3 x = point(t);
  return project_tangent(x, d);
}

Vec3 AnnulusChart::side_normal(double t) const {
  const Vec3 x = point(t);
  return x.cross(velocity(t)).normalized();
}

double AnnulusChart::s_of(double t, const Vec3& v) const {
  const Vec3 x = point(t);
  return metric_.Fv(x, project_tangent(x, v)).dot(velocity(t));
}

Vec3 AnnulusChart::nu(double t, double s) const {
  if (!(std::abs(s) < 1.0)) throw Error(ErrorCode::InvalidParameter, "annulus coordinate needs |s| < 1");
  const Vec3 x = point(t);
  const Vec3 gd = velocity(t);
  const Vec3 T = gd.normalized();
  const Vec3 J = x.cross(T);
  auto fn = [&](double phi) {
    const Vec3 u = std::cos(phi) * T + std::sin(phi) * J;
    const Vec3 du = -std::sin(phi) * T + std::cos(phi) * J;
    const MetricJet j = metric_.jet(x, u);
    return std::make_pair(j.Fv.dot(gd) - s, du.dot(j.Fvv * gd));
  };
  std::uintmax_t iters = 60;
  const double phi = boost::math::tools::newton_raphson_iterate(fn, std::acos(s), 0.0, kPi, 50, iters);
  const Vec3 u = std::cos(phi) * T + std::sin(phi) * J;
  return u / metric_.F(x, u);
}

GeodesicState AnnulusChart::coord(double t, double s) const { return {point(t), nu(t, s)}; }

double AnnulusChart::nearest(const Vec3& p) const {
  const std::size_t n = x_.size() - 1;
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; k += 8) {
    const double d = (x_[k] - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  double t = static_cast<double>(best) * h_;
  for (int it = 0; it < 30; ++it) {
    const Vec3 x = point(t);
    const Vec3 v = velocity(t);
    const double tw = wrap(t);
    const std::size_t k = std::min(n - 1, static_cast<std::size_t>(tw / h_));
    const double u = (tw - static_cast<double>(k) * h_) / h_;
    // Interpolated acceleration is enough for the Newton slope.
    const Vec3 a = (1.0 - u) * a_[k] + u * a_[k + 1];
    const double g = (p - x).dot(v);
    const double dg = -v.squaredNorm() + (p - x).dot(a);
    double step = -g / (dg < -1e-12 ? dg : -v.squaredNorm());
    step = std::clamp(step, -8.0 * h_, 8.0 * h_);
    t += step;
    if (std::abs(step) < 1e-14 * std::max(1.0, period_)) break;
  }
  return wrap(t);
}

double AnnulusChart::side(const Vec3& p) const {
  const double t = nearest(p);
  return (p - point(t)).dot(side_normal(t));
}

AnnulusChart build_chart(const FinslerMetric& metric, const GeodesicArc& gamma) {
  AnnulusChart chart(metric, gamma);
  Loop loop;
  for (int i = 0; i < 512; ++i) loop.samples.push_back(chart.point(chart.period() * i / 512.0));
  if (!check_embedded(loop).embedded) throw Error(ErrorCode::ChartError, "base geodesic is not simple");
  for (int i = 0; i < 64; ++i) {
    const double t = chart.period() * i / 64.0;
    const Vec3 x = chart.point(t);
    const Vec3 gd = chart.velocity(t);
    const Vec3 T = gd.normalized();
    const Vec3 J = x.cross(T);
    for (int j = 0; j < 65; ++j) {
      const double phi = kPi * (j + 1) / 66.0;
      const Vec3 u = std::cos(phi) * T + std::sin(phi) * J;
      const Vec3 du = -std::sin(phi) * T + std::cos(phi) * J;
      const double ds = du.dot(metric.jet(x, u).Fvv * gd);
      if (!(ds < 0.0)) {
        std::ostringstream os;
        os << "fiber coordinate not decreasing at t=" << t << " phi=" << phi << " (ds/dphi=" << ds << ")";
        throw Error(ErrorCode::ChartError, os.str());
      }
    }
  }
  return chart;
}

namespace {

double wrap_diff(double a, double b, double period) {
  double d = std::fmod(a - b, period);
  if (d > 0.5 * period) d -= period;
  if (d <= -0.5 * period) d += period;
  return d;
}

ReturnRecord shoot_section(const AnnulusChart& chart, double t, double s, const ReturnOptions& opt, int wanted) {
  const double ell = chart.period();
  const double cap = opt.t_cap > 0.0 ? opt.t_cap : 20.0 * ell;
  ReturnRecord rec;
  rec.t = chart.wrap(t);
  rec.s = s;
  const GeodesicState z = chart.coord(t, s);
  auto integ = make_geodesic_integrator(chart.metric(), {1e-12, std::min(0.25, ell / 32.0)});
  integ.reset(0.0, pack(z));

  auto obs = [&](double t0, const State6& y0, double t1, const State6& y1) {
    if (t1 < 1e-9) return true;
    const double expected = rec.crossings == 0 ? 1.0 : -1.0;
    const double sd = chart.side(Vec3(y1[0], y1[1], y1[2]));
    if (sd * expected < 0.0) {
      auto g = [&](double h) {
        const State6 y = integ.step_from(y0, h);
        return chart.side(Vec3(y[0], y[1], y[2]));
      };
      double lo = t0 < 1e-9 ? 1e-9 - t0 : 0.0;
      const double hi = t1 - t0;
      const double glo = g(lo);
      double hz = hi;
      if (glo * expected > 0.0) {
        std::uintmax_t iters = 200;
        auto tol = [&](double a, double b) { return std::abs(b - a) < opt.event_tol; };
        const auto br = boost::math::tools::toms748_solve(g, lo, hi, glo, sd, tol, iters);
        hz = 0.5 * (br.first + br.second);
      } else {
        hz = lo;
      }
      const State6 yz = integ.step_from(y0, hz);
      const Vec3 xz(yz[0], yz[1], yz[2]);
      const Vec3 vz(yz[3], yz[4], yz[5]);
      const double tq = chart.nearest(xz);
      const double sq = chart.s_of(tq, vz);
      ++rec.crossings;
      if (opt.grazing_tol > 0.0 && std::abs(sq) > 1.0 - opt.grazing_tol) rec.status = ReturnStatus::Grazing;
      if (rec.crossings == 1) {
        rec.t1 = tq;
        rec.s1 = sq;
        rec.tau1 = t0 + hz;
      } else {
        rec.t_hit = tq;
        rec.s_hit = sq;
        rec.tau = t0 + hz;
      }
      if (rec.crossings >= wanted) return false;
    }
    return t1 < cap;
  };
  integ.advance_to(cap, obs);
  if (rec.crossings < wanted) rec.status = ReturnStatus::NoReturn;
  if (wanted == 1) {
    rec.t_hit = rec.t1;
    rec.s_hit = rec.s1;
    rec.tau = rec.tau1;
  }
  return rec;
}

}  // namespace

ReturnRecord return_map(const AnnulusChart& chart, double t, double s, const ReturnOptions& opt) {
  return shoot_section(chart, t, s, opt, 2);
}

double reversibility_defect(const AnnulusChart& chart, double t, double s) {
  ReturnOptions opt;
  opt.grazing_tol = 0.0;
  const double ell = chart.period();
  const ReturnRecord r1 = shoot_section(chart, t, s, opt, 2);
  const ReturnRecord r2 = shoot_section(chart, r1.t_hit, r1.s_hit, opt, 1);
  const ReturnRecord r3 = shoot_section(chart, r2.t1, -r2.s1, opt, 2);
  const ReturnRecord r4 = shoot_section(chart, r3.t_hit, r3.s_hit, opt, 1);
  for (const auto* r : {&r1, &r2, &r3, &r4}) {
    if (r->status == ReturnStatus::NoReturn) return std::numeric_limits<double>::infinity();
  }
  return std::max(std::abs(wrap_diff(r4.t1, t, ell)), std::abs(-r4.s1 - s));
}

BoundaryExtension boundary_extension(const AnnulusChart& chart, int n_t) {
  BoundaryExtension ext;
  const double ell = chart.period();
  ext.period = ell;
  std::vector<std::pair<double, double>> vals = parallel_map(static_cast<std::size_t>(n_t), [&](std::size_t i) {
    const double t = ell * static_cast<double>(i) / n_t;
    const GeodesicState s{chart.point(t), chart.velocity(t)};
    const auto fwd = jacobi_zeros(chart.metric(), s, 3.0 * ell, 2);
    const auto bwd = jacobi_zeros(chart.metric(), {s.x, -s.v}, 3.0 * ell, 2);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return std::make_pair(fwd.size() >= 2 ? t + fwd[1] : nan, bwd.size() >= 2 ? t - bwd[1] : nan);
  });
  for (int i = 0; i < n_t; ++i) {
    const double t = ell * i / n_t;
    if (std::isnan(vals[i].first) || std::isnan(vals[i].second)) {
      ext.no_conjugate_points = true;
      ext.t.clear();
      ext.t2.clear();
      ext.tm2.clear();
      return ext;
    }
    ext.t.push_back(t);
    ext.t2.push_back(vals[i].first);
    ext.tm2.push_back(vals[i].second);
  }
  for (int i = 0; i < n_t; ++i) {
    const int j = (i + 1) % n_t;
    const double wrap = j == 0 ? ell : 0.0;
    if (ext.t2[j] + wrap < ext.t2[i] - 1e-6 || ext.tm2[j] + wrap < ext.tm2[i] - 1e-6) {
      std::ostringstream os;
      os << "boundary extension not monotone between t=" << ext.t[i] << " and the next grid time";
      throw Error(ErrorCode::ExtensionError, os.str());
    }
  }
  return ext;
}

TwistReport twist_check(const AnnulusChart& chart, const TwistOptions& opt) {
  TwistReport rep;
  const double ell = chart.period();
  rep.period = ell;
  const BoundaryExtension ext = boundary_extension(chart, opt.n_t);
  if (ext.no_conjugate_points) {
    rep.no_conjugate_points = true;
    return rep;
  }
  rep.t = ext.t;
  rep.t2 = ext.t2;
  rep.tm2 = ext.tm2;
  rep.margin_top = std::numeric_limits<double>::infinity();
  rep.margin_bottom = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rep.t.size(); ++i) {
    rep.margin_top = std::min(rep.margin_top, ell - (rep.t2[i] - rep.t[i]));
    rep.margin_bottom = std::min(rep.margin_bottom, ell - (rep.t[i] - rep.tm2[i]));
  }
  rep.twist = rep.margin_top > 0.0 && rep.margin_bottom > 0.0;

  std::vector<double> s_grid;
  for (int j = 0; j < opt.n_s; ++j) s_grid.push_back((1.0 - opt.delta) - j * 2.0 * (1.0 - opt.delta) / (opt.n_s - 1));

  struct LiftOut {
    double top = 0.0, bottom = 0.0, limit_err = 0.0;
    int refinements = 0;
    int ind = -1;
  };
  const auto outs = parallel_map(rep.t.size(), [&](std::size_t i) {
    LiftOut o;
    const double t = rep.t[i];
    auto hit = [&](double s) {
      const ReturnRecord r = return_map(chart, t, s);
      if (r.status == ReturnStatus::NoReturn) {
        std::ostringstream os;
        os << "no return at (t, s) = (" << t << ", " << s << ")";
        throw Error(ErrorCode::LiftError, os.str());
      }
      return r.t_hit;
    };
    auto unwrap = [&](double raw, double ref) { return ref + wrap_diff(raw, ref, ell); };
    double a = unwrap(hit(s_grid[0]), rep.t2[i] - ell);
    o.top = a;
    for (std::size_t j = 1; j < s_grid.size(); ++j) {
      const double next = unwrap(hit(s_grid[j]), a);
      if (std::abs(next - a) > 0.25 * ell) {
        ++o.refinements;
        double prev = a;
        for (int k = 1; k <= 4; ++k) {
          const double s = s_grid[j - 1] + (s_grid[j] - s_grid[j - 1]) * k / 4.0;
          const double v = unwrap(hit(s), prev);
          if (std::abs(v - prev) > 0.45 * ell) {
            std::ostringstream os;
            os << "lift jumps by " << v - prev << " at t=" << t << " s=" << s;
            throw Error(ErrorCode::LiftError, os.str());
          }
          prev = v;
        }
        a = prev;
      } else {
        a = next;
      }
    }
    o.bottom = a;

    ReturnOptions ro;
    ro.grazing_tol = 0.0;
    const double edge = 1.0 - opt.boundary_standoff;
    const ReturnRecord rt = return_map(chart, t, edge, ro);
    const ReturnRecord rb = return_map(chart, t, -edge, ro);
    o.limit_err = std::max(std::abs(wrap_diff(rt.t_hit, rep.t2[i] - ell, ell)),
                           std::abs(wrap_diff(rb.t_hit, rep.tm2[i] + ell, ell)));
    if (opt.check_index) o.ind = index_omega(chart.metric(), chart.base(), t, 1).ind_omega;
    return o;
  });
  for (std::size_t i = 0; i < outs.size(); ++i) {
    rep.lift_top.push_back(outs[i].top);
    rep.lift_bottom.push_back(outs[i].bottom);
    rep.boundary_limit_error = std::max(rep.boundary_limit_error, outs[i].limit_err);
    rep.lift_refinements += outs[i].refinements;
    if (opt.check_index) {
      rep.ind_omega.push_back(outs[i].ind);
      // A conjugate point closer than 1e-7 to the period does not count as interior.
      const bool interior = ell - (rep.t2[i] - rep.t[i]) > 1e-7;
      if (interior != (outs[i].ind >= 2)) rep.index_consistent = false;
    }
  }
  return rep;
}

namespace {

struct Iterate {
  double t = 0.0, s = 0.0, tau = 0.0;
  std::vector<std::pair<double, double>> orbit;  // points visited before each return
  bool ok = true;
};

Iterate iterate_map(const AnnulusChart& chart, double t, double s, int p) {
  Iterate it;
  it.t = t;
  it.s = s;
  for (int k = 0; k < p; ++k) {
    it.orbit.emplace_back(it.t, it.s);
    ReturnOptions ro;
    ro.grazing_tol = 0.0;
    const ReturnRecord r = return_map(chart, it.t, it.s, ro);
    if (r.status == ReturnStatus::NoReturn || !(std::abs(r.s_hit) < 1.0)) {
      it.ok = false;
      return it;
    }
    it.t = r.t_hit;
    it.s = r.s_hit;
    it.tau += r.tau;
  }
  return it;
}

Vec2 displacement(const AnnulusChart& chart, const Iterate& it, double t, double s) {
  return Vec2(wrap_diff(it.t, t, chart.period()), it.s - s);
}

// Lift value a(t, s) by tracking down from s = 1 - 1e-3 anchored at t2 - l.
std::optional<double> lift_at(const AnnulusChart& chart, double t, double s) {
  const double ell = chart.period();
  const GeodesicState st{chart.point(t), chart.velocity(t)};
  const auto fwd = jacobi_zeros(chart.metric(), st, 3.0 * ell, 2);
  if (fwd.size() < 2) return std::nullopt;
  const double top = 1.0 - 1e-3;
  const int steps = std::max(1, static_cast<int>(std::ceil((top - s) / 0.05)));
  double a = t + fwd[1] - ell;
  for (int k = 0; k <= steps; ++k) {
    const double sk = top - (top - s) * k / steps;
    const ReturnRecord r = return_map(chart, t, sk);
    if (r.status == ReturnStatus::NoReturn) return std::nullopt;
    a += wrap_diff(r.t_hit, a, ell);
  }
  return a;
}

}  // namespace

PeriodicPointsResult periodic_points(const AnnulusChart& chart, int p, int q, const PeriodicOptions& opt) {
  if (p < 1) throw Error(ErrorCode::InvalidParameter, "period p must be positive");
  const double ell = chart.period();
  std::vector<std::pair<double, double>> seeds = opt.seeds;
  if (seeds.empty()) {
    for (int i = 0; i < 16; ++i) {
      for (double s : {-0.6, -0.3, 0.0, 0.3, 0.6}) seeds.emplace_back(ell * i / 16.0, s);
    }
  }

  struct SeedOut {
    bool converged = false;
    bool singular = false;
    PeriodicPoint pt;
  };
  auto solve = [&](std::size_t idx) {
    SeedOut o;
    double t = seeds[idx].first;
    double s = seeds[idx].second;
    const double h = 1e-5;
    auto jac = [&](double tt, double ss, Mat2& J) {
      for (int c = 0; c < 2; ++c) {
        const double dt = c == 0 ? h : 0.0;
        const double ds = c == 1 ? h : 0.0;
        const Iterate ip = iterate_map(chart, tt + dt, ss + ds, p);
        const Iterate im = iterate_map(chart, tt - dt, ss - ds, p);
        if (!ip.ok || !im.ok) return false;
        J.col(c) = (displacement(chart, ip, tt + dt, ss + ds) - displacement(chart, im, tt - dt, ss - ds)) / (2.0 * h);
      }
      return true;
    };
    for (int it = 0; it < opt.max_iterations; ++it) {
      if (!(std::abs(s) < 0.9995)) return o;
      const Iterate cur = iterate_map(chart, t, s, p);
      if (!cur.ok) return o;
      const Vec2 D = displacement(chart, cur, t, s);
      if (D.norm() < opt.tol) {
        o.converged = true;
        o.pt.t = chart.wrap(t);
        o.pt.s = s;
        o.pt.residual = D.norm();
        o.pt.flight_time = cur.tau;
        Mat2 J;
        if (jac(t, s, J)) {
          const Eigen::JacobiSVD<Mat2> svd(J);
          o.singular = svd.singularValues()[1] < 1e-4;
        }
        return o;
      }
      Mat2 J;
      if (!jac(t, s, J)) return o;
      const Eigen::JacobiSVD<Mat2> svd(J, Eigen::ComputeFullU | Eigen::ComputeFullV);
      if (!(svd.singularValues()[1] > 1e-12)) return o;
      Vec2 step = -svd.solve(D);
      const double norm = step.norm();
      if (norm > 0.2) step *= 0.2 / norm;
      t += step[0];
      s += step[1];
    }
    return o;
  };
  const std::vector<SeedOut> outs =
      opt.parallel ? parallel_map(seeds.size(), solve) : serial_map(seeds.size(), solve);

  PeriodicPointsResult res;
  bool any = false;
  bool all_singular = true;
  for (const SeedOut& o : outs) {
    if (!o.converged) continue;
    any = true;
    all_singular = all_singular && o.singular;
    bool dup = false;
    for (const auto& e : res.points) {
      if (std::abs(wrap_diff(e.t, o.pt.t, ell)) < opt.dedupe && std::abs(e.s - o.pt.s) < opt.dedupe) dup = true;
    }
    if (!dup) res.points.push_back(o.pt);
  }
  res.continuum = any && all_singular;

  std::vector<PeriodicPoint> kept;
  for (PeriodicPoint& pt : res.points) {
    // Rotation class from the lift along the orbit.
    const Iterate orbit = iterate_map(chart, pt.t, pt.s, p);
    double total = 0.0;
    bool lift_ok = true;
    for (const auto& [tk, sk] : orbit.orbit) {
      const auto a = lift_at(chart, tk, sk);
      if (!a) {
        lift_ok = false;
        break;
      }
      total += *a - tk;
    }
    pt.q = lift_ok ? static_cast<int>(std::lround(total / ell)) : 0;
    const GeodesicState z = chart.coord(pt.t, pt.s);
    pt.closure = closure_error(z, flow_to(chart.metric(), z, pt.flight_time));
    if (pt.q == q) kept.push_back(pt);
  }
  std::sort(kept.begin(), kept.end(), [](const PeriodicPoint& a, const PeriodicPoint& b) {
    return a.t < b.t || (a.t == b.t && a.s < b.s);
  });
  res.points = std::move(kept);
  return res;
}

double exactness_defect(const AnnulusChart& chart, double t0, double s0, double rt, double rs, int K) {
  const double ell = chart.period();
  std::vector<double> tt(K), ss(K), tp(K), sp(K);
  for (int k = 0; k < K; ++k) {
    const double th = 2.0 * kPi * k / K;
    tt[k] = t0 + rt * std::cos(th);
    ss[k] = s0 + rs * std::sin(th);
  }
  const auto hits = parallel_map(static_cast<std::size_t>(K), [&](std::size_t k) {
    return return_map(chart, tt[k], ss[k]);
  });
  for (int k = 0; k < K; ++k) {
    if (hits[k].status == ReturnStatus::NoReturn) return std::numeric_limits<double>::infinity();
    sp[k] = hits[k].s_hit;
    tp[k] = k == 0 ? hits[k].t_hit : tp[k - 1] + wrap_diff(hits[k].t_hit, tp[k - 1], ell);
  }
  Eigen::FFT<double> fft;
  auto derivative = [&](const std::vector<double>& f) {
    std::vector<std::complex<double>> spec;
    fft.fwd(spec, f);
    for (int k = 0; k < K; ++k) {
      const int m = k <= K / 2 ? k : k - K;
      spec[k] *= (2 * k == K) ? std::complex<double>(0.0, 0.0) : std::complex<double>(0.0, m);
    }
    std::vector<double> out;
    fft.inv(out, spec);
    return out;
  };
  const std::vector<double> dt = derivative(tt);
  const std::vector<double> dtp = derivative(tp);
  double lhs = 0.0, rhs = 0.0;
  for (int k = 0; k < K; ++k) {
    lhs += sp[k] * dtp[k];
    rhs += ss[k] * dt[k];
  }
  const double w = 2.0 * kPi / K;
  return std::abs(w * (lhs - rhs));
}

double jacobian_det(const AnnulusChart& chart, double t, double s, double h) {
  const double ell = chart.period();
  ReturnOptions ro;
  ro.grazing_tol = 0.0;
  const ReturnRecord tp = return_map(chart, t + h, s, ro);
  const ReturnRecord tm = return_map(chart, t - h, s, ro);
  const ReturnRecord sp = return_map(chart, t, s + h, ro);
  const ReturnRecord sm = return_map(chart, t, s - h, ro);
  Mat2 J;
  J(0, 0) = wrap_diff(tp.t_hit, tm.t_hit, ell) / (2.0 * h);
  J(1, 0) = (tp.s_hit - tm.s_hit) / (2.0 * h);
  J(0, 1) = wrap_diff(sp.t_hit, sm.t_hit, ell) / (2.0 * h);
  J(1, 1) = (sp.s_hit - sm.s_hit) / (2.0 * h);
  return J.determinant();
}

}  // namespace fingeo
