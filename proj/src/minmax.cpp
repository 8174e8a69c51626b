#include <fingeo/minmax.hpp>

#include <fingeo/errors.hpp>
#include <fingeo/parallel.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fingeo {

Loop CircleFamily::member(std::size_t i) const {
  const FamilyMember& m = members.at(i);
  return circle(m.axis, m.lambda, n_samples);
}

CircleFamily family(int dim, int resolution, int n_samples) {
  if (dim < 1 || dim > 3) throw Error(ErrorCode::InvalidParameter, "family dimension must be 1, 2 or 3");
  if (resolution < 1) throw Error(ErrorCode::InvalidParameter, "family resolution must be positive");
  const int r = resolution;
  const double delta = 1e-3;
  std::vector<double> lambdas;
  for (int j = -r; j <= r; ++j) lambdas.push_back((1.0 - delta) * j / r);

  std::vector<Vec3> axes;
  if (dim == 1) {
    axes.push_back(Vec3::UnitZ());
  } else if (dim == 2) {
    for (int k = 0; k < 2 * r; ++k) {
      const double t = k * kPi / (2 * r);
      axes.emplace_back(0.0, std::sin(t), std::cos(t));
    }
  } else {
    axes.push_back(Vec3::UnitZ());
    for (int k = 1; k <= r; ++k) {
      const double polar = k * kPi / (2 * r);
      const int count = (k == r) ? 2 * r : 4 * r;
      for (int a = 0; a < count; ++a) {
        const double az = a * kPi / (2 * r);
        axes.emplace_back(std::sin(polar) * std::cos(az), std::sin(polar) * std::sin(az), std::cos(polar));
      }
    }
  }
  CircleFamily fam;
  fam.dim = dim;
  fam.resolution = resolution;
  fam.n_samples = n_samples;
  for (const Vec3& a : axes) {
    for (double l : lambdas) fam.members.push_back({a, l});
  }
  return fam;
}

MinmaxResult minmax_value(const FinslerMetric& metric, const CircleFamily& fam, const MinmaxParams& params) {
  const std::size_t n = fam.members.size();
  const double floor = params.flow.ell_floor >= 0.0 ? params.flow.ell_floor : 2.0 * params.flow.rho0;
  std::vector<Loop> loops(n);
  std::vector<double> lengths(n);
  std::vector<double> max_v(n, 0.0);
  std::vector<char> active(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    loops[i] = fam.member(i);
    lengths[i] = loop_length(metric, loops[i]);
    if (lengths[i] < floor) active[i] = 0;
  }

  MinmaxResult res;
  auto record_max = [&]() {
    double best = 0.0;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (active[i] && lengths[i] > best) {
        best = lengths[i];
        arg = i;
      }
    }
    res.epoch_max.push_back(best);
    res.witness_index = arg;
    return best;
  };
  double prev = record_max();

  struct EpochOut {
    Loop loop;
    double length = 0.0;
    double max_v = 0.0;
    bool below = false;
  };
  for (int e = 0; e < params.max_epochs; ++e) {
    auto work = [&](std::size_t i) {
      EpochOut o;
      if (!active[i]) return o;
      const FlowResult fr = evolve_for(metric, loops[i], params.flow, params.epoch);
      o.loop = fr.loop;
      o.length = fr.trace.records.back().length;
      o.max_v = fr.max_v;
      o.below = fr.status == FlowStatus::BelowFloor;
      return o;
    };
    const std::vector<EpochOut> outs = params.parallel ? parallel_map(n, work) : serial_map(n, work);
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      loops[i] = outs[i].loop;
      lengths[i] = outs[i].length;
      max_v[i] = outs[i].max_v;
      if (outs[i].below) active[i] = 0;
    }
    const double cur = record_max();
    res.epochs = e + 1;
    if (cur == 0.0) break;
    if (std::abs(prev - cur) < params.rel_tol * cur) {
      res.ell = cur;
      res.witness = loops[res.witness_index];
      res.witness_max_v = max_v[res.witness_index];
      return res;
    }
    prev = cur;
  }
  if (res.epoch_max.back() == 0.0) {
    throw Error(ErrorCode::Timeout, "every family member fell below the length floor");
  }
  std::ostringstream os;
  os << "family max did not stabilize within " << params.max_epochs << " epochs (last "
     << res.epoch_max.back() << ")";
  throw Error(ErrorCode::Timeout, os.str());
}

namespace {

struct Segments {
  std::vector<double> d;
  std::vector<Vec3> v0;  // F-unit start velocity
  std::vector<Vec3> v1;  // F-unit end velocity
};

Segments connect_all(const FinslerMetric& metric, const std::vector<Vec3>& x, const Segments* warm, double injrad) {
  const std::size_t k = x.size();
  Segments s;
  s.d.resize(k);
  s.v0.resize(k);
  s.v1.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    const Vec3& a = x[i];
    const Vec3& b = x[(i + 1) % k];
    Vec3 seed = Vec3::Zero();
    if (warm && warm->d[i] > 0.0) {
      const Vec3 u = project_tangent(a, warm->v0[i]);
      if (u.norm() > 0.0) seed = u * (round_distance(a, b) / u.norm());
    }
    const Connection c = connect(metric, a, b, seed);
    if (!(c.length < injrad)) {
      std::ostringstream os;
      os << "segment " << i << " has length " << c.length << " >= injectivity bound " << injrad;
      throw Error(ErrorCode::DomainExit, os.str());
    }
    s.d[i] = c.length;
    s.v0[i] = c.v0;
    s.v1[i] = c.v1;
  }
  return s;
}

double energy_of(const Segments& s) {
  double e = 0.0;
  for (double d : s.d) e += d * d;
  return static_cast<double>(s.d.size()) * e;
}

std::vector<Vec3> gradient_of(const FinslerMetric& metric, const std::vector<Vec3>& x, const Segments& s) {
  const std::size_t k = x.size();
  const double kk = static_cast<double>(k);
  std::vector<Vec3> g(k);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t p = (i + k - 1) % k;
    Vec3 gi = Vec3::Zero();
    if (s.d[p] > 0.0) gi += 2.0 * s.d[p] * metric.Fv(x[i], s.v1[p]);
    if (s.d[i] > 0.0) gi -= 2.0 * s.d[i] * metric.Fv(x[i], s.v0[i]);
    g[i] = project_tangent(x[i], kk * gi);
  }
  return g;
}

double norm_of(const std::vector<Vec3>& g) {
  double s = 0.0;
  for (const auto& v : g) s += v.squaredNorm();
  return std::sqrt(s);
}

}  // namespace

double broken_energy(const FinslerMetric& metric, const BrokenLoop& loop) {
  const std::size_t k = loop.vertices.size();
  double e = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double d = distance(metric, loop.vertices[i], loop.vertices[(i + 1) % k]);
    e += d * d;
  }
  return static_cast<double>(k) * e;
}

DescentResult descend_broken(const FinslerMetric& metric, const BrokenLoop& seed, const DescentOptions& opt) {
  if (seed.vertices.size() < 3) throw Error(ErrorCode::InvalidParameter, "broken loop needs at least 3 vertices");
  const double injrad = opt.injrad > 0.0 ? opt.injrad : injectivity_radius_estimate(metric);
  std::vector<Vec3> x;
  for (const auto& p : seed.vertices) x.push_back(normalize_point(p));
  const std::size_t k = x.size();

  Segments seg = connect_all(metric, x, nullptr, injrad);
  double E = energy_of(seg);
  std::vector<Vec3> g = gradient_of(metric, x, seg);
  double gn = norm_of(g);
  DescentResult res;
  res.energies.push_back(E);
  double alpha = 1.0 / (2.0 * static_cast<double>(k) * static_cast<double>(k));
  std::vector<Vec3> x_prev, g_prev;

  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    if (gn < opt.tol || E < opt.energy_floor) break;
    if (!x_prev.empty()) {
      // Barzilai-Borwein step from the ambient differences.
      double ss = 0.0, sy = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        const Vec3 si = x[i] - x_prev[i];
        const Vec3 yi = g[i] - g_prev[i];
        ss += si.squaredNorm();
        sy += si.dot(yi);
      }
      if (sy > 0.0) alpha = ss / sy;
    }
    const double max_move = 0.25 * injrad;
    double gmax = 0.0;
    for (const auto& v : g) gmax = std::max(gmax, v.norm());
    alpha = std::min(alpha, max_move / gmax);

    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      std::vector<Vec3> xn(k);
      for (std::size_t i = 0; i < k; ++i) xn[i] = normalize_point(x[i] - alpha * g[i]);
      Segments sn;
      try {
        sn = connect_all(metric, xn, &seg, injrad);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::DomainExit && ls == 39) throw;
        alpha *= 0.5;
        continue;
      }
      const double En = energy_of(sn);
      if (En <= E - 1e-4 * alpha * gn * gn) {
        x_prev = x;
        g_prev = g;
        x = std::move(xn);
        seg = std::move(sn);
        E = En;
        g = gradient_of(metric, x, seg);
        gn = norm_of(g);
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    res.energies.push_back(E);
    if (!accepted) break;
  }
  res.loop.vertices = x;
  res.energy = E;
  res.grad_norm = gn;
  res.iterations = it;
  return res;
}

BrokenLoop broken_from_loop(const FinslerMetric& metric, const Loop& loop, double injrad) {
  const double L = loop_length(metric, loop);
  const std::size_t k = std::max<std::size_t>(3, static_cast<std::size_t>(std::ceil(4.0 * L / injrad)));
  BrokenLoop b;
  const std::size_t n = loop.size();
  for (std::size_t j = 0; j < k; ++j) b.vertices.push_back(loop.samples[(j * n) / k]);
  return b;
}

namespace {

double trace_distance(const Loop& a, const Loop& b) {
  // One-sided distance from the samples of a to the polygon of b.
  double worst = 0.0;
  const std::size_t m = b.size();
  for (const Vec3& p : a.samples) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) {
      const Vec3& q0 = b.samples[j];
      const Vec3& q1 = b.samples[(j + 1) % m];
      const Vec3 u = q1 - q0;
      const double t = std::clamp((p - q0).dot(u) / u.squaredNorm(), 0.0, 1.0);
      best = std::min(best, (q0 + t * u - p).norm());
    }
    worst = std::max(worst, best);
  }
  return worst;
}

}  // namespace

bool same_geodesic(const FinslerMetric& metric, const GeodesicArc& a, const GeodesicArc& b) {
  const double l = std::max(a.duration, b.duration);
  if (std::abs(a.duration - b.duration) > 1e-4 * l) return false;
  const Loop la = loop_from_arc(metric, a, 256);
  const Loop lb = loop_from_arc(metric, b, 256);
  // Point sets do not depend on orientation, so reversal needs no extra pass.
  const double h = std::max(trace_distance(la, lb), trace_distance(lb, la));
  return h < 1e-3;
}

ThreeGeodesics three_geodesics(const FinslerMetric& metric, const ThreeGeodesicsOptions& opt) {
  MinmaxParams mp = opt.minmax;
  if (!(mp.flow.rho0 > 0.0)) mp.flow.rho0 = 0.25 * injectivity_radius_estimate(metric);
  ThreeGeodesics out;
  for (int dim = 1; dim <= 3; ++dim) {
    const CircleFamily fam = family(dim, opt.resolution, opt.n_samples);
    const MinmaxResult mm = minmax_value(metric, fam, mp);
    out.levels.push_back(mm.ell);
    ClosedGeodesic cg;
    cg.family_dim = dim;
    cg.level = mm.ell;
    cg.witness = mm.witness;
    cg.arc = refine_closed_geodesic(metric, mm.witness);
    bool duplicate = false;
    for (const auto& g : out.geodesics) {
      if (same_geodesic(metric, g.arc, cg.arc)) duplicate = true;
    }
    if (duplicate) continue;
    cg.simple = check_embedded(loop_from_arc(metric, cg.arc, 256)).embedded;
    try {
      cg.index = index_report(metric, cg.arc, std::max(1, opt.index_iterations));
    } catch (const Error& e) {
      cg.index_error = e.what();
    }
    out.geodesics.push_back(std::move(cg));
  }
  out.degenerate = out.geodesics.size() < 3;
  for (std::size_t i = 1; i < out.geodesics.size(); ++i) {
    if (!(out.geodesics[i].arc.duration > out.geodesics[i - 1].arc.duration)) out.degenerate = true;
  }
  return out;
}

}  // namespace fingeo
