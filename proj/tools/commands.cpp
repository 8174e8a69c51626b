#include "commands.hpp"

#include <fingeo/birkhoff.hpp>
#include <fingeo/curveflow.hpp>
#include <fingeo/errors.hpp>
#include <fingeo/invariants.hpp>
#include <fingeo/minmax.hpp>

#include <filesystem>
#include <random>

namespace fingeo::cli {

namespace fs = std::filesystem;

namespace {

std::string out_path(const RunConfig& rc, const std::string& name) { return (fs::path(rc.out_dir) / name).string(); }

std::string in_path(const RunConfig& rc, const std::string& p) {
  const fs::path path(p);
  if (path.is_absolute() || rc.config_dir.empty()) return p;
  return (fs::path(rc.config_dir) / path).string();
}

const Json& section(const Json& cfg, const std::string& key) {
  static const Json empty = Json::object();
  if (!cfg.contains(key)) return empty;
  if (!cfg[key].is_object()) throw Error(ErrorCode::Config, key + ": expected an object");
  return cfg[key];
}

FinslerMetric metric_of(const Json& cfg) {
  if (!cfg.is_object() || !cfg.contains("metric")) throw Error(ErrorCode::Config, "metric: missing field");
  return metric_from_json(cfg["metric"]);
}

FlowParams flow_params(const Json& cfg) {
  const Json& f = section(cfg, "flow");
  FlowParams p;
  p.rho0 = json_number_or(f, "rho0", p.rho0, "flow");
  p.eps = json_number_or(f, "eps", p.eps, "flow");
  p.ell_floor = json_number_or(f, "ell_floor", p.ell_floor, "flow");
  p.t_max = json_number_or(f, "t_max", p.t_max, "flow");
  p.dt_fraction = json_number_or(f, "dt_fraction", p.dt_fraction, "flow");
  p.dt_cap = json_number_or(f, "dt_cap", p.dt_cap, "flow");
  if (p.eps <= 0) throw Error(ErrorCode::Config, "flow.eps: must be positive");
  if (p.t_max < 0) throw Error(ErrorCode::Config, "flow.t_max: must be nonnegative");
  return p;
}

Vec3 axis_of(const Json& j, const std::string& where) {
  if (!j.contains("axis")) return Vec3::UnitZ();
  const Json& a = j["axis"];
  if (!a.is_array() || a.size() != 3 || !a[0].is_number() || !a[1].is_number() || !a[2].is_number()) {
    throw Error(ErrorCode::Config, where + ".axis: expected an array of 3 numbers");
  }
  const Vec3 v(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
  if (v.norm() == 0.0) throw Error(ErrorCode::Config, where + ".axis: must be nonzero");
  return v.normalized();
}

Loop initial_loop(const RunConfig& rc) {
  if (!rc.config.contains("loop")) throw Error(ErrorCode::Config, "loop: missing field");
  const Json& l = rc.config["loop"];
  if (!l.is_object()) throw Error(ErrorCode::Config, "loop: expected an object");
  if (l.contains("file")) {
    if (!l["file"].is_string()) throw Error(ErrorCode::Config, "loop.file: expected a string");
    return read_loop(in_path(rc, l["file"].get<std::string>()));
  }
  if (!l.contains("type") || !l["type"].is_string()) throw Error(ErrorCode::Config, "loop.type: missing field");
  const std::string type = l["type"].get<std::string>();
  const int n = json_int_or(l, "n", 128, "loop");
  if (n < 16) throw Error(ErrorCode::Config, "loop.n: at least 16 samples");
  if (type == "perturbed_great_circle") {
    std::mt19937_64 rng(rc.seed);
    return perturbed_great_circle(n, json_number_or(l, "amplitude", 0.01, "loop"), rng);
  }
  if (type == "circle") {
    const double lambda = json_number_or(l, "lambda", 0.0, "loop");
    if (std::abs(lambda) >= 1) throw Error(ErrorCode::Config, "loop.lambda: must lie in (-1, 1)");
    return circle(axis_of(l, "loop"), lambda, n);
  }
  throw Error(ErrorCode::Config, "loop.type: unknown type '" + type + "'");
}

GeodesicArc geodesic_of(const RunConfig& rc) {
  if (!rc.config.contains("geodesic") || !rc.config["geodesic"].is_string()) {
    throw Error(ErrorCode::Config, "geodesic: missing field");
  }
  const std::string path = in_path(rc, rc.config["geodesic"].get<std::string>());
  if (!fs::exists(path)) throw Error(ErrorCode::Config, "geodesic: no such file " + path);
  return read_arc_jsonl(path);
}

// A stored arc is re-closed by refinement so that indices and charts see a
// closed orbit at full precision.
GeodesicArc closed_geodesic(const FinslerMetric& metric, const GeodesicArc& stored) {
  const GeodesicState s = unit_state(metric, stored.initial.x, stored.initial.v);
  GeodesicArc arc = flow(metric, s, stored.duration);
  arc.closure = closure_error(arc.samples.front(), arc.samples.back());
  if (arc.closure < 1e-9) return arc;
  return refine_closed_geodesic(metric, s, stored.duration);
}

Json summary_json(bool converged, double ell, double eps, long steps, const std::string& status) {
  return Json{{"converged", converged}, {"ell", ell}, {"eps", eps}, {"steps", steps}, {"status", status}};
}

const char* status_name(FlowStatus s) {
  switch (s) {
    case FlowStatus::Converged: return "converged";
    case FlowStatus::BelowFloor: return "below_floor";
    case FlowStatus::Elapsed: return "elapsed";
  }
  return "unknown";
}

}  // namespace

int cmd_flow(const RunConfig& rc) {
  const FinslerMetric metric = metric_of(rc.config);
  const FlowParams params = flow_params(rc.config);
  const Loop loop = initial_loop(rc);
  try {
    const FlowResult res = evolve(metric, loop, params);
    write_trace_jsonl(out_path(rc, "trace.jsonl"), res.trace);
    write_loop(out_path(rc, "final_loop.json"), res.loop);
    write_json(out_path(rc, "summary.json"), summary_json(res.status == FlowStatus::Converged, res.ell, params.eps,
                                                         res.steps, status_name(res.status)));
    return kOk;
  } catch (const FlowTimeout& e) {
    write_trace_jsonl(out_path(rc, "trace.jsonl"), e.trace());
    write_loop(out_path(rc, "final_loop.json"), e.last());
    const double L = e.trace().records.empty() ? 0.0 : e.trace().records.back().length;
    write_json(out_path(rc, "summary.json"),
               summary_json(false, L, params.eps, static_cast<long>(e.trace().records.size()) - 1, "timeout"));
    throw;
  }
}

int cmd_minmax(const RunConfig& rc) {
  const FinslerMetric metric = metric_of(rc.config);
  ThreeGeodesicsOptions opt;
  opt.minmax.flow = flow_params(rc.config);
  const Json& mm = section(rc.config, "minmax");
  opt.minmax.epoch = json_number_or(mm, "epoch", opt.minmax.epoch, "minmax");
  opt.minmax.max_epochs = json_int_or(mm, "max_epochs", opt.minmax.max_epochs, "minmax");
  opt.minmax.rel_tol = json_number_or(mm, "rel_tol", opt.minmax.rel_tol, "minmax");
  opt.resolution = json_int_or(rc.config, "resolution", opt.resolution, "config");
  opt.n_samples = json_int_or(rc.config, "n_samples", opt.n_samples, "config");
  opt.index_iterations = json_int_or(rc.config, "index_iterations", opt.index_iterations, "config");
  if (opt.resolution < 1) throw Error(ErrorCode::Config, "config.resolution: must be positive");

  const ThreeGeodesics res = three_geodesics(metric, opt);
  std::vector<SpectrumRow> rows;
  Json geos = Json::array();
  for (std::size_t k = 0; k < res.geodesics.size(); ++k) {
    const ClosedGeodesic& g = res.geodesics[k];
    const std::string witness = "witness_" + std::to_string(k) + ".json";
    const std::string arc = "geodesic_" + std::to_string(k) + ".jsonl";
    write_loop(out_path(rc, witness), g.witness);
    write_arc_jsonl(out_path(rc, arc), g.arc);
    SpectrumRow row;
    row.length = g.arc.duration;
    row.simple = g.simple;
    row.witness_file = witness;
    if (g.index) {
      row.ind_omega = g.index->ind_omega;
      row.nul_omega = g.index->nul_omega;
      row.nul = g.index->nul;
    } else {
      row.ind_omega = -1;
      row.nul_omega = -1;
    }
    rows.push_back(row);
    Json gj{{"length", g.arc.duration}, {"level", g.level},       {"family_dim", g.family_dim},
            {"simple", g.simple},       {"closure", g.arc.closure}, {"geodesic_file", arc},
            {"witness_file", witness}};
    if (!g.index_error.empty()) gj["index_error"] = g.index_error;
    geos.push_back(gj);
  }
  write_spectrum_csv(out_path(rc, "spectrum.csv"), rows);
  write_json(out_path(rc, "summary.json"),
             Json{{"degenerate", res.degenerate}, {"levels", res.levels}, {"geodesics", geos}});
  return kOk;
}

int cmd_birkhoff(const RunConfig& rc) {
  const FinslerMetric metric = metric_of(rc.config);
  const GeodesicArc stored = geodesic_of(rc);
  const AnnulusChart chart = build_chart(metric, closed_geodesic(metric, stored));
  const double l = chart.period();

  const Json& mc = section(rc.config, "map");
  const int n_t = json_int_or(mc, "n_t", 16, "map");
  const int n_s = json_int_or(mc, "n_s", 9, "map");
  if (n_t < 1 || n_s < 1) throw Error(ErrorCode::Config, "map.n_t/n_s: must be positive");
  std::vector<ReturnRecord> records;
  for (int i = 0; i < n_t; ++i) {
    for (int j = 0; j < n_s; ++j) {
      const double s = -1.0 + 2.0 * (j + 1) / (n_s + 1);
      records.push_back(return_map(chart, l * i / n_t, s));
    }
  }
  write_map_csv(out_path(rc, "map.csv"), records);

  const Json& tc = section(rc.config, "twist");
  if (tc.value("enabled", true)) {
    TwistOptions to;
    to.n_t = json_int_or(tc, "n_t", to.n_t, "twist");
    to.n_s = json_int_or(tc, "n_s", to.n_s, "twist");
    to.delta = json_number_or(tc, "delta", to.delta, "twist");
    write_json(out_path(rc, "twist.json"), twist_to_json(twist_check(chart, to)));
  }

  const Json& pc = section(rc.config, "periodic");
  if (pc.value("enabled", true)) {
    const int p = json_int_or(pc, "p", 1, "periodic");
    const int q = json_int_or(pc, "q", 0, "periodic");
    if (p < 1) throw Error(ErrorCode::Config, "periodic.p: must be positive");
    PeriodicOptions po;
    po.tol = json_number_or(pc, "tol", po.tol, "periodic");
    write_json(out_path(rc, "periodic_points.json"), periodic_points_to_json(periodic_points(chart, p, q, po), l, p, q));
  }
  return kOk;
}

int cmd_index(const RunConfig& rc) {
  const FinslerMetric metric = metric_of(rc.config);
  const int M = json_int_or(rc.config, "M", 1, "config");
  if (M < 0) throw Error(ErrorCode::Config, "config.M: must be nonnegative");
  const GeodesicArc stored = geodesic_of(rc);
  std::vector<IndexReport> table;
  if (M > 0) table = index_table(metric, closed_geodesic(metric, stored), M);
  write_index_csv(out_path(rc, "index.csv"), table);
  return kOk;
}

int cmd_validate(const RunConfig& rc) {
  const Json metric_cfg = rc.config.is_object() && rc.config.contains("metric") ? rc.config["metric"] : Json();
  InvariantOptions opt;
  opt.seed = rc.seed;
  Json report{{"metric", metric_cfg}};
  try {
    const FinslerMetric metric = metric_of(rc.config);
    const InvariantReport rep = run_invariants(metric, opt);
    Json checks = Json::array();
    for (const auto& c : rep.checks) {
      checks.push_back(
          {{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance}, {"passed", c.passed}, {"detail", c.detail}});
    }
    report["name"] = rep.metric;
    report["passed"] = rep.all_passed();
    report["checks"] = checks;
    write_json(out_path(rc, "report.json"), report);
    return rep.all_passed() ? kOk : kNumerical;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Config) throw;
    report["passed"] = false;
    report["error"] = e.what();
    write_json(out_path(rc, "report.json"), report);
    throw;
  }
}

}  // namespace fingeo::cli
