#include <fingeo/io.hpp>

#include <fingeo/errors.hpp>

#include <fstream>
#include <iomanip>
#include <sstream>

namespace fingeo {

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::Config, what); }

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::Io, "cannot write " + path);
  f << std::setprecision(17);
  return f;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::Config, "cannot read " + path);
  return f;
}

Vec3 vec3_from(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) config_error(where + ": expected an array of 3 numbers");
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) config_error(where + ": expected an array of 3 numbers");
    v[i] = j[i].get<double>();
  }
  return v;
}

Json vec3_to(const Vec3& v) { return Json::array({v[0], v[1], v[2]}); }

}  // namespace

double json_number(const Json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) config_error(where + "." + key + ": missing field");
  if (!obj[key].is_number()) config_error(where + "." + key + ": expected a number");
  return obj[key].get<double>();
}

double json_number_or(const Json& obj, const std::string& key, double fallback, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  return json_number(obj, key, where);
}

int json_int_or(const Json& obj, const std::string& key, int fallback, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer()) config_error(where + "." + key + ": expected an integer");
  return obj[key].get<int>();
}

FinslerMetric metric_from_json(const Json& config) {
  if (!config.is_object()) config_error("metric: expected an object");
  if (!config.contains("family")) config_error("metric.family: missing field");
  if (!config["family"].is_string()) config_error("metric.family: expected a string");
  const std::string family = config["family"].get<std::string>();
  const Json params = config.contains("params") ? config["params"] : Json::object();
  if (!params.is_object()) config_error("metric.params: expected an object");
  try {
    if (family == "round") return make_round();
    if (family == "ellipsoid") {
      const double a = json_number(params, "a", "metric.params");
      const double b = json_number(params, "b", "metric.params");
      const double c = json_number(params, "c", "metric.params");
      return make_ellipsoid(a, b, c);
    }
    if (family == "quartic") return make_quartic(json_number(params, "epsilon", "metric.params"));
    if (family == "perturbed") {
      const double eps = json_number(params, "epsilon", "metric.params");
      QuadraticBump bump = QuadraticBump::x3_squared();
      if (params.contains("bump")) {
        const Json& b = params["bump"];
        if (!b.is_object()) config_error("metric.params.bump: expected an object");
        bump = QuadraticBump{};
        if (b.contains("Q")) {
          const Json& Q = b["Q"];
          if (!Q.is_array() || Q.size() != 3) config_error("metric.params.bump.Q: expected a 3x3 array");
          for (int i = 0; i < 3; ++i) bump.Q.row(i) = vec3_from(Q[i], "metric.params.bump.Q").transpose();
        }
        if (b.contains("q")) bump.q = vec3_from(b["q"], "metric.params.bump.q");
        bump.q0 = json_number_or(b, "q0", 0.0, "metric.params.bump");
      }
      return make_perturbed_riemannian(eps, bump);
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidParameter) config_error(std::string("metric.params: ") + e.what());
    throw;
  }
  config_error("metric.family: unknown family '" + family + "'");
}

Json read_json(const std::string& path) {
  std::ifstream f = open_in(path);
  try {
    return Json::parse(f);
  } catch (const Json::parse_error& e) {
    config_error(path + ": " + e.what());
  }
}

void write_json(const std::string& path, const Json& j) {
  std::ofstream f = open_out(path);
  f << j.dump(2) << "\n";
}

Json loop_to_json(const Loop& loop) {
  Json s = Json::array();
  for (const Vec3& p : loop.samples) s.push_back(vec3_to(p));
  return Json{{"samples", s}};
}

Loop loop_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("samples") || !j["samples"].is_array()) {
    config_error("loop.samples: missing field");
  }
  Loop loop;
  for (const Json& p : j["samples"]) loop.samples.push_back(vec3_from(p, "loop.samples"));
  return loop;
}

void write_loop(const std::string& path, const Loop& loop) { write_json(path, loop_to_json(loop)); }

Loop read_loop(const std::string& path) { return loop_from_json(read_json(path)); }

void write_arc_jsonl(const std::string& path, const GeodesicArc& arc) {
  std::ofstream f = open_out(path);
  for (std::size_t i = 0; i < arc.samples.size(); ++i) {
    f << Json{{"t", arc.times[i]}, {"x", vec3_to(arc.samples[i].x)}, {"v", vec3_to(arc.samples[i].v)}}.dump()
      << "\n";
  }
}

GeodesicArc read_arc_jsonl(const std::string& path) {
  std::ifstream f = open_in(path);
  GeodesicArc arc;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      config_error(path + ": " + e.what());
    }
    arc.times.push_back(json_number(j, "t", "arc"));
    if (!j.contains("x") || !j.contains("v")) config_error("arc.x/v: missing field");
    arc.samples.push_back({vec3_from(j["x"], "arc.x"), vec3_from(j["v"], "arc.v")});
  }
  if (arc.samples.size() < 2) config_error(path + ": arc needs at least two samples");
  arc.initial = arc.samples.front();
  arc.duration = arc.times.back() - arc.times.front();
  return arc;
}

void write_trace_jsonl(const std::string& path, const FlowTrace& trace) {
  std::ofstream f = open_out(path);
  for (const auto& r : trace.records) {
    f << Json{{"t", r.t}, {"L", r.length}, {"maxV", r.max_v}, {"dissipation_cum", r.dissipation_cum}}.dump()
      << "\n";
  }
}

FlowTrace read_trace_jsonl(const std::string& path) {
  std::ifstream f = open_in(path);
  FlowTrace trace;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const Json j = Json::parse(line);
    TraceRecord r;
    r.t = json_number(j, "t", "trace");
    r.length = json_number(j, "L", "trace");
    r.max_v = json_number(j, "maxV", "trace");
    r.dissipation_cum = json_number(j, "dissipation_cum", "trace");
    trace.records.push_back(r);
  }
  return trace;
}

bool operator==(const SpectrumRow& a, const SpectrumRow& b) {
  return a.length == b.length && a.ind_omega == b.ind_omega && a.nul_omega == b.nul_omega && a.nul == b.nul &&
         a.simple == b.simple && a.witness_file == b.witness_file;
}

void write_spectrum_csv(const std::string& path, const std::vector<SpectrumRow>& rows) {
  std::ofstream f = open_out(path);
  f << "length,ind_omega,nul_omega,nul,simple,witness_file\n";
  for (const auto& r : rows) {
    f << r.length << "," << r.ind_omega << "," << r.nul_omega << ",";
    if (r.nul) f << *r.nul;
    f << "," << (r.simple ? "true" : "false") << "," << r.witness_file << "\n";
  }
}

std::vector<SpectrumRow> read_spectrum_csv(const std::string& path) {
  std::ifstream f = open_in(path);
  std::string line;
  std::getline(f, line);
  std::vector<SpectrumRow> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    if (cells.size() != 6) config_error(path + ": expected 6 columns");
    SpectrumRow r;
    try {
      r.length = std::stod(cells[0]);
      r.ind_omega = std::stoi(cells[1]);
      r.nul_omega = std::stoi(cells[2]);
      if (!cells[3].empty()) r.nul = std::stoi(cells[3]);
    } catch (const std::exception&) {
      config_error(path + ": malformed number");
    }
    r.simple = cells[4] == "true";
    r.witness_file = cells[5];
    rows.push_back(r);
  }
  return rows;
}

void write_map_csv(const std::string& path, const std::vector<ReturnRecord>& records) {
  std::ofstream f = open_out(path);
  f << "t,s,t',s',tau\n";
  for (const auto& r : records) {
    if (r.status == ReturnStatus::NoReturn) {
      f << r.t << "," << r.s << ",,,\n";
    } else {
      f << r.t << "," << r.s << "," << r.t_hit << "," << r.s_hit << "," << r.tau << "\n";
    }
  }
}

void write_index_csv(const std::string& path, const std::vector<IndexReport>& table) {
  std::ofstream f = open_out(path);
  f << "m,ind_omega,nul_omega,nul,ind_lo,ind_hi,ind,recursion_ok\n";
  const IndexReport* base = table.empty() ? nullptr : &table.front();
  for (const auto& r : table) {
    bool ok = true;
    if (base && base->nul_omega == 1) ok = r.ind_omega == r.m * base->ind_omega + r.m - 1;
    f << r.m << "," << r.ind_omega << "," << r.nul_omega << ",";
    if (r.nul) f << *r.nul;
    f << "," << r.ind_lo << "," << r.ind_hi << ",";
    if (r.ind) f << *r.ind;
    f << "," << (ok ? "true" : "false") << "\n";
  }
}

Json twist_to_json(const TwistReport& rep) {
  Json j;
  j["period"] = rep.period;
  j["no_conjugate_points"] = rep.no_conjugate_points;
  if (rep.no_conjugate_points) return j;
  j["twist"] = rep.twist;
  j["margin_top"] = rep.margin_top;
  j["margin_bottom"] = rep.margin_bottom;
  j["margin_top_normalized"] = rep.margin_top / rep.period;
  j["margin_bottom_normalized"] = rep.margin_bottom / rep.period;
  j["boundary_limit_error"] = rep.boundary_limit_error;
  j["index_consistent"] = rep.index_consistent;
  j["lift_refinements"] = rep.lift_refinements;
  Json rows = Json::array();
  for (std::size_t i = 0; i < rep.t.size(); ++i) {
    Json r{{"t", rep.t[i] / rep.period},
           {"t2", rep.t2[i] / rep.period},
           {"tm2", rep.tm2[i] / rep.period},
           {"lift_top", rep.lift_top[i] / rep.period},
           {"lift_bottom", rep.lift_bottom[i] / rep.period}};
    if (i < rep.ind_omega.size()) r["ind_omega"] = rep.ind_omega[i];
    rows.push_back(r);
  }
  j["grid"] = rows;
  return j;
}

Json periodic_points_to_json(const PeriodicPointsResult& res, double period, int p, int q) {
  Json pts = Json::array();
  for (const auto& pt : res.points) {
    pts.push_back({{"t", pt.t / period},
                   {"t_arclength", pt.t},
                   {"s", pt.s},
                   {"residual", pt.residual},
                   {"flight_time", pt.flight_time},
                   {"closure", pt.closure},
                   {"q", pt.q}});
  }
  return Json{{"period", period}, {"p", p}, {"q", q}, {"continuum", res.continuum}, {"points", pts}};
}

}  // namespace fingeo
