#pragma once

#include <fingeo/birkhoff.hpp>
#include <fingeo/curveflow.hpp>
#include <fingeo/jacobi.hpp>
#include <fingeo/metric.hpp>

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace fingeo {

using Json = nlohmann::json;

// {"family": "round" | "ellipsoid" | "perturbed" | "quartic", "params": {...}}
//   ellipsoid: {"a", "b", "c"}
//   perturbed: {"epsilon", optional "bump": {"Q": 3x3, "q": [3], "q0"}}
//   quartic:   {"epsilon"}
// Throws ConfigError naming the offending field.
FinslerMetric metric_from_json(const Json& config);

// Field access with ConfigError messages of the form "<where>.<key>: ...".
double json_number(const Json& obj, const std::string& key, const std::string& where);
double json_number_or(const Json& obj, const std::string& key, double fallback, const std::string& where);
int json_int_or(const Json& obj, const std::string& key, int fallback, const std::string& where);

Json read_json(const std::string& path);
void write_json(const std::string& path, const Json& j);

Json loop_to_json(const Loop& loop);
Loop loop_from_json(const Json& j);
void write_loop(const std::string& path, const Loop& loop);
Loop read_loop(const std::string& path);

// One record per sample {t, x: [3], v: [3]}.
void write_arc_jsonl(const std::string& path, const GeodesicArc& arc);
GeodesicArc read_arc_jsonl(const std::string& path);

// One record per step {t, L, maxV, dissipation_cum}.
void write_trace_jsonl(const std::string& path, const FlowTrace& trace);
FlowTrace read_trace_jsonl(const std::string& path);

struct SpectrumRow {
  double length = 0.0;
  int ind_omega = 0;
  int nul_omega = 0;
  std::optional<int> nul;  // empty cell when unknown
  bool simple = false;
  std::string witness_file;
};

bool operator==(const SpectrumRow& a, const SpectrumRow& b);

void write_spectrum_csv(const std::string& path, const std::vector<SpectrumRow>& rows);
std::vector<SpectrumRow> read_spectrum_csv(const std::string& path);

// Columns t, s, t', s', tau.
void write_map_csv(const std::string& path, const std::vector<ReturnRecord>& records);

// Columns m, ind_omega, nul_omega, nul, ind_lo, ind_hi, ind, recursion_ok.
void write_index_csv(const std::string& path, const std::vector<IndexReport>& table);

// Times are exported both in arclength and normalized by the period.
Json twist_to_json(const TwistReport& rep);
Json periodic_points_to_json(const PeriodicPointsResult& res, double period, int p, int q);

}  // namespace fingeo
