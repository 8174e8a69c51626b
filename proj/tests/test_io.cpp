#include <doctest.h>

#include <fingeo/errors.hpp>
#include <fingeo/io.hpp>

#include <filesystem>
#include <fstream>
#include <random>

#include <unistd.h>

using namespace fingeo;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / ("fingeo_io_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string tmp(const std::string& name) { return (scratch_dir() / name).string(); }

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::Io;
}

std::string message_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("metric configs") {
  const FinslerMetric e = metric_from_json(Json::parse(R"({"family":"ellipsoid","params":{"a":1,"b":1.1,"c":1.2}})"));
  CHECK(e.F(Vec3(1, 0, 0), Vec3(0, 1, 0)) == doctest::Approx(1.1).epsilon(1e-15));
  CHECK(metric_from_json(Json::parse(R"({"family":"round"})")).F(Vec3(0, 0, 1), Vec3(3, 4, 0)) == 5.0);
  const FinslerMetric p = metric_from_json(Json::parse(R"({"family":"perturbed","params":{"epsilon":0.1}})"));
  CHECK(p.F(Vec3(0, 0, 1), Vec3(1, 0, 0)) == doctest::Approx(1.1).epsilon(1e-15));
  const FinslerMetric pb = metric_from_json(Json::parse(
      R"({"family":"perturbed","params":{"epsilon":0.1,"bump":{"Q":[[1,0,0],[0,0,0],[0,0,0]],"q":[0,0,1],"q0":0.5}}})"));
  CHECK(pb.F(Vec3(0, 0, 1), Vec3(1, 0, 0)) == doctest::Approx(1.15).epsilon(1e-15));
  CHECK(metric_from_json(Json::parse(R"({"family":"quartic","params":{"epsilon":0.05}})")).name().find("quartic") !=
        std::string::npos);

  CHECK(message_of([] { metric_from_json(Json::parse(R"({"famly":"round"})")); }).find("metric.family") !=
        std::string::npos);
  CHECK(message_of([] { metric_from_json(Json::parse(R"({"family":"ellipsoid","params":{"a":1,"b":"x","c":1}})")); })
            .find("metric.params.b") != std::string::npos);
  CHECK(message_of([] { metric_from_json(Json::parse(R"({"family":"torus"})")); }).find("torus") !=
        std::string::npos);
  CHECK(code_of([] { metric_from_json(Json::parse(R"({"family":"ellipsoid","params":{"a":1,"b":-1,"c":1}})")); }) ==
        ErrorCode::Config);
  CHECK(code_of([] { metric_from_json(Json::parse(R"({"family":"quartic","params":{"epsilon":5}})")); }) ==
        ErrorCode::ConvexityViolation);
}

TEST_CASE("loop round trip") {
  std::mt19937_64 rng(2);
  const Loop l = perturbed_great_circle(50, 0.05, rng);
  write_loop(tmp("loop.json"), l);
  const Loop r = read_loop(tmp("loop.json"));
  REQUIRE(r.size() == l.size());
  for (std::size_t i = 0; i < l.size(); ++i) CHECK(r.samples[i] == l.samples[i]);
  CHECK(code_of([] { loop_from_json(Json::parse(R"({"samples":[[1,0]]})")); }) == ErrorCode::Config);
}

TEST_CASE("arc round trip") {
  const FinslerMetric m = make_quartic(0.1);
  const GeodesicArc a = flow(m, unit_state(m, Vec3(1, 0, 0), Vec3(0, 0.3, 1)), 2.0, 1e-12, 17);
  write_arc_jsonl(tmp("arc.jsonl"), a);
  const GeodesicArc r = read_arc_jsonl(tmp("arc.jsonl"));
  REQUIRE(r.samples.size() == a.samples.size());
  CHECK(r.duration == a.duration);
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(r.times[i] == a.times[i]);
    CHECK(r.samples[i].x == a.samples[i].x);
    CHECK(r.samples[i].v == a.samples[i].v);
  }
  CHECK(code_of([] { read_arc_jsonl("/nonexistent/arc.jsonl"); }) == ErrorCode::Config);
}

TEST_CASE("trace round trip") {
  FlowTrace t;
  for (int i = 0; i < 5; ++i) t.records.push_back({0.1 * i, 6.3 - 0.01 * i, 0.1 / (i + 1), 0.0, 0.013 * i});
  write_trace_jsonl(tmp("trace.jsonl"), t);
  const FlowTrace r = read_trace_jsonl(tmp("trace.jsonl"));
  REQUIRE(r.records.size() == 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(r.records[i].t == t.records[i].t);
    CHECK(r.records[i].length == t.records[i].length);
    CHECK(r.records[i].max_v == t.records[i].max_v);
    CHECK(r.records[i].dissipation_cum == t.records[i].dissipation_cum);
  }
}

TEST_CASE("spectrum round trip") {
  const std::vector<SpectrumRow> rows = {
      {6.601085094136410, 1, 0, 0, true, "witness_0.json"},
      {2 * kPi / 3, 3, 1, std::nullopt, false, "witness_1.json"},
      {0.1 + 0.2, -1, -1, 2, true, ""},
  };
  write_spectrum_csv(tmp("spectrum.csv"), rows);
  CHECK(read_spectrum_csv(tmp("spectrum.csv")) == rows);
}

TEST_CASE("index and map tables") {
  IndexReport r;
  r.m = 2;
  r.ind_omega = 3;
  r.nul_omega = 1;
  r.nul = 2;
  r.ind = 3;
  r.ind_lo = 3;
  r.ind_hi = 4;
  IndexReport one = r;
  one.m = 1;
  one.ind_omega = 1;
  write_index_csv(tmp("index.csv"), {one, r});
  std::ifstream f(tmp("index.csv"));
  std::string header, l1, l2;
  std::getline(f, header);
  std::getline(f, l1);
  std::getline(f, l2);
  CHECK(header == "m,ind_omega,nul_omega,nul,ind_lo,ind_hi,ind,recursion_ok");
  CHECK(l2 == "2,3,1,2,3,4,3,true");

  write_index_csv(tmp("empty.csv"), {});
  std::ifstream e(tmp("empty.csv"));
  std::string only, more;
  std::getline(e, only);
  CHECK_FALSE(static_cast<bool>(std::getline(e, more)));
}

TEST_CASE("read_json reports parse errors as config errors") {
  {
    std::ofstream f(tmp("bad.json"));
    f << "{\"metric\": ";
  }
  CHECK(code_of([] { read_json(tmp("bad.json")); }) == ErrorCode::Config);
}
