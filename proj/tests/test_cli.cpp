#include <doctest.h>

#include <fingeo/io.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace fingeo;
namespace fs = std::filesystem;

namespace {

const fs::path& work() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / ("fingeo_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string write_config(const std::string& name, const std::string& text) {
  const fs::path p = work() / name;
  std::ofstream(p) << text;
  return p.string();
}

int run(const std::string& args) {
  const std::string cmd = std::string(FINGEO_CLI_PATH) + " " + args + " > " + (work() / "stdout.txt").string() +
                          " 2> " + (work() / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string out(const std::string& dir) { return (work() / dir).string(); }

const char* kEllipsoid = R"({"family": "ellipsoid", "params": {"a": 1, "b": 1.1, "c": 1.2}})";

}  // namespace

TEST_CASE("flow command") {
  const std::string cfg = write_config(
      "flow.json", R"({"metric": {"family": "round"}, "loop": {"type": "perturbed_great_circle", "n": 96}})");
  REQUIRE(run("flow --config " + cfg + " --out " + out("flow") + " --seed 3") == 0);
  const Json summary = read_json(out("flow") + "/summary.json");
  CHECK(summary["converged"] == true);
  CHECK(std::abs(summary["ell"].get<double>() - 2 * kPi) < 1e-4);
  CHECK(summary["eps"] == 1e-3);
  CHECK(read_loop(out("flow") + "/final_loop.json").size() == 96);
  CHECK(read_trace_jsonl(out("flow") + "/trace.jsonl").records.size() == summary["steps"].get<std::size_t>() + 1);

  // Identical config and seed give identical bytes.
  REQUIRE(run("flow --config " + cfg + " --out " + out("flow2") + " --seed 3") == 0);
  for (const char* f : {"summary.json", "final_loop.json", "trace.jsonl"}) {
    CHECK(slurp(out("flow") + "/" + f) == slurp(out("flow2") + "/" + f));
  }
}

TEST_CASE("flow with zero time budget times out") {
  const std::string cfg = write_config(
      "flow0.json",
      R"({"metric": {"family": "round"}, "loop": {"type": "perturbed_great_circle"}, "flow": {"t_max": 0}})");
  CHECK(run("flow --config " + cfg + " --out " + out("flow0")) == 4);
  CHECK(read_trace_jsonl(out("flow0") + "/trace.jsonl").records.size() == 1);
  CHECK(slurp(work() / "stderr.txt").find("Timeout") != std::string::npos);
}

TEST_CASE("malformed configs exit with status 2") {
  const std::string a = write_config("a.json", R"({"metric": {"family": "ellipsoid", "params": {"a": 1, "c": 1}}})");
  CHECK(run("validate --config " + a + " --out " + out("a")) == 2);
  CHECK(slurp(work() / "stderr.txt").find("metric.params.b") != std::string::npos);

  const std::string b = write_config("b.json", R"({"metric": )");
  CHECK(run("validate --config " + b + " --out " + out("b")) == 2);

  const std::string c = write_config("c.json", R"({"metric": {"family": "round"}, "loop": {"type": "spiral"}})");
  CHECK(run("flow --config " + c + " --out " + out("c")) == 2);
  CHECK(slurp(work() / "stderr.txt").find("loop.type") != std::string::npos);

  CHECK(run("flow --out " + out("d")) == 2);
  CHECK(run("bogus --config " + a) == 2);
}

TEST_CASE("minmax, index and birkhoff pipeline") {
  const std::string mm = write_config("mm.json", std::string(R"({"metric": )") + kEllipsoid + "}");
  REQUIRE(run("minmax --config " + mm + " --out " + out("mm")) == 0);
  const auto rows = read_spectrum_csv(out("mm") + "/spectrum.csv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].length < rows[1].length);
  CHECK(rows[1].length < rows[2].length);
  for (const auto& r : rows) {
    CHECK(r.simple);
    CHECK(fs::exists(out("mm") + "/" + r.witness_file));
  }
  // Lossless: writing the parsed rows reproduces the file.
  write_spectrum_csv(out("mm") + "/again.csv", rows);
  CHECK(slurp(out("mm") + "/again.csv") == slurp(out("mm") + "/spectrum.csv"));

  const std::string idx = write_config(
      "idx.json", std::string(R"({"metric": )") + kEllipsoid + R"(, "geodesic": "mm/geodesic_0.jsonl", "M": 5})");
  REQUIRE(run("index --config " + idx + " --out " + out("idx")) == 0);
  const std::string table = slurp(out("idx") + "/index.csv");
  CHECK(std::count(table.begin(), table.end(), '\n') == 6);
  CHECK(table.find("false") == std::string::npos);

  const std::string idx0 = write_config(
      "idx0.json", std::string(R"({"metric": )") + kEllipsoid + R"(, "geodesic": "mm/geodesic_0.jsonl", "M": 0})");
  REQUIRE(run("index --config " + idx0 + " --out " + out("idx0")) == 0);
  CHECK(slurp(out("idx0") + "/index.csv") == "m,ind_omega,nul_omega,nul,ind_lo,ind_hi,ind,recursion_ok\n");

  const std::string bk = write_config(
      "bk.json", std::string(R"({"metric": )") + kEllipsoid +
                     R"(, "geodesic": "mm/geodesic_0.jsonl", "map": {"n_t": 4, "n_s": 3}, "twist": {"n_t": 8, "n_s": 17}})");
  REQUIRE(run("birkhoff --config " + bk + " --out " + out("bk")) == 0);
  const Json pp = read_json(out("bk") + "/periodic_points.json");
  CHECK(pp["points"].size() >= 4);
  for (const auto& p : pp["points"]) CHECK(p["closure"].get<double>() < 1e-6);
  const Json tw = read_json(out("bk") + "/twist.json");
  CHECK(tw["index_consistent"] == true);
  const std::string map = slurp(out("bk") + "/map.csv");
  CHECK(std::count(map.begin(), map.end(), '\n') == 13);
}

TEST_CASE("birkhoff on the round equator") {
  const std::string mm = write_config("rmm.json", R"({"metric": {"family": "round"}})");
  REQUIRE(run("minmax --config " + mm + " --out " + out("rmm")) == 0);
  CHECK(read_json(out("rmm") + "/summary.json")["degenerate"] == true);

  const std::string bk = write_config(
      "rbk.json",
      R"({"metric": {"family": "round"}, "geodesic": "rmm/geodesic_0.jsonl", "map": {"n_t": 3, "n_s": 3},
          "twist": {"enabled": false}, "periodic": {"enabled": false}})");
  REQUIRE(run("birkhoff --config " + bk + " --out " + out("rbk")) == 0);
  std::ifstream f(out("rbk") + "/map.csv");
  std::string line;
  std::getline(f, line);
  int n = 0;
  while (std::getline(f, line)) {
    double t, s, t1, s1, tau;
    char c;
    std::stringstream ss(line);
    ss >> t >> c >> s >> c >> t1 >> c >> s1 >> c >> tau;
    CHECK(std::abs(std::remainder(t1 - t, 2 * kPi)) < 1e-8);
    CHECK(std::abs(s1 - s) < 1e-8);
    ++n;
  }
  CHECK(n == 9);
}

TEST_CASE("missing geodesic file") {
  const std::string bk = write_config("nobk.json", R"({"metric": {"family": "round"}, "geodesic": "missing.jsonl"})");
  CHECK(run("birkhoff --config " + bk + " --out " + out("nobk")) == 2);
  CHECK(slurp(work() / "stderr.txt").find("geodesic") != std::string::npos);
}

TEST_CASE("validate") {
  const std::string ok = write_config("v.json", R"({"metric": {"family": "round"}})");
  REQUIRE(run("validate --config " + ok + " --out " + out("v")) == 0);
  const Json rep = read_json(out("v") + "/report.json");
  CHECK(rep["passed"] == true);
  CHECK(rep["checks"].size() >= 10);

  const std::string bad = write_config("vq.json", R"({"metric": {"family": "quartic", "params": {"epsilon": 5}}})");
  CHECK(run("validate --config " + bad + " --out " + out("vq")) == 3);
  CHECK(slurp(work() / "stderr.txt").find("ConvexityViolation") != std::string::npos);
  CHECK(read_json(out("vq") + "/report.json")["passed"] == false);
}
