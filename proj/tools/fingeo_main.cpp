#include "commands.hpp"

#include <fingeo/errors.hpp>
#include <fingeo/parallel.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace {

using namespace fingeo;
using namespace fingeo::cli;

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::Config:
    case ErrorCode::Io: return kConfig;
    case ErrorCode::Timeout: return kTimeout;
    default: return kNumerical;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical lab for reversible Finsler metrics on the 2-sphere"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir = ".";
  int threads = 0;
  std::uint64_t seed = 1;
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--threads", threads, "OpenMP threads (0: runtime default)");
  app.add_option("--seed", seed, "seed for randomized inputs");

  struct Sub {
    const char* name;
    const char* help;
    int (*run)(const RunConfig&);
  };
  const Sub subs[] = {
      {"flow", "evolve a loop by the curve shortening flow", cmd_flow},
      {"minmax", "three closed geodesics from the circle families", cmd_minmax},
      {"birkhoff", "annulus return map, twist report and periodic points", cmd_birkhoff},
      {"index", "index table of a closed geodesic and its iterates", cmd_index},
      {"validate", "invariant suite for a metric", cmd_validate},
  };
  for (const Sub& s : subs) app.add_subcommand(s.name, s.help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfig;
  }

  set_threads(threads);
  try {
    RunConfig rc;
    rc.config = read_json(config_path);
    rc.config_dir = std::filesystem::path(config_path).parent_path().string();
    rc.out_dir = out_dir;
    rc.seed = seed;
    std::filesystem::create_directories(out_dir);
    for (const Sub& s : subs) {
      if (app.got_subcommand(s.name)) return s.run(rc);
    }
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return exit_code(e.code());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "ConfigError: " << e.what() << "\n";
    return kConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "IoError: " << e.what() << "\n";
    return kConfig;
  }
  return kOk;
}
