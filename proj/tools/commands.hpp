#pragma once

#include <fingeo/io.hpp>

#include <cstdint>
#include <string>

namespace fingeo::cli {

struct RunConfig {
  Json config;
  std::string config_dir;  // relative input paths resolve against this
  std::string out_dir;
  std::uint64_t seed = 1;
};

// Exit status by error class.
enum Exit : int { kOk = 0, kConfig = 2, kNumerical = 3, kTimeout = 4 };

int cmd_flow(const RunConfig& rc);
int cmd_minmax(const RunConfig& rc);
int cmd_birkhoff(const RunConfig& rc);
int cmd_index(const RunConfig& rc);
int cmd_validate(const RunConfig& rc);

}  // namespace fingeo::cli
