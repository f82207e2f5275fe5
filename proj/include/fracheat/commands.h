#pragma once

#include "fracheat/config.h"

#include <string>
#include <vector>

namespace fracheat {

  struct CommandOutcome {
    int exit_code = 0;                  // 0 ok, 1 invariant failure
    std::string report;                 // main JSON report, also written to output_dir
    std::string console;                // human-readable lines for stdout
    std::vector<std::string> artifacts; // files written
  };

  // cmd: kernel | op | solve | decompose | reg | rescale | selftest; empty action picks the default
  CommandOutcome run_subcommand(const std::string& cmd, const std::string& action, const RunConfig& cfg);

  std::vector<std::string> command_names();
  std::vector<std::string> command_actions(const std::string& cmd);

}
