#pragma once

#include <iosfwd>
#include <optional>
#include <string>

namespace rescon {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitValidation = 3 };

struct CommandOptions {
  std::string config;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

int cmd_run(const CommandOptions& opts, std::ostream& log, std::ostream& err);
int cmd_monte_carlo(const CommandOptions& opts, std::ostream& log, std::ostream& err);
int cmd_compare(const CommandOptions& opts, std::ostream& log, std::ostream& err);

/// Full command line: `rescon <run|monte-carlo|compare> --config PATH ...`.
int run_cli(int argc, const char* const* argv, std::ostream& log, std::ostream& err);

}  // namespace rescon
