#pragma once

#include "pnpreg/cli/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>

namespace pnpreg::cli {

enum ExitCode { kAllPassed = 0, kExecutionError = 1, kCheckFailed = 2 };

struct CommandOptions {
  std::string command;
  std::filesystem::path config;
  std::filesystem::path out = ".";
  std::optional<std::uint64_t> seed;
  bool verbose = false;
};

/// Named pass/fail checks collected into the report.
class Checks {
public:
  void add(const std::string& name, bool passed, double value, double threshold);
  void add(const std::string& name, bool passed);
  bool all_passed() const { return all_; }
  const Json& json() const { return list_; }

private:
  Json list_ = Json::array();
  bool all_ = true;
};

/// Runs one command: writes report.json and the command's CSV tables to
/// `opts.out`. Returns 0 when every check passed, 2 when a check failed and 1
/// on invalid input or execution errors (message written to `err`).
int run_command(const CommandOptions& opts, std::ostream& log, std::ostream& err);

/// Same as run_command with an already parsed configuration.
int run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& config_dir,
                   const std::filesystem::path& out, bool verbose, std::ostream& log);

} // namespace pnpreg::cli
