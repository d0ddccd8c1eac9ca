#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "json.hpp"

#include "bearingform/scenario.hpp"

namespace bearingform::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitRuntime = 1,  ///< collision, timeout, infeasible scenario, failed check
  kExitUsage = 2,    ///< bad arguments, unreadable or malformed input
};

/// Reads SIM_LOG (trace, debug, info, warn, error, critical, off) and sets
/// the global log level. Unset or unknown values select warn.
void configure_logging();

/// Prints the feasibility report. 0 iff every check passes.
int cmd_validate(const std::filesystem::path& scenario_path, std::ostream& out, std::ostream& err);

struct RunResult {
  int exit_code = kExitOk;
  nlohmann::json summary;
};

/// Runs `scenario` and writes trajectory.csv, summary.json and plot/ into
/// `out_dir`. Failures before integration still produce summary.json.
RunResult run_scenario(const Scenario& scenario, const std::filesystem::path& out_dir, bool force);

int cmd_run(const std::filesystem::path& scenario_path, const std::filesystem::path& out_dir,
            bool force, std::ostream& out, std::ostream& err);

/// Runs every file matching `pattern` on up to `jobs` threads, each into
/// out_dir/<stem>, then prints the table and writes out_dir/batch.csv.
/// 2 when nothing matches; otherwise the worst per-scenario exit code.
int cmd_batch(const std::string& pattern, const std::filesystem::path& out_dir, unsigned jobs,
              std::ostream& out, std::ostream& err);

/// Recomputes the certificate for a stored trajectory. 0 iff it converged
/// and both bounds hold.
int cmd_certify(const std::filesystem::path& trajectory_csv, const std::filesystem::path& scenario_path,
                std::ostream& out, std::ostream& err);

}  // namespace bearingform::cli
