#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "bearingform/cli.hpp"

int main(int argc, char** argv) {
  namespace bc = bearingform::cli;
  bc::configure_logging();

  CLI::App app{"Bearing-only circular formation simulator"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir;
  std::string pattern;
  std::string trajectory_path;
  bool force = false;
  unsigned jobs = 1;

  auto* validate = app.add_subcommand("validate", "Check a scenario's feasibility");
  validate->add_option("file", scenario_path, "Scenario YAML")->required();

  auto* run = app.add_subcommand("run", "Simulate a scenario and write its outputs");
  run->add_option("file", scenario_path, "Scenario YAML")->required();
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_flag("--force", force, "Run even if validation fails");

  auto* batch = app.add_subcommand("batch", "Run every scenario matching a glob");
  batch->add_option("glob", pattern, "Scenario file pattern")->required();
  batch->add_option("--out", out_dir, "Output directory")->required();
  batch->add_option("--jobs", jobs, "Parallel runs")->check(CLI::PositiveNumber);

  auto* certify = app.add_subcommand("certify", "Check the certificate of a stored trajectory");
  certify->add_option("trajectory", trajectory_path, "trajectory.csv")->required();
  certify->add_option("file", scenario_path, "Scenario YAML")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : bc::kExitUsage;
  }

  if (*validate) return bc::cmd_validate(scenario_path, std::cout, std::cerr);
  if (*run) return bc::cmd_run(scenario_path, out_dir, force, std::cout, std::cerr);
  if (*batch) return bc::cmd_batch(pattern, out_dir, jobs, std::cout, std::cerr);
  return bc::cmd_certify(trajectory_path, scenario_path, std::cout, std::cerr);
}
