#include "bearingform/cli.hpp"

#include <glob.h>

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>
#include <vector>

#include "bearingform/analysis.hpp"
#include "bearingform/errors.hpp"
#include "bearingform/report.hpp"

namespace bearingform::cli {

namespace fs = std::filesystem;

namespace {

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

nlohmann::json failure_summary(const Scenario& scenario, const std::string& event, const std::string& message) {
  nlohmann::json j;
  j["scenario"] = scenario.name;
  j["n"] = scenario.n();
  j["target_angles_deg"] = scenario.target_angles_deg;
  j["event"] = event;
  j["event_message"] = message;
  j["converged"] = false;
  return j;
}

std::vector<std::string> expand_glob(const std::string& pattern) {
  glob_t g{};
  std::vector<std::string> paths;
  if (::glob(pattern.c_str(), 0, nullptr, &g) == 0) {
    for (std::size_t i = 0; i < g.gl_pathc; ++i) paths.emplace_back(g.gl_pathv[i]);
  }
  ::globfree(&g);
  std::sort(paths.begin(), paths.end());
  return paths;
}

// precision 0 keeps the round-trip form.
std::string cell(const nlohmann::json& j, const char* key, int precision = 0) {
  if (!j.is_object() || !j.contains(key) || j[key].is_null()) return "-";
  const auto& v = j[key];
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_string()) return v.get<std::string>();
  if (!v.is_number_float()) return v.dump();
  if (precision == 0) return format_double(v.get<double>());
  std::ostringstream out;
  out << std::setprecision(precision) << v.get<double>();
  return out.str();
}

struct BatchRow {
  std::string scenario;
  int exit_code = kExitOk;
  nlohmann::json summary;
};

}  // namespace

void configure_logging() {
  spdlog::level::level_enum level = spdlog::level::warn;
  if (const char* env = std::getenv("SIM_LOG")) {
    const auto parsed = spdlog::level::from_str(env);
    // from_str maps unknown names to off; only accept that for "off" itself.
    if (parsed != spdlog::level::off || std::string(env) == "off") level = parsed;
  }
  spdlog::set_level(level);
}

int cmd_validate(const fs::path& scenario_path, std::ostream& out, std::ostream& err) {
  Scenario scenario;
  try {
    scenario = load_scenario(scenario_path);
  } catch (const ScenarioError& e) {
    err << e.what() << '\n';
    return kExitUsage;
  }

  try {
    const FormationState state0 = scenario.initial_state();
    const FeasibilityReport report = validate_feasibility(state0, scenario.target());
    out << "scenario: " << scenario.name << " (n = " << scenario.n() << ")\n";
    out << "assumption (no target angle at 0 or pi): " << (report.assumption_ok ? "pass" : "FAIL");
    if (!report.assumption_ok) {
      out << " at";
      for (std::size_t i : report.assumption_violations) out << ' ' << i + 1;
    }
    out << '\n';
    out << std::setprecision(12) << "angle sum: initial " << report.initial_sum << ", target "
        << report.target_sum << ", residual " << report.sum_residual << ": "
        << (report.angle_sum_ok ? "pass" : "FAIL") << '\n';
    out << "initial angles on target side: " << (report.sides_ok ? "pass" : "FAIL");
    if (!report.sides_ok) {
      out << " at";
      for (std::size_t i = 0; i < report.side_ok.size(); ++i) {
        if (!report.side_ok[i]) out << ' ' << i + 1;
      }
    }
    out << '\n';
    for (const auto& w : report.warnings) out << "warning: " << w << '\n';
    out << (report.passed() ? "valid" : "invalid") << '\n';
    return report.passed() ? kExitOk : kExitRuntime;
  } catch (const FormationError& e) {
    out << "invalid: " << e.what() << '\n';
    return kExitRuntime;
  }
}

RunResult run_scenario(const Scenario& scenario, const fs::path& out_dir, bool force) {
  fs::create_directories(out_dir);
  RunResult result;

  std::optional<FormationState> state0;
  try {
    state0 = scenario.initial_state();
  } catch (const FormationError& e) {
    result.exit_code = kExitRuntime;
    result.summary = failure_summary(scenario, "infeasible", e.what());
    write_json(out_dir / "summary.json", result.summary);
    return result;
  }
  const TargetSpec spec = scenario.target();
  const FeasibilityReport validation = validate_feasibility(*state0, spec);

  SimConfig cfg = scenario.sim;
  cfg.force = cfg.force || force;
  if (!validation.passed() && !cfg.force) {
    result.exit_code = kExitRuntime;
    result.summary = failure_summary(scenario, "infeasible", "feasibility validation failed (use --force)");
    result.summary["validation"] = validation_json(validation);
    write_json(out_dir / "summary.json", result.summary);
    return result;
  }

  const TrajectoryRecord traj = run(*state0, spec, cfg);
  {
    std::ofstream csv(out_dir / "trajectory.csv");
    write_trajectory_csv(csv, traj);
  }
  write_plot_data(out_dir / "plot", traj);

  std::optional<CertificateReport> cert;
  if (traj.converged) cert = certify(traj, *state0, spec);
  result.summary = summary_json(scenario, validation, traj, cert ? &*cert : nullptr);
  write_json(out_dir / "summary.json", result.summary);
  result.exit_code = traj.converged ? kExitOk : kExitRuntime;
  return result;
}

int cmd_run(const fs::path& scenario_path, const fs::path& out_dir, bool force, std::ostream& out,
            std::ostream& err) {
  Scenario scenario;
  try {
    scenario = load_scenario(scenario_path);
  } catch (const ScenarioError& e) {
    err << e.what() << '\n';
    return kExitUsage;
  }
  try {
    const RunResult result = run_scenario(scenario, out_dir, force);
    out << result.summary.dump(2) << '\n';
    return result.exit_code;
  } catch (const std::exception& e) {
    err << scenario.name << ": " << e.what() << '\n';
    return kExitRuntime;
  }
}

int cmd_batch(const std::string& pattern, const fs::path& out_dir, unsigned jobs, std::ostream& out,
              std::ostream& err) {
  const std::vector<std::string> paths = expand_glob(pattern);
  if (paths.empty()) {
    err << "no scenario matches '" << pattern << "'\n";
    return kExitUsage;
  }

  std::map<std::string, int> stems;
  std::vector<fs::path> dirs;
  for (const auto& p : paths) {
    std::string stem = fs::path(p).stem().string();
    const int seen = stems[stem]++;
    if (seen > 0) stem += "_" + std::to_string(seen + 1);
    dirs.push_back(out_dir / stem);
  }

  std::vector<BatchRow> rows(paths.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < paths.size(); i = next++) {
      BatchRow& row = rows[i];
      row.scenario = fs::path(paths[i]).stem().string();
      try {
        const Scenario scenario = load_scenario(paths[i]);
        row.scenario = scenario.name;
        const RunResult r = run_scenario(scenario, dirs[i], false);
        row.exit_code = r.exit_code;
        row.summary = r.summary;
      } catch (const ScenarioError& e) {
        row.exit_code = kExitUsage;
        row.summary = {{"event", "parse_error"}, {"event_message", e.what()}};
      } catch (const std::exception& e) {
        row.exit_code = kExitRuntime;
        row.summary = {{"event", "error"}, {"event_message", e.what()}};
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(paths.size())));
  std::vector<std::thread> pool;
  for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  fs::create_directories(out_dir);
  std::ofstream csv(out_dir / "batch.csv");
  const char* header = "scenario,n,V0,t_f,time_bound,T_star,converged,event";
  csv << header << '\n';
  out << std::left << std::setw(16) << "scenario" << std::setw(4) << "n" << std::setw(14) << "V0"
      << std::setw(14) << "t_f" << std::setw(14) << "V0/kappa" << std::setw(14) << "T*" << std::setw(11)
      << "converged" << "event\n";
  int worst = kExitOk;
  for (const auto& row : rows) {
    const nlohmann::json& s = row.summary;
    const nlohmann::json cert = s.contains("certificate") ? s["certificate"] : nlohmann::json();
    const std::vector<std::string> cells = {row.scenario,           cell(s, "n"),         cell(s, "V0"),
                                            cell(s, "t_f"),         cell(cert, "time_bound"), cell(s, "T_star"),
                                            cell(s, "converged"),   cell(s, "event")};
    for (std::size_t c = 0; c < cells.size(); ++c) csv << (c ? "," : "") << cells[c];
    csv << '\n';
    out << std::setw(16) << cells[0] << std::setw(4) << cells[1] << std::setw(14) << cell(s, "V0", 6)
        << std::setw(14) << cell(s, "t_f", 6) << std::setw(14) << cell(cert, "time_bound", 6) << std::setw(14)
        << cell(s, "T_star", 6) << std::setw(11) << cells[6] << cells[7] << '\n';
    if (row.exit_code != kExitOk) {
      err << row.scenario << ": " << s.value("event_message", std::string()) << '\n';
    }
    worst = std::max(worst, row.exit_code);
  }
  return worst;
}

int cmd_certify(const fs::path& trajectory_csv, const fs::path& scenario_path, std::ostream& out,
                std::ostream& err) {
  Scenario scenario;
  TrajectoryRecord traj;
  try {
    scenario = load_scenario(scenario_path);
    std::ifstream in(trajectory_csv);
    if (!in) throw std::runtime_error("cannot open " + trajectory_csv.string());
    traj = read_trajectory_csv(in, scenario.sim.convergence_tol, scenario.sim.deadband);
  } catch (const std::exception& e) {
    err << e.what() << '\n';
    return kExitUsage;
  }
  if (traj.initial().positions.size() != scenario.n()) {
    err << "trajectory has " << traj.initial().positions.size() << " vehicles, scenario has "
        << scenario.n() << '\n';
    return kExitUsage;
  }
  try {
    const FormationState state0(traj.initial().positions);
    const CertificateReport cert = certify(traj, state0, scenario.target());
    out << certificate_json(cert).dump(2) << '\n';
    return cert.passed() ? kExitOk : kExitRuntime;
  } catch (const FormationError& e) {
    err << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace bearingform::cli
