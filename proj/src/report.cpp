#include "bearingform/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace bearingform {

namespace {

nlohmann::json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

template <typename T>
nlohmann::json optional_json(const std::optional<T>& v) {
  if (v) return *v;
  return nullptr;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t row) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::runtime_error("trajectory csv row " + std::to_string(row) + ": bad number '" + s + "'");
  }
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_trajectory_csv(std::ostream& out, const TrajectoryRecord& trajectory) {
  if (trajectory.samples.empty()) return;
  const std::size_t n = trajectory.samples.front().positions.size();
  out << "t";
  for (std::size_t i = 1; i <= n; ++i) out << ",z" << i << "x,z" << i << "y";
  for (std::size_t i = 1; i <= n; ++i) out << ",eps" << i;
  out << ",V,d_min\n";
  for (const auto& s : trajectory.samples) {
    out << format_double(s.t);
    for (const auto& p : s.positions) out << ',' << format_double(p.x()) << ',' << format_double(p.y());
    for (Eigen::Index i = 0; i < s.errors.size(); ++i) out << ',' << format_double(s.errors(i));
    out << ',' << format_double(s.lyapunov) << ',' << format_double(s.min_distance) << '\n';
  }
}

TrajectoryRecord read_trajectory_csv(std::istream& in, double tol, double deadband) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("trajectory csv: empty input");
  const std::vector<std::string> header = split(line, ',');
  // 1 + 2n + n + 2 columns.
  if (header.size() < 12 || (header.size() - 3) % 3 != 0 || header.front() != "t") {
    throw std::runtime_error("trajectory csv: unexpected header");
  }
  const std::size_t n = (header.size() - 3) / 3;

  TrajectoryRecord rec;
  rec.convergence_tol = tol;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const std::vector<std::string> cells = split(line, ',');
    if (cells.size() != header.size()) {
      throw std::runtime_error("trajectory csv row " + std::to_string(row) + ": expected " +
                               std::to_string(header.size()) + " columns");
    }
    Sample s;
    s.t = parse_double(cells[0], row);
    for (std::size_t i = 0; i < n; ++i) {
      s.positions.emplace_back(parse_double(cells[1 + 2 * i], row), parse_double(cells[2 + 2 * i], row));
    }
    s.errors.resize(static_cast<Eigen::Index>(n));
    bool resting = true;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = parse_double(cells[1 + 2 * n + i], row);
      s.errors(static_cast<Eigen::Index>(i)) = e;
      if (std::abs(e) > deadband) resting = false;
    }
    s.lyapunov = parse_double(cells[1 + 3 * n], row);
    s.min_distance = parse_double(cells[2 + 3 * n], row);
    if (resting) s.speeds.assign(n, 0.0);

    if (!rec.t_below_tol && s.lyapunov <= tol) rec.t_below_tol = s.t;
    if (!rec.converged && s.lyapunov <= tol && (resting || deadband == 0.0)) {
      rec.converged = true;
      rec.t_f = s.t;
      rec.event = RunEvent::kConverged;
    }
    if (!rec.samples.empty() && s.t <= rec.samples.back().t) {
      throw std::runtime_error("trajectory csv row " + std::to_string(row) + ": time is not increasing");
    }
    rec.samples.push_back(std::move(s));
  }
  if (rec.samples.empty()) throw std::runtime_error("trajectory csv: no samples");
  if (rec.samples.size() >= 2) rec.dt = rec.samples[1].t - rec.samples[0].t;
  rec.t_star = min_pairwise_distance(rec.samples.front().positions) / 4.0;
  if (rec.t_f) rec.tf_exceeds_t_star = *rec.t_f >= rec.t_star;
  return rec;
}

void write_plot_data(const std::filesystem::path& dir, const TrajectoryRecord& trajectory) {
  if (trajectory.samples.empty()) return;
  std::filesystem::create_directories(dir);
  const std::size_t n = trajectory.samples.front().positions.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::ofstream out(dir / ("vehicle_" + std::to_string(i + 1) + ".csv"));
    out << "t,x,y\n";
    for (const auto& s : trajectory.samples) {
      out << format_double(s.t) << ',' << format_double(s.positions[i].x()) << ','
          << format_double(s.positions[i].y()) << '\n';
    }
  }
  std::ofstream out(dir / "errors.csv");
  out << "t";
  for (std::size_t i = 1; i <= n; ++i) out << ",eps" << i;
  out << ",V\n";
  for (const auto& s : trajectory.samples) {
    out << format_double(s.t);
    for (Eigen::Index i = 0; i < s.errors.size(); ++i) out << ',' << format_double(s.errors(i));
    out << ',' << format_double(s.lyapunov) << '\n';
  }
}

nlohmann::json validation_json(const FeasibilityReport& report) {
  nlohmann::json j;
  j["passed"] = report.passed();
  j["angle_sum_ok"] = report.angle_sum_ok;
  j["initial_angle_sum"] = report.initial_sum;
  j["target_angle_sum"] = report.target_sum;
  j["angle_sum_residual"] = report.sum_residual;
  j["assumption_ok"] = report.assumption_ok;
  nlohmann::json bad = nlohmann::json::array();
  for (std::size_t i : report.assumption_violations) bad.push_back(i + 1);
  j["assumption_violations"] = bad;
  j["sides_ok"] = report.sides_ok;
  nlohmann::json sides = nlohmann::json::array();
  for (bool b : report.side_ok) sides.push_back(b);
  j["side_ok"] = sides;
  j["warnings"] = report.warnings;
  return j;
}

nlohmann::json certificate_json(const CertificateReport& c) {
  nlohmann::json j;
  j["T_star"] = c.T_star;
  j["gamma"] = c.gamma;
  j["beta"] = c.beta;
  j["lambda2_EtE"] = c.lambda2_EtE;
  j["kappa"] = c.kappa;
  j["V0"] = c.V0;
  j["t_f"] = c.t_f;
  j["time_bound"] = finite_or_null(c.time_bound);
  j["displacement_bound"] = finite_or_null(c.displacement_bound);
  j["max_displacement"] = c.max_displacement;
  j["time_ok"] = c.time_ok;
  j["displacement_ok"] = c.displacement_ok;
  j["horizon_ok"] = c.horizon_ok;
  j["passed"] = c.passed();
  return j;
}

nlohmann::json summary_json(const Scenario& scenario, const FeasibilityReport& validation,
                            const TrajectoryRecord& trajectory, const CertificateReport* certificate) {
  nlohmann::json j;
  j["scenario"] = scenario.name;
  j["n"] = scenario.n();
  j["target_angles_deg"] = scenario.target_angles_deg;
  j["validation"] = validation_json(validation);

  j["event"] = to_string(trajectory.event);
  j["event_message"] = trajectory.event_message;
  j["converged"] = trajectory.converged;
  j["t_f"] = optional_json(trajectory.t_f);
  j["t_below_tol"] = optional_json(trajectory.t_below_tol);
  j["T_star"] = trajectory.t_star;
  j["tf_exceeds_T_star"] = trajectory.tf_exceeds_t_star;
  j["collision_floor"] = trajectory.collision_floor;
  j["max_speed_after_convergence"] = trajectory.max_speed_after_convergence;
  j["substeps"] = trajectory.substeps;
  j["substep_cap_hits"] = trajectory.substep_cap_hits;
  j["samples"] = trajectory.samples.size();
  if (!trajectory.samples.empty()) {
    j["V0"] = trajectory.samples.front().lyapunov;
    j["V_final"] = trajectory.samples.back().lyapunov;
    double d_min = std::numeric_limits<double>::infinity();
    for (const auto& s : trajectory.samples) d_min = std::min(d_min, s.min_distance);
    j["d_min_min"] = d_min;
  }
  j["certificate"] = certificate ? certificate_json(*certificate) : nlohmann::json(nullptr);

  const SimConfig& s = scenario.sim;
  j["config"] = {{"dt", s.dt},
                 {"t_max", s.t_max},
                 {"convergence_tol", s.convergence_tol},
                 {"deadband", s.deadband},
                 {"collision_floor", s.collision_floor},
                 {"seed", s.seed},
                 {"settle_time", s.settle_time},
                 {"integrator", to_string(s.integrator)}};
  return j;
}

}  // namespace bearingform
