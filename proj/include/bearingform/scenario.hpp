#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bearingform/formation.hpp"
#include "bearingform/simulator.hpp"

namespace bearingform {

/// Malformed scenario text. what() carries "source:line:column: message".
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(const std::string& source, int line, int column, const std::string& message);

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

struct ExplicitPositions {
  std::vector<std::array<double, 2>> positions;
  bool operator==(const ExplicitPositions&) const = default;
};

/// Realize the target at `scale`, then perturb by up to `magnitude`.
struct RealizePerturb {
  double scale = 1.0;
  double magnitude = 0.0;
  std::uint64_t seed = 0;
  bool operator==(const RealizePerturb&) const = default;
};

/// One simulation scenario as written in a YAML file:
///
///   name: square
///   n: 4
///   target_angles_deg: [90, 90, 90, 90]
///   initial:
///     generator: realize+perturb
///     scale: 1.0
///     magnitude: 0.1
///     seed: 7
///   sim:
///     dt: 0.001
///     t_max: 10
///
/// `initial` may instead hold `positions: [[x, y], ...]`. Every `sim` key is
/// optional and defaults to SimConfig's value.
struct Scenario {
  std::string name;
  std::vector<double> target_angles_deg;
  std::variant<RealizePerturb, ExplicitPositions> initial;
  SimConfig sim;

  std::size_t n() const { return target_angles_deg.size(); }
  TargetSpec target() const;
  /// Builds the initial positions; may throw InfeasibleTarget or CollocatedVehicles.
  FormationState initial_state() const;

  bool operator==(const Scenario&) const = default;
};

Scenario parse_scenario(const std::string& text, const std::string& source = "<string>");
Scenario load_scenario(const std::filesystem::path& path);
std::string serialize_scenario(const Scenario& scenario);

std::string to_string(Integrator integrator);
std::optional<Integrator> integrator_from_string(const std::string& name);

}  // namespace bearingform
