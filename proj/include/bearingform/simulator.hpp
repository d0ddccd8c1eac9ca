#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bearingform/controller.hpp"
#include "bearingform/formation.hpp"

namespace bearingform {

enum class Integrator {
  /// Explicit Euler whose sub-steps end exactly where an error component
  /// reaches zero or drifts out of the deadband. Sampled every dt.
  kSwitchLocating,
  /// Plain synchronous explicit Euler with step dt. Chatters.
  kFixedStep,
};

struct SimConfig {
  double dt = 1e-3;
  double t_max = 10.0;
  double convergence_tol = 1e-3;
  double deadband = kDefaultDeadband;
  /// Minimum allowed pairwise distance. 0 selects 1e-3 * d_min(0).
  double collision_floor = 0.0;
  std::uint64_t seed = 0;
  /// Time simulated after convergence to confirm the formation stays at rest.
  double settle_time = 0.1;
  /// Keep every k-th sample; 0 picks k so that n * (t_max / dt) / k <= 1e6.
  std::size_t record_every = 0;
  Integrator integrator = Integrator::kSwitchLocating;
  /// Cap on switch-located sub-steps inside one dt; the remainder of the
  /// step is then taken in one piece.
  std::size_t max_substeps = 200000;
  /// Run even when feasibility validation fails.
  bool force = false;

  /// Throws std::invalid_argument on out-of-range fields.
  void validate() const;

  bool operator==(const SimConfig&) const = default;
};

struct Sample {
  double t = 0.0;
  std::vector<Vec2> positions;
  Eigen::VectorXd errors;
  double lyapunov = 0.0;
  double min_distance = 0.0;
  std::vector<double> speeds;
  /// Sign-pattern changes of eps since the previous simulated step.
  std::size_t sign_switches = 0;
};

enum class RunEvent { kConverged, kTimeout, kCollision };

std::string to_string(RunEvent event);

struct TrajectoryRecord {
  std::vector<Sample> samples;
  bool converged = false;
  /// First sampled time with V <= tol and every vehicle at rest.
  std::optional<double> t_f;
  /// First sampled time with V <= tol.
  std::optional<double> t_below_tol;
  double t_star = 0.0;
  /// Convergence happened at or after the collision horizon.
  bool tf_exceeds_t_star = false;
  RunEvent event = RunEvent::kTimeout;
  std::string event_message;
  double collision_floor = 0.0;
  double dt = 0.0;
  double convergence_tol = 0.0;
  /// Largest vehicle speed seen at any simulated step after t_f.
  double max_speed_after_convergence = 0.0;
  std::size_t substeps = 0;
  std::size_t substep_cap_hits = 0;

  const Sample& initial() const { return samples.front(); }
  /// The sample taken at t_f. Requires converged.
  const Sample& at_convergence() const;
};

/// T* = d_min(0) / 4, the earliest time any two vehicles can meet at speed 2.
double collision_horizon(const FormationState& state0);

/// Measurements vehicle i takes in the current ring.
LocalMeasurement measurement(const RingGeometry& geom, const TargetSpec& spec, std::size_t i);

/// Control velocity of every vehicle, computed from one synchronous snapshot.
std::vector<Vec2> control_velocities(const RingGeometry& geom, const TargetSpec& spec,
                                     const SignPolicy& policy);

/// d eps / dt under velocities `u`, by differentiating the bearings directly.
Eigen::VectorXd error_rates(const RingGeometry& geom, std::span<const Vec2> velocities);

/// One synchronous explicit Euler step of length cfg.dt.
/// Throws CollisionImminent if the new d_min is at or below the collision floor.
FormationState step(const FormationState& state, const TargetSpec& spec, const SimConfig& cfg);

/// Integrates until converged, timed out or a collision is imminent.
/// Collisions end the run and are recorded in the event fields; they do not
/// throw. Throws InfeasibleScenario when validation fails and cfg.force is
/// false.
TrajectoryRecord run(const FormationState& state0, const TargetSpec& spec, const SimConfig& cfg);

}  // namespace bearingform
