#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bearingform/geometry.hpp"

namespace bearingform {

/// Proximity to 0 or pi below which a target angle violates the
/// non-collinearity assumption.
inline constexpr double kAssumptionEps = 1e-6;

/// Tolerance on |sum theta(0) - sum theta*|.
inline constexpr double kAngleSumTol = 1e-9;

/// Which open half of [0, 2pi) an angle lies in.
enum class AngleSide { kLower, kUpper, kDegenerate };

/// kLower for (0, pi), kUpper for (pi, 2pi), kDegenerate within `eps` of 0 or pi.
AngleSide classify_angle(double theta, double eps = kAssumptionEps);

/// Target angles theta_i* of a ring of n >= 3 vehicles.
///
/// Angles are wrapped into [0, 2pi) on construction. A spec that violates the
/// non-collinearity assumption is still representable so that validation can
/// report it; realize_target rejects it.
class TargetSpec {
 public:
  explicit TargetSpec(std::vector<AngleRad> angles);
  static TargetSpec from_degrees(std::span<const double> degrees);

  std::size_t size() const { return angles_.size(); }
  const std::vector<AngleRad>& angles() const { return angles_; }
  double angle(std::size_t i) const { return angles_[i].value; }
  double cos_angle(std::size_t i) const { return cos_[i]; }
  double angle_sum() const;

  /// True iff every theta_i* is at least `eps` away from 0 and pi.
  bool satisfies_assumption(double eps = kAssumptionEps) const;
  /// Indices whose target sits on 0 or pi.
  std::vector<std::size_t> assumption_violations(double eps = kAssumptionEps) const;
  std::vector<AngleSide> sides(double eps = kAssumptionEps) const;

 private:
  std::vector<AngleRad> angles_;
  std::vector<double> cos_;
};

/// Edge vectors, lengths and bearings of a ring, all indexed by the tail vehicle:
/// edge i runs from vehicle i to vehicle i+1 (mod n).
struct RingGeometry {
  std::vector<Vec2> edges;
  std::vector<double> lengths;
  std::vector<Bearing> bearings;

  std::size_t size() const { return edges.size(); }
  std::size_t prev(std::size_t i) const { return (i + size() - 1) % size(); }
  std::size_t next(std::size_t i) const { return (i + 1) % size(); }
  /// theta_i, the angle at vehicle i between its two neighbours.
  double angle(std::size_t i) const;
  double perimeter() const;
};

/// Computes ring geometry straight from positions.
/// Throws CollocatedVehicles if two consecutive vehicles coincide.
RingGeometry ring_geometry(std::span<const Vec2> positions);

/// Smallest distance over all vehicle pairs.
double min_pairwise_distance(std::span<const Vec2> positions);

/// Positions of the n vehicles. Immutable once constructed; construction
/// rejects n < 3, non-finite coordinates and any pair within kCollocationEps.
class FormationState {
 public:
  explicit FormationState(std::vector<Vec2> positions);

  std::size_t size() const { return positions_.size(); }
  const std::vector<Vec2>& positions() const { return positions_; }
  const Vec2& position(std::size_t i) const { return positions_[i]; }

  RingGeometry geometry() const { return ring_geometry(positions_); }
  std::vector<AngleRad> angles() const;
  double min_distance() const { return min_pairwise_distance(positions_); }

 private:
  std::vector<Vec2> positions_;
};

/// eps_i = -<g_i, g_{i-1}> - cos theta_i*.
Eigen::VectorXd errors(const RingGeometry& geom, const TargetSpec& spec);
Eigen::VectorXd errors(const FormationState& state, const TargetSpec& spec);

/// Sum of the subtended angles (radians, not wrapped).
double angle_sum(const FormationState& state);

struct FeasibilityReport {
  double initial_sum = 0.0;
  double target_sum = 0.0;
  double sum_residual = 0.0;  ///< initial_sum - target_sum
  bool angle_sum_ok = false;

  bool assumption_ok = false;
  std::vector<std::size_t> assumption_violations;

  /// side_ok[i]: theta_i(0) and theta_i* lie in the same open half-interval.
  std::vector<bool> side_ok;
  bool sides_ok = false;

  std::vector<std::string> warnings;

  bool passed() const { return angle_sum_ok && assumption_ok && sides_ok; }
};

/// Never throws on an infeasible scenario; every problem lands in the report.
FeasibilityReport validate_feasibility(const FormationState& state0, const TargetSpec& spec);

/// Builds positions that realize `spec` exactly, with shortest edge `scale`.
///
/// Edge headings follow heading(g_i) = heading(g_{i-1}) + pi + theta_i*. Edge
/// lengths close the polygon; equal lengths are used whenever they already
/// close it. The result is centred on its centroid with g_1 along +x.
/// Throws InfeasibleTarget when the headings do not close or no positive
/// closure exists.
FormationState realize_target(const TargetSpec& spec, double scale);

/// Displaces every vehicle by an independent uniform sample from the disk of
/// radius `magnitude`. Deterministic in `seed`.
FormationState perturb(const FormationState& state, double magnitude, std::uint64_t seed);

}  // namespace bearingform
