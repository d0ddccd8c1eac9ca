#pragma once

#include <Eigen/Core>

#include <numbers>

namespace bearingform {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Distance at or below which two positions are treated as the same point.
inline constexpr double kCollocationEps = 1e-9;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Angle in radians. Values that stand for a subtended angle live in [0, 2pi).
struct AngleRad {
  double value = 0.0;

  constexpr AngleRad() = default;
  constexpr explicit AngleRad(double v) : value(v) {}

  static AngleRad from_degrees(double deg) { return AngleRad(deg * kPi / 180.0); }
  double degrees() const { return value * 180.0 / kPi; }
};

/// Wraps any real angle into [0, 2pi).
double wrap_to_two_pi(double angle);

/// Unit direction vector. Construction normalizes; a zero vector is rejected.
class Bearing {
 public:
  /// Normalizes `v`; throws CollocatedVehicles when ||v|| <= kCollocationEps.
  explicit Bearing(const Vec2& v);

  /// Wraps an already-unit vector without renormalizing.
  static Bearing from_unit(const Vec2& unit) { return Bearing(unit, UnitTag{}); }

  /// Bearing at heading `angle`, measured counterclockwise from +x.
  static Bearing from_heading(double angle);

  const Vec2& direction() const { return dir_; }
  double x() const { return dir_.x(); }
  double y() const { return dir_.y(); }
  double heading() const;

  Bearing operator-() const { return from_unit(-dir_); }

 private:
  struct UnitTag {};
  Bearing(const Vec2& unit, UnitTag) : dir_(unit) {}

  Vec2 dir_;
};

/// R(alpha), counterclockwise rotation.
Mat2 rotation_matrix(AngleRad alpha);

Vec2 rotate(AngleRad alpha, const Vec2& v);
Bearing rotate(AngleRad alpha, const Bearing& g);

/// R(pi/2) g.
Bearing perp(const Bearing& g);

/// (I - g g^T) v. Annihilates g, idempotent.
Vec2 project_out(const Bearing& g, const Vec2& v);

/// The projector I - g g^T as a matrix.
Mat2 projector(const Bearing& g);

/// Unit vector pointing from `from` toward `to`.
/// Throws CollocatedVehicles when the points are within kCollocationEps.
Bearing bearing_from_to(const Vec2& from, const Vec2& to);

/// The angle theta in [0, 2pi) with R(theta)(-g_prev) = g_next: rotating the
/// reversed incoming bearing counterclockwise onto the outgoing one.
AngleRad subtended_angle(const Bearing& g_next, const Bearing& g_prev);

}  // namespace bearingform
