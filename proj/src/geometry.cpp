#include "bearingform/geometry.hpp"

#include <cmath>
#include <stdexcept>

#include "bearingform/errors.hpp"

namespace bearingform {

double wrap_to_two_pi(double angle) {
  double wrapped = std::fmod(angle, kTwoPi);
  if (wrapped < 0.0) wrapped += kTwoPi;
  // fmod of a tiny negative value can round back up to exactly 2pi.
  if (wrapped >= kTwoPi) wrapped = 0.0;
  return wrapped;
}

Bearing::Bearing(const Vec2& v) {
  if (!v.allFinite()) throw std::invalid_argument("Bearing: non-finite vector");
  const double norm = v.norm();
  if (norm <= kCollocationEps) {
    throw CollocatedVehicles("Bearing: vector norm below collocation threshold");
  }
  dir_ = v / norm;
}

Bearing Bearing::from_heading(double angle) {
  return from_unit(Vec2(std::cos(angle), std::sin(angle)));
}

double Bearing::heading() const { return std::atan2(dir_.y(), dir_.x()); }

Mat2 rotation_matrix(AngleRad alpha) {
  const double c = std::cos(alpha.value);
  const double s = std::sin(alpha.value);
  Mat2 r;
  r << c, -s,
       s, c;
  return r;
}

Vec2 rotate(AngleRad alpha, const Vec2& v) {
  const double c = std::cos(alpha.value);
  const double s = std::sin(alpha.value);
  return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

Bearing rotate(AngleRad alpha, const Bearing& g) {
  return Bearing::from_unit(rotate(alpha, g.direction()));
}

Bearing perp(const Bearing& g) { return Bearing::from_unit(Vec2(-g.y(), g.x())); }

Vec2 project_out(const Bearing& g, const Vec2& v) {
  const Vec2& d = g.direction();
  return v - d * d.dot(v);
}

Mat2 projector(const Bearing& g) {
  const Vec2& d = g.direction();
  return Mat2::Identity() - d * d.transpose();
}

Bearing bearing_from_to(const Vec2& from, const Vec2& to) {
  if (!from.allFinite() || !to.allFinite()) {
    throw std::invalid_argument("bearing_from_to: non-finite position");
  }
  const Vec2 diff = to - from;
  const double dist = diff.norm();
  if (dist <= kCollocationEps) {
    throw CollocatedVehicles("bearing_from_to: vehicles are collocated");
  }
  return Bearing::from_unit(diff / dist);
}

AngleRad subtended_angle(const Bearing& g_next, const Bearing& g_prev) {
  // Coordinates of g_next in the frame (-g_prev, perp(-g_prev)).
  const Vec2 axis = -g_prev.direction();
  const Vec2 axis_perp(-axis.y(), axis.x());
  const double along = g_next.direction().dot(axis);
  const double across = g_next.direction().dot(axis_perp);
  return AngleRad(wrap_to_two_pi(std::atan2(across, along)));
}

}  // namespace bearingform
