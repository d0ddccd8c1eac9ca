#pragma once

#include "bearingform/geometry.hpp"

namespace bearingform {

/// Default |eps| below which a vehicle treats its angle as reached.
inline constexpr double kDefaultDeadband = 1e-6;

/// What vehicle i senses: the bearing to i+1 and the bearing to i-1, both in
/// its own frame, plus the cosine of its target angle.
struct LocalMeasurement {
  Bearing g_next;      ///< g_i
  Bearing g_prev_neg;  ///< -g_{i-1}
  double target_cos = 0.0;
};

/// Sign with a deadband: 0 for |value| <= deadband, else +-1.
struct SignPolicy {
  double deadband = kDefaultDeadband;

  explicit SignPolicy(double db = kDefaultDeadband);
  int operator()(double value) const;
};

/// cos theta_i - cos theta_i*, computed as <g_i, -g_{i-1}> - cos theta_i*.
double local_error(const LocalMeasurement& m);

/// sgn(eps_i) (g_i - g_{i-1}). Norm never exceeds 2; zero when theta_i = pi.
Vec2 control_velocity(const LocalMeasurement& m, const SignPolicy& policy);

}  // namespace bearingform
