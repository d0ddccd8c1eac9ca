#include "bearingform/controller.hpp"

#include <cmath>
#include <stdexcept>

namespace bearingform {

SignPolicy::SignPolicy(double db) : deadband(db) {
  if (!(db >= 0.0)) throw std::invalid_argument("SignPolicy: deadband must be >= 0");
}

int SignPolicy::operator()(double value) const {
  if (std::abs(value) <= deadband) return 0;
  return value > 0.0 ? 1 : -1;
}

double local_error(const LocalMeasurement& m) {
  return m.g_next.direction().dot(m.g_prev_neg.direction()) - m.target_cos;
}

Vec2 control_velocity(const LocalMeasurement& m, const SignPolicy& policy) {
  const int s = policy(local_error(m));
  if (s == 0) return Vec2::Zero();
  // g_i - g_{i-1} = g_next + g_prev_neg
  return static_cast<double>(s) * (m.g_next.direction() + m.g_prev_neg.direction());
}

}  // namespace bearingform
