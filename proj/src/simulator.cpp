#include "bearingform/simulator.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "bearingform/errors.hpp"

namespace bearingform {

void SimConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("SimConfig: dt must be > 0");
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw std::invalid_argument("SimConfig: t_max must be > 0");
  if (!(convergence_tol > 0.0)) throw std::invalid_argument("SimConfig: convergence_tol must be > 0");
  if (!(deadband >= 0.0)) throw std::invalid_argument("SimConfig: deadband must be >= 0");
  if (collision_floor != 0.0 && !(collision_floor >= kCollocationEps)) {
    throw std::invalid_argument("SimConfig: collision_floor must be >= collocation_eps");
  }
  if (!(settle_time >= 0.0)) throw std::invalid_argument("SimConfig: settle_time must be >= 0");
  if (max_substeps == 0) throw std::invalid_argument("SimConfig: max_substeps must be >= 1");
}

std::string to_string(RunEvent event) {
  switch (event) {
    case RunEvent::kConverged: return "converged";
    case RunEvent::kTimeout: return "timeout";
    case RunEvent::kCollision: return "collision";
  }
  return "unknown";
}

const Sample& TrajectoryRecord::at_convergence() const {
  if (!converged || !t_f) throw NotConverged("trajectory did not converge");
  for (const auto& s : samples) {
    if (s.t >= *t_f) return s;
  }
  throw NotConverged("trajectory has no sample at t_f");
}

double collision_horizon(const FormationState& state0) { return state0.min_distance() / 4.0; }

LocalMeasurement measurement(const RingGeometry& geom, const TargetSpec& spec, std::size_t i) {
  return LocalMeasurement{geom.bearings[i], -geom.bearings[geom.prev(i)], spec.cos_angle(i)};
}

std::vector<Vec2> control_velocities(const RingGeometry& geom, const TargetSpec& spec,
                                     const SignPolicy& policy) {
  std::vector<Vec2> u;
  u.reserve(geom.size());
  for (std::size_t i = 0; i < geom.size(); ++i) {
    u.push_back(control_velocity(measurement(geom, spec, i), policy));
  }
  return u;
}

Eigen::VectorXd error_rates(const RingGeometry& geom, std::span<const Vec2> velocities) {
  const std::size_t n = geom.size();
  std::vector<Vec2> g_dot(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e_dot = velocities[geom.next(i)] - velocities[i];
    g_dot[i] = project_out(geom.bearings[i], e_dot) / geom.lengths[i];
  }
  Eigen::VectorXd rates(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t p = geom.prev(i);
    rates(static_cast<Eigen::Index>(i)) =
        -(g_dot[i].dot(geom.bearings[p].direction()) + geom.bearings[i].direction().dot(g_dot[p]));
  }
  return rates;
}

namespace {

double resolve_floor(const SimConfig& cfg, double d_min0) {
  if (cfg.collision_floor > 0.0) return cfg.collision_floor;
  return std::max(1e-3 * d_min0, kCollocationEps);
}

std::vector<int> sign_pattern(const Eigen::VectorXd& eps, const SignPolicy& policy) {
  std::vector<int> s(static_cast<std::size_t>(eps.size()));
  for (Eigen::Index i = 0; i < eps.size(); ++i) s[static_cast<std::size_t>(i)] = policy(eps(i));
  return s;
}

struct Snapshot {
  RingGeometry geom;
  Eigen::VectorXd eps;
  std::vector<int> signs;
  std::vector<Vec2> velocity;
};

Snapshot snapshot(std::span<const Vec2> z, const TargetSpec& spec, const SignPolicy& policy) {
  Snapshot s{ring_geometry(z), {}, {}, {}};
  s.eps = errors(s.geom, spec);
  s.signs = sign_pattern(s.eps, policy);
  s.velocity = control_velocities(s.geom, spec, policy);
  return s;
}

// Advances z over one sampling interval. Tracks sign-pattern changes against
// `pattern`, which holds the pattern in force when the interval began.
class Stepper {
 public:
  Stepper(const TargetSpec& spec, const SimConfig& cfg, double floor)
      : spec_(spec), cfg_(cfg), policy_(cfg.deadband), floor_(floor) {}

  struct Outcome {
    std::size_t switches = 0;
    bool collided = false;
    double elapsed = 0.0;  // time actually advanced (shorter on collision)
  };

  Outcome advance(std::vector<Vec2>& z, std::vector<int>& pattern) {
    Outcome out;
    const double dt = cfg_.dt;
    const double h_min = 1e-9 * dt;
    double remaining = dt;
    std::size_t count = 0;
    while (remaining > 1e-12 * dt) {
      const Snapshot s = snapshot(z, spec_, policy_);
      if (s.signs != pattern) {
        ++out.switches;
        pattern = s.signs;
      }
      if (std::all_of(s.signs.begin(), s.signs.end(), [](int v) { return v == 0; })) {
        out.elapsed += remaining;
        break;
      }

      double h = remaining;
      if (cfg_.integrator == Integrator::kSwitchLocating) {
        if (count < cfg_.max_substeps) {
          h = std::max(next_event(s), h_min);
          h = std::min(h, remaining);
        } else if (count == cfg_.max_substeps) {
          ++cap_hits_;
        }
      }
      for (std::size_t i = 0; i < z.size(); ++i) z[i] += h * s.velocity[i];
      remaining -= h;
      out.elapsed += h;
      ++count;
      ++substeps_;
      if (min_pairwise_distance(z) <= floor_) {
        out.collided = true;
        break;
      }
    }
    return out;
  }

  std::size_t substeps() const { return substeps_; }
  std::size_t cap_hits() const { return cap_hits_; }

 private:
  // Time until the first error component either reaches zero from outside
  // the deadband or leaves the deadband, to first order.
  double next_event(const Snapshot& s) const {
    const Eigen::VectorXd rate = error_rates(s.geom, s.velocity);
    const double db = cfg_.deadband;
    double h = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < s.signs.size(); ++i) {
      const double e = s.eps(static_cast<Eigen::Index>(i));
      const double r = rate(static_cast<Eigen::Index>(i));
      if (r == 0.0) continue;
      if (s.signs[i] != 0) {
        if (r * s.signs[i] < 0.0) h = std::min(h, std::abs(e) / std::abs(r));
      } else if (db > 0.0) {
        // Aim slightly past the edge so the component actually re-activates.
        h = std::min(h, std::max(1.01 * db - std::abs(e), 0.0) / std::abs(r));
      }
    }
    return h;
  }

  const TargetSpec& spec_;
  const SimConfig& cfg_;
  SignPolicy policy_;
  double floor_;
  std::size_t substeps_ = 0;
  std::size_t cap_hits_ = 0;
};

Sample make_sample(double t, const std::vector<Vec2>& z, const TargetSpec& spec,
                   const SignPolicy& policy, std::size_t switches) {
  Sample sample;
  sample.t = t;
  sample.positions = z;
  sample.min_distance = min_pairwise_distance(z);
  sample.sign_switches = switches;
  const Snapshot s = snapshot(z, spec, policy);
  sample.errors = s.eps;
  sample.lyapunov = s.eps.lpNorm<1>();
  sample.speeds.reserve(z.size());
  for (const auto& v : s.velocity) sample.speeds.push_back(v.norm());
  return sample;
}

}  // namespace

FormationState step(const FormationState& state, const TargetSpec& spec, const SimConfig& cfg) {
  cfg.validate();
  const SignPolicy policy(cfg.deadband);
  const RingGeometry geom = state.geometry();
  const std::vector<Vec2> u = control_velocities(geom, spec, policy);
  std::vector<Vec2> z = state.positions();
  for (std::size_t i = 0; i < z.size(); ++i) z[i] += cfg.dt * u[i];
  const double floor = resolve_floor(cfg, state.min_distance());
  const double d_min = min_pairwise_distance(z);
  if (d_min <= floor) {
    std::ostringstream msg;
    msg << "minimum pairwise distance " << d_min << " reached the collision floor " << floor;
    throw CollisionImminent(msg.str());
  }
  return FormationState(std::move(z));
}

TrajectoryRecord run(const FormationState& state0, const TargetSpec& spec, const SimConfig& cfg) {
  cfg.validate();
  if (spec.size() != state0.size()) throw std::invalid_argument("run: spec and state sizes differ");
  if (!cfg.force) {
    const FeasibilityReport report = validate_feasibility(state0, spec);
    if (!report.passed()) {
      std::string msg = "scenario failed validation";
      for (const auto& w : report.warnings) msg += "; " + w;
      throw InfeasibleScenario(msg);
    }
  }

  const std::size_t n = state0.size();
  const SignPolicy policy(cfg.deadband);
  const double d_min0 = state0.min_distance();

  TrajectoryRecord rec;
  rec.t_star = collision_horizon(state0);
  rec.collision_floor = resolve_floor(cfg, d_min0);
  rec.dt = cfg.dt;
  rec.convergence_tol = cfg.convergence_tol;

  const auto total_steps = static_cast<std::size_t>(std::ceil(cfg.t_max / cfg.dt - 1e-9));
  std::size_t every = cfg.record_every;
  if (every == 0) {
    const double load = static_cast<double>(n) * static_cast<double>(total_steps);
    every = load <= 1e6 ? 1 : static_cast<std::size_t>(std::ceil(load / 1e6));
  }

  std::vector<Vec2> z = state0.positions();
  Stepper stepper(spec, cfg, rec.collision_floor);
  std::vector<int> pattern = sign_pattern(errors(state0, spec), policy);
  std::size_t pending_switches = 0;
  std::optional<double> settle_until;

  auto at_rest = [&](const Sample& s) {
    return cfg.deadband == 0.0 ||
           std::all_of(s.speeds.begin(), s.speeds.end(), [](double v) { return v == 0.0; });
  };

  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    Sample sample = make_sample(t, z, spec, policy, pending_switches);
    if (std::vector<int> now = sign_pattern(sample.errors, policy); now != pattern) {
      pattern = std::move(now);
      ++sample.sign_switches;
      ++pending_switches;
    }

    bool keep = (k % every == 0);
    if (!rec.t_below_tol && sample.lyapunov <= cfg.convergence_tol) rec.t_below_tol = t;
    if (!rec.converged && sample.lyapunov <= cfg.convergence_tol && at_rest(sample)) {
      rec.converged = true;
      rec.t_f = t;
      rec.event = RunEvent::kConverged;
      rec.tf_exceeds_t_star = t >= rec.t_star;
      settle_until = t + cfg.settle_time;
      keep = true;
      spdlog::debug("converged at t = {} (V = {})", t, sample.lyapunov);
    }
    if (rec.converged && t > *rec.t_f) {
      for (double v : sample.speeds) {
        rec.max_speed_after_convergence = std::max(rec.max_speed_after_convergence, v);
      }
    }

    const bool done_settling = settle_until && t >= *settle_until - 1e-12;
    const bool timed_out = !rec.converged && k >= total_steps;
    if (done_settling || timed_out) keep = true;
    if (keep) {
      rec.samples.push_back(std::move(sample));
      pending_switches = 0;
    }
    if (done_settling) break;
    if (timed_out) {
      rec.event = RunEvent::kTimeout;
      rec.event_message = "t_max reached before convergence";
      break;
    }

    const auto outcome = stepper.advance(z, pattern);
    pending_switches += outcome.switches;
    if (outcome.collided) {
      rec.event = RunEvent::kCollision;
      std::ostringstream msg;
      msg << "minimum pairwise distance reached the collision floor " << rec.collision_floor
          << " at t = " << t + outcome.elapsed;
      rec.event_message = msg.str();
      rec.converged = false;
      rec.t_f.reset();
      try {
        rec.samples.push_back(make_sample(t + outcome.elapsed, z, spec, policy, pending_switches));
      } catch (const CollocatedVehicles&) {
        // Geometry is undefined at this point; the event message carries the time.
      }
      spdlog::warn("{}", rec.event_message);
      break;
    }
  }

  rec.substeps = stepper.substeps();
  rec.substep_cap_hits = stepper.cap_hits();
  return rec;
}

}  // namespace bearingform
