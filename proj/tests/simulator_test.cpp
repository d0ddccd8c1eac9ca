#include "bearingform/simulator.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "bearingform/analysis.hpp"
#include "bearingform/errors.hpp"
#include "test_support.hpp"

namespace bearingform {
namespace {

using testing::errors_oracle;
using testing::random_positions;
using testing::unit_edge;
using testing::unit_square;
using testing::vertex_angle;

TargetSpec Uniform(std::size_t n, double deg) {
  const std::vector<double> d(n, deg);
  return TargetSpec::from_degrees(d);
}

std::vector<Vec2> Scaled(std::vector<Vec2> z, double s) {
  for (auto& p : z) p *= s;
  return z;
}

GTEST_TEST(SimulatorTest, CollisionHorizon) {
  EXPECT_DOUBLE_EQ(collision_horizon(FormationState(Scaled(unit_square(), 4.0))), 1.0);
  EXPECT_DOUBLE_EQ(collision_horizon(FormationState(Scaled(unit_square(), 0.4))), 0.1);
  EXPECT_DOUBLE_EQ(collision_horizon(FormationState(unit_square())), 0.25);
}

GTEST_TEST(SimulatorTest, ConfigValidation) {
  SimConfig c;
  EXPECT_NO_THROW(c.validate());
  c.dt = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = SimConfig{};
  c.collision_floor = 1e-12;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = SimConfig{};
  c.deadband = -1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

GTEST_TEST(SimulatorTest, StepAtRestIsIdentity) {
  const FormationState square(unit_square());
  const FormationState next = step(square, Uniform(4, 90), SimConfig{});
  EXPECT_EQ(next.positions(), square.positions());
}

GTEST_TEST(SimulatorTest, StepMovesOnlyTheVehicleWithError) {
  Rng rng(51);
  const std::vector<Vec2> z = random_positions(rng, 5, 0.5);
  // Targets equal to the current angles, except vehicle 2 which is asked to
  // open up its angle so that eps_2 > 0 or < 0 depending on the side.
  std::vector<AngleRad> target;
  for (std::size_t i = 0; i < 5; ++i) target.emplace_back(vertex_angle(z, i));
  target[2] = AngleRad(target[2].value < kPi ? target[2].value + 0.1 : target[2].value - 0.1);
  const TargetSpec spec(target);
  const Eigen::VectorXd eps = errors(FormationState(z), spec);
  ASSERT_GT(eps(2), 0.0);

  SimConfig cfg;
  cfg.dt = 1e-3;
  const FormationState next = step(FormationState(z), spec, cfg);
  for (std::size_t i = 0; i < 5; ++i) {
    Vec2 expected = z[i];
    if (i == 2) expected += cfg.dt * (unit_edge(z, 2) - unit_edge(z, 1));
    EXPECT_LE((next.position(i) - expected).cwiseAbs().maxCoeff(), 1e-15) << i;
  }
}

GTEST_TEST(SimulatorTest, StepConservesAngleSum) {
  const TargetSpec spec = Uniform(4, 90);
  const FormationState s = perturb(realize_target(spec, 1.0), 0.1, 4);
  const FormationState next = step(s, spec, SimConfig{});
  EXPECT_NE(next.positions(), s.positions());
  EXPECT_NEAR(angle_sum(next), angle_sum(s), 1e-6);
}

GTEST_TEST(SimulatorTest, StepThrowsAtCollisionFloor) {
  const FormationState square(unit_square());
  SimConfig cfg;
  cfg.collision_floor = 2.0;
  EXPECT_THROW(step(square, Uniform(4, 90), cfg), CollisionImminent);
}

// d eps/dt predicted by error_rates against central differences of the
// angle-based error oracle.
GTEST_TEST(SimulatorTest, ErrorRatesMatchFiniteDifference) {
  Rng rng(52);
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = 3 + k % 6;
    const std::vector<Vec2> z = random_positions(rng, n, 0.3);
    std::vector<Vec2> u(n);
    for (auto& v : u) v = Vec2(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));
    const Eigen::VectorXd rate = error_rates(ring_geometry(z), u);

    const double h = 1e-6;
    std::vector<Vec2> zp = z, zm = z;
    for (std::size_t i = 0; i < n; ++i) {
      zp[i] += h * u[i];
      zm[i] -= h * u[i];
    }
    const std::vector<double> target(n, 1.0);
    const Eigen::VectorXd fd = (errors_oracle(zp, target) - errors_oracle(zm, target)) / (2 * h);
    EXPECT_LE((rate - fd).cwiseAbs().maxCoeff(), 1e-5);
  }
}

GTEST_TEST(SimulatorTest, ControlVelocitiesUseEveryVehiclesOwnError) {
  Rng rng(53);
  const std::vector<Vec2> z = random_positions(rng, 6, 0.3);
  const TargetSpec spec = Uniform(6, 120);
  const SignPolicy policy;
  const RingGeometry geom = ring_geometry(z);
  const std::vector<Vec2> u = control_velocities(geom, spec, policy);
  const Eigen::VectorXd eps = errors_oracle(z, std::vector<double>(6, 2 * kPi / 3));
  for (std::size_t i = 0; i < 6; ++i) {
    const Vec2 expected = policy(eps(static_cast<Eigen::Index>(i))) * (unit_edge(z, i) - unit_edge(z, (i + 5) % 6));
    EXPECT_LE((u[i] - expected).cwiseAbs().maxCoeff(), 1e-15);
  }
}

GTEST_TEST(SimulatorTest, RunFromTargetStopsImmediately) {
  const TargetSpec spec = Uniform(8, 135);
  const FormationState s = realize_target(spec, 1.0);
  const TrajectoryRecord r = run(s, spec, SimConfig{});
  ASSERT_TRUE(r.converged);
  EXPECT_EQ(*r.t_f, 0.0);
  EXPECT_EQ(r.event, RunEvent::kConverged);
  for (const auto& sample : r.samples) EXPECT_EQ(sample.positions, s.positions());
  EXPECT_EQ(r.max_speed_after_convergence, 0.0);
}

void ExpectHealthyConvergence(const TrajectoryRecord& r, std::size_t n) {
  ASSERT_TRUE(r.converged) << r.event_message;
  ASSERT_TRUE(r.t_f.has_value());
  EXPECT_GT(*r.t_f, 0.0);
  EXPECT_EQ(r.max_speed_after_convergence, 0.0);
  const double slack = 10.0 * static_cast<double>(n) * r.dt;
  for (std::size_t k = 0; k < r.samples.size(); ++k) {
    const Sample& s = r.samples[k];
    EXPECT_GT(s.min_distance, 0.0);
    if (k > 0) {
      EXPECT_GT(s.t, r.samples[k - 1].t);
      EXPECT_LE(s.lyapunov, r.samples[k - 1].lyapunov + slack);
    }
    if (s.t >= *r.t_f) {
      for (double v : s.speeds) EXPECT_EQ(v, 0.0);
      EXPECT_LE(s.lyapunov, r.convergence_tol);
    }
    // Any motion implies some error left.
    const bool moving = std::any_of(s.speeds.begin(), s.speeds.end(), [](double v) { return v > 0.0; });
    if (moving) {
      EXPECT_GT(s.lyapunov, 0.0);
    }
  }
}

GTEST_TEST(SimulatorTest, RunConvergesOnPerturbedSquare) {
  const TargetSpec spec = Uniform(4, 90);
  const FormationState s0 = perturb(realize_target(spec, 1.0), 0.1, 1);
  EXPECT_NEAR(lyapunov(errors(s0, spec)), 0.2, 0.1);
  const TrajectoryRecord r = run(s0, spec, SimConfig{});
  ExpectHealthyConvergence(r, 4);
  EXPECT_NEAR(r.t_star, s0.min_distance() / 4.0, 1e-15);
  EXPECT_NEAR(r.collision_floor, 1e-3 * s0.min_distance(), 1e-15);
}

GTEST_TEST(SimulatorTest, RunConvergesOnPerturbedPentagram) {
  const TargetSpec spec = Uniform(5, 36);
  const FormationState s0 = perturb(realize_target(spec, 1.0), 0.1, 2);
  ExpectHealthyConvergence(run(s0, spec, SimConfig{}), 5);
}

GTEST_TEST(SimulatorTest, RunIsDeterministic) {
  const TargetSpec spec = Uniform(5, 36);
  const FormationState s0 = perturb(realize_target(spec, 1.0), 0.1, 3);
  const TrajectoryRecord a = run(s0, spec, SimConfig{});
  const TrajectoryRecord b = run(s0, spec, SimConfig{});
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (std::size_t k = 0; k < a.samples.size(); ++k) {
    EXPECT_EQ(a.samples[k].positions, b.samples[k].positions);
    EXPECT_EQ(a.samples[k].errors, b.samples[k].errors);
  }
}

GTEST_TEST(SimulatorTest, RunRefusesInfeasibleUnlessForced) {
  const std::vector<double> deg = {30, 30, 30, 30};
  const TargetSpec spec = TargetSpec::from_degrees(deg);
  const FormationState square(unit_square());
  EXPECT_THROW(run(square, spec, SimConfig{}), InfeasibleScenario);

  SimConfig forced;
  forced.force = true;
  forced.t_max = 0.05;
  const TrajectoryRecord r = run(square, spec, forced);
  EXPECT_FALSE(r.converged);
  EXPECT_NE(r.event, RunEvent::kConverged);
}

GTEST_TEST(SimulatorTest, RunTimesOut) {
  const TargetSpec spec = Uniform(4, 90);
  SimConfig cfg;
  cfg.t_max = 0.005;
  const TrajectoryRecord r = run(perturb(realize_target(spec, 1.0), 0.1, 1), spec, cfg);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.event, RunEvent::kTimeout);
  EXPECT_NEAR(r.samples.back().t, 0.005, 1e-12);
  EXPECT_EQ(r.samples.size(), 6u);
}

GTEST_TEST(SimulatorTest, RunRecordsCollision) {
  // A floor just under the starting spacing is hit as soon as any pair closes in.
  const TargetSpec spec = Uniform(4, 90);
  const FormationState s0 = perturb(realize_target(spec, 1.0), 0.1, 1);
  SimConfig cfg;
  cfg.collision_floor = 0.999 * s0.min_distance();
  const TrajectoryRecord r = run(s0, spec, cfg);
  EXPECT_EQ(r.event, RunEvent::kCollision);
  EXPECT_FALSE(r.converged);
  EXPECT_FALSE(r.event_message.empty());
  EXPECT_LE(r.samples.back().min_distance, cfg.collision_floor);
}

// Plain Euler with a sign law chatters: V drops into a band of width
// O(n dt) and stays there instead of reaching rest.
GTEST_TEST(SimulatorTest, FixedStepIntegratorChatters) {
  const TargetSpec spec = Uniform(4, 90);
  SimConfig cfg;
  cfg.integrator = Integrator::kFixedStep;
  cfg.t_max = 1.0;
  const FormationState s0 = perturb(realize_target(spec, 1.0), 0.05, 1);
  const TrajectoryRecord r = run(s0, spec, cfg);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.event, RunEvent::kTimeout);
  const double band = 10.0 * 4 * cfg.dt;
  for (const auto& s : r.samples) {
    EXPECT_GT(s.min_distance, 0.0);
    if (s.t >= 0.1) {
      EXPECT_LE(s.lyapunov, band);
      EXPECT_GT(s.lyapunov, cfg.convergence_tol);
    }
  }
}

GTEST_TEST(SimulatorTest, RecordDecimation) {
  const TargetSpec spec = Uniform(4, 90);
  SimConfig cfg;
  cfg.record_every = 10;
  const FormationState s0 = perturb(realize_target(spec, 1.0), 0.1, 1);
  const TrajectoryRecord dec = run(s0, spec, cfg);
  const TrajectoryRecord full = run(s0, spec, SimConfig{});
  ASSERT_TRUE(dec.converged);
  EXPECT_EQ(*dec.t_f, *full.t_f);
  EXPECT_LT(dec.samples.size(), full.samples.size());
  EXPECT_EQ(dec.at_convergence().t, *dec.t_f);
}

}  // namespace
}  // namespace bearingform
