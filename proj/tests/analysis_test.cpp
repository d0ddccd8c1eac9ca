#include "bearingform/analysis.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "bearingform/errors.hpp"
#include "test_support.hpp"

namespace bearingform {
namespace {

using testing::cycle_laplacian;
using testing::errors_oracle;
using testing::jacobi_eigenvalues;
using testing::random_positions;
using testing::vertex_angle;

TargetSpec Uniform(std::size_t n, double deg) {
  const std::vector<double> d(n, deg);
  return TargetSpec::from_degrees(d);
}

GTEST_TEST(AnalysisTest, ErrorMatrixStructure) {
  Rng rng(41);
  for (int k = 0; k < 200; ++k) {
    const std::size_t n = 3 + k % 8;
    const auto m = static_cast<Eigen::Index>(n);
    const ErrorMatrix em = assemble_A(FormationState(random_positions(rng, n)));
    const Eigen::MatrixXd& A = em.A;
    ASSERT_EQ(A.rows(), m);
    EXPECT_LE((A - A.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-9);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) {
        const Eigen::Index d = (j - i + m) % m;
        if (d != 0 && d != 1 && d != m - 1) {
          EXPECT_EQ(A(i, j), 0.0);
        }
      }
    }
  }
}

GTEST_TEST(AnalysisTest, QuadraticFormMatchesProjectorSum) {
  Rng rng(42);
  for (int s = 0; s < 100; ++s) {
    const std::size_t n = 3 + s % 8;
    const std::vector<Vec2> z = random_positions(rng, n);
    const FormationState state(z);
    const Eigen::MatrixXd A = assemble_A(state).A;
    const RingGeometry geom = state.geometry();
    for (int t = 0; t < 100; ++t) {
      Eigen::VectorXd x(static_cast<Eigen::Index>(n));
      for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.uniform(-1.0, 1.0);
      const double direct = x.dot(A * x);
      EXPECT_NEAR(direct, testing::projector_sum_oracle(z, x), 1e-10);
      EXPECT_NEAR(direct, projector_quadratic_form(geom, x), 1e-10);
    }
  }
}

// d eps / dt under u_i = s_i (g_i - g_{i-1}) equals -A s; checked by central
// differences of the angle-based error oracle.
GTEST_TEST(AnalysisTest, ErrorMatrixMatchesFiniteDifference) {
  Rng rng(43);
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = 3 + k % 6;
    const std::vector<Vec2> z = random_positions(rng, n, 0.3);
    const std::vector<double> target(n, 1.0);
    Eigen::VectorXd s(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = static_cast<double>(static_cast<int>(rng.uniform() * 3.0) - 1);

    const double h = 1e-6;
    std::vector<Vec2> zp = z, zm = z;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 u = s(static_cast<Eigen::Index>(i)) *
                     (testing::unit_edge(z, i) - testing::unit_edge(z, (i + n - 1) % n));
      zp[i] += h * u;
      zm[i] -= h * u;
    }
    const Eigen::VectorXd rate = (errors_oracle(zp, target) - errors_oracle(zm, target)) / (2 * h);
    const Eigen::MatrixXd A = assemble_A(FormationState(z)).A;
    EXPECT_LE((rate + A * s).cwiseAbs().maxCoeff(), 1e-6 * (1.0 + A.cwiseAbs().maxCoeff()));
  }
}

GTEST_TEST(AnalysisTest, Lyapunov) {
  EXPECT_EQ(lyapunov(Eigen::VectorXd::Zero(3)), 0.0);
  EXPECT_NEAR(lyapunov(Eigen::Vector3d(0.1, -0.2, 0.1)), 0.4, 1e-15);
  const Eigen::Vector3d e(0.3, -1.2, 0.05);
  EXPECT_NEAR(lyapunov(-2.5 * e), 2.5 * lyapunov(e), 1e-14);
}

GTEST_TEST(AnalysisTest, GradientBox) {
  const GradientBox a = gradient_box(Eigen::Vector2d(1, -2));
  EXPECT_EQ(a.components[0].lo, 1.0);
  EXPECT_EQ(a.components[0].hi, 1.0);
  EXPECT_EQ(a.components[1].lo, -1.0);
  EXPECT_EQ(a.components[1].hi, -1.0);

  const GradientBox b = gradient_box(Eigen::Vector2d(0, 3));
  EXPECT_EQ(b.components[0].lo, -1.0);
  EXPECT_EQ(b.components[0].hi, 1.0);
  EXPECT_EQ(b.least_norm(), Eigen::Vector2d(0, 1));
  EXPECT_TRUE(b.contains(Eigen::Vector2d(0.3, 1)));
  EXPECT_FALSE(b.contains(Eigen::Vector2d(0.3, 0.9)));

  const GradientBox c = gradient_box(Eigen::Vector3d::Zero());
  EXPECT_EQ(c.least_norm(), Eigen::Vector3d::Zero());

  Rng rng(44);
  for (int k = 0; k < 1000; ++k) {
    Eigen::VectorXd eps(6);
    for (Eigen::Index i = 0; i < 6; ++i) eps(i) = rng.coin() ? 0.0 : rng.uniform(-1.0, 1.0);
    const GradientBox box = gradient_box(eps);
    EXPECT_EQ(box.least_norm(), sign_vector(eps));
    if (eps.cwiseAbs().maxCoeff() > 0.0) {
      // Any member has norm at least 1.
      Eigen::VectorXd eta(6);
      for (Eigen::Index i = 0; i < 6; ++i) {
        eta(i) = rng.uniform(box.components[i].lo, box.components[i].hi);
      }
      EXPECT_TRUE(box.contains(eta));
      EXPECT_GE(eta.norm(), 1.0);
    }
  }
}

GTEST_TEST(AnalysisTest, LieDerivative) {
  const TargetSpec square = Uniform(4, 90);
  // A realized target carries round-off in eps (cos(pi/2) is not 0 in double),
  // so the exact sign is not 0 there; the controller's deadband sign is.
  const FormationState at_target = realize_target(square, 1.0);
  EXPECT_LE(errors(at_target, square).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(lie_derivative_value(at_target, square, kDefaultDeadband), 0.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const FormationState s = perturb(realize_target(square, 1.0), 0.05, seed);
    const double l = lie_derivative_value(s, square);
    EXPECT_LT(l, 0.0);
    const RingGeometry geom = s.geometry();
    const CycleFactorization f = cycle_factorization(geom);
    const Eigen::VectorXd eta = sign_vector(errors(s, square));
    const double chain = (f.E * f.D() * eta).squaredNorm() / geom.perimeter();
    EXPECT_LE(l, -chain + 1e-10);
  }
}

GTEST_TEST(AnalysisTest, CycleFactorization) {
  for (std::size_t n = 3; n <= 12; ++n) {
    const Eigen::MatrixXd E = incidence_matrix(n);
    EXPECT_EQ((E * Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n))).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(Eigen::FullPivLU<Eigen::MatrixXd>(E).rank(), static_cast<Eigen::Index>(n - 1));
    EXPECT_EQ(E.transpose() * E, cycle_laplacian(n));
  }
  const CycleFactorization sq = cycle_factorization(FormationState(testing::unit_square()));
  EXPECT_LE((sq.d - Eigen::VectorXd::Ones(4)).cwiseAbs().maxCoeff(), 1e-15);

  Rng rng(45);
  for (int k = 0; k < 200; ++k) {
    const std::size_t n = 3 + k % 6;
    const std::vector<Vec2> z = random_positions(rng, n);
    const CycleFactorization f = cycle_factorization(FormationState(z));
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_NEAR(f.d(static_cast<Eigen::Index>(i)), std::sin(vertex_angle(z, i)), 1e-10);
    }
  }
}

// (1/sum|e_i|) |E D eta|^2 <= eta^T A eta over every eta in {-1, 0, 1}^n.
GTEST_TEST(AnalysisTest, FactorizationLowerBoundsQuadraticForm) {
  Rng rng(46);
  for (std::size_t n = 3; n <= 6; ++n) {
    for (int s = 0; s < 5; ++s) {
      const FormationState state(random_positions(rng, n));
      const RingGeometry geom = state.geometry();
      const Eigen::MatrixXd A = error_matrix(geom);
      const CycleFactorization f = cycle_factorization(geom);
      const Eigen::MatrixXd ED = f.E * f.D();
      std::size_t total = 1;
      for (std::size_t i = 0; i < n; ++i) total *= 3;
      for (std::size_t code = 0; code < total; ++code) {
        Eigen::VectorXd eta(static_cast<Eigen::Index>(n));
        std::size_t c = code;
        for (Eigen::Index i = 0; i < eta.size(); ++i, c /= 3) eta(i) = static_cast<double>(c % 3) - 1.0;
        EXPECT_LE((ED * eta).squaredNorm() / geom.perimeter(), eta.dot(A * eta) + 1e-10);
      }
    }
  }
}

GTEST_TEST(AnalysisTest, Lambda2Cycle) {
  EXPECT_NEAR(lambda2_cycle(3), 3.0, 1e-12);
  EXPECT_NEAR(lambda2_cycle(4), 2.0, 1e-12);
  for (std::size_t n = 3; n <= 12; ++n) {
    const Eigen::VectorXd ev = jacobi_eigenvalues(cycle_laplacian(n));
    EXPECT_NEAR(ev(0), 0.0, 1e-12);
    EXPECT_NEAR(lambda2_cycle(n), ev(1), 1e-9);
    EXPECT_NEAR(lambda2_cycle(n), 2.0 - 2.0 * std::cos(2.0 * kPi / static_cast<double>(n)), 1e-12);
  }
}

GTEST_TEST(AnalysisTest, SampledInfimum) {
  const Eigen::MatrixXd L4 = cycle_laplacian(4);
  const InfimumCheck c = sampled_infimum_check(L4, 100000, 1);
  EXPECT_EQ(c.samples, 100000u);
  EXPECT_NEAR(c.bound, 0.5, 1e-12);
  EXPECT_TRUE(c.bound_holds);
  EXPECT_GE(c.min_sampled, 0.5);
  EXPECT_NEAR(c.best.norm(), 1.0, 1e-12);
  EXPECT_NEAR(c.best.dot(L4 * c.best), c.min_sampled, 1e-12);
  EXPECT_GT(c.best.maxCoeff(), 0.0);
  EXPECT_LT(c.best.minCoeff(), 0.0);

  const Eigen::Vector4d x = Eigen::Vector4d(1, -1, 0, 0) / std::sqrt(2.0);
  EXPECT_NEAR(x.dot(L4 * x), 3.0, 1e-12);

  // Same seed, same answer.
  EXPECT_EQ(sampled_infimum_check(L4, 1000, 7).min_sampled, sampled_infimum_check(L4, 1000, 7).min_sampled);
}

GTEST_TEST(AnalysisTest, SampledInfimumHypotheses) {
  // Two disjoint edges: lambda_2 = 0.
  Eigen::Matrix4d split = Eigen::Matrix4d::Zero();
  split.block<2, 2>(0, 0) << 1, -1, -1, 1;
  split.block<2, 2>(2, 2) << 1, -1, -1, 1;
  EXPECT_THROW(sampled_infimum_check(split, 10, 0), HypothesisViolated);

  Eigen::Matrix3d skew = cycle_laplacian(3);
  skew(0, 1) += 0.1;
  EXPECT_THROW(sampled_infimum_check(skew, 10, 0), HypothesisViolated);

  EXPECT_THROW(sampled_infimum_check(Eigen::Matrix3d::Identity(), 10, 0), HypothesisViolated);
}

GTEST_TEST(AnalysisTest, WFactor) {
  EXPECT_NEAR(w_factor(AngleRad(kPi / 3), AngleRad(kPi / 3)), -std::sin(kPi / 3), 1e-15);
  EXPECT_NEAR(w_factor(AngleRad(kPi / 2), AngleRad(kPi / 3)), -0.5 / (kPi / 6), 1e-12);
  EXPECT_NEAR(w_factor(AngleRad(1.0 + 1e-8), AngleRad(1.0)), -std::sin(1.0), 1e-7);
  Rng rng(47);
  for (int k = 0; k < 1000; ++k) {
    EXPECT_LT(w_factor(AngleRad(rng.uniform(0.01, 3.13)), AngleRad(rng.uniform(0.01, 3.13))), 0.0);
    EXPECT_GT(w_factor(AngleRad(rng.uniform(3.15, 6.27)), AngleRad(rng.uniform(3.15, 6.27))), 0.0);
  }
}

GTEST_TEST(AnalysisTest, DWDiagonalSharesOneSign) {
  const std::vector<std::pair<std::size_t, double>> scenarios = {{3, 60}, {4, 90}, {5, 36}, {8, 135}};
  for (const auto& [n, deg] : scenarios) {
    const TargetSpec spec = Uniform(n, deg);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const Eigen::VectorXd dw = dw_diagonal(perturb(realize_target(spec, 1.0), 0.1, seed), spec);
      EXPECT_TRUE((dw.array() < 0).all() || (dw.array() > 0).all()) << dw.transpose();
    }
  }
  const std::vector<double> tri = {45, 45, 90};
  const TargetSpec t = TargetSpec::from_degrees(tri);
  const Eigen::VectorXd dw = dw_diagonal(perturb(realize_target(t, 1.0), 0.1, 3), t);
  EXPECT_TRUE((dw.array() < 0).all());
}

GTEST_TEST(AnalysisTest, CertifyOnConvergedRun) {
  const TargetSpec spec = Uniform(4, 90);
  const FormationState state0 = perturb(realize_target(spec, 1.0), 0.05, 2);
  const TrajectoryRecord traj = run(state0, spec, SimConfig{});
  ASSERT_TRUE(traj.converged);
  const CertificateReport c = certify(traj, state0, spec);

  // gamma and beta recomputed from positions up to t_f.
  double gamma = 0.0, beta = INFINITY;
  for (const auto& s : traj.samples) {
    if (s.t > *traj.t_f) break;
    double perimeter = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      perimeter += (s.positions[(i + 1) % 4] - s.positions[i]).norm();
      beta = std::min(beta, std::pow(std::sin(vertex_angle(s.positions, i)), 2));
    }
    gamma = std::max(gamma, perimeter);
  }
  EXPECT_NEAR(c.gamma, gamma, 1e-12);
  EXPECT_NEAR(c.beta, beta, 1e-10);
  EXPECT_NEAR(c.lambda2_EtE, 2.0, 1e-12);
  EXPECT_NEAR(c.kappa, beta * 2.0 / (gamma * 4.0), 1e-10);
  EXPECT_NEAR(c.V0, errors_oracle(state0.positions(), std::vector<double>(4, kPi / 2)).lpNorm<1>(), 1e-12);
  EXPECT_NEAR(c.time_bound, c.V0 / c.kappa, 1e-12 * c.time_bound);
  EXPECT_NEAR(c.displacement_bound, 2.0 * c.time_bound, 1e-12 * c.time_bound);
  EXPECT_NEAR(c.T_star, state0.min_distance() / 4.0, 1e-15);
  EXPECT_TRUE(c.time_ok);
  EXPECT_TRUE(c.displacement_ok);
  EXPECT_TRUE(c.horizon_ok);
  EXPECT_TRUE(c.passed());
}

GTEST_TEST(AnalysisTest, CertifyEdgeCases) {
  const TargetSpec spec = Uniform(4, 90);
  const FormationState at_target = realize_target(spec, 1.0);
  const TrajectoryRecord still = run(at_target, spec, SimConfig{});
  const CertificateReport c = certify(still, at_target, spec);
  EXPECT_EQ(c.t_f, 0.0);
  // V0 is round-off here, so both bounds are at round-off level too.
  EXPECT_LE(c.V0, 1e-14);
  EXPECT_LE(c.time_bound, 1e-12);
  EXPECT_LE(c.displacement_bound, 2e-12);
  EXPECT_EQ(c.max_displacement, 0.0);
  EXPECT_TRUE(c.passed());

  SimConfig short_run;
  short_run.t_max = 0.002;
  const FormationState moved = perturb(at_target, 0.1, 1);
  const TrajectoryRecord unfinished = run(moved, spec, short_run);
  ASSERT_FALSE(unfinished.converged);
  EXPECT_THROW(certify(unfinished, moved, spec), NotConverged);
}

}  // namespace
}  // namespace bearingform
