#include "bearingform/analysis.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "bearingform/errors.hpp"
#include "bearingform/random.hpp"

namespace bearingform {

namespace {

using Index = Eigen::Index;

Index idx(std::size_t i) { return static_cast<Index>(i); }

}  // namespace

Eigen::MatrixXd error_matrix(const RingGeometry& geom) {
  const std::size_t n = geom.size();
  std::vector<Mat2> P;
  P.reserve(n);
  for (const auto& g : geom.bearings) P.push_back(projector(g));
  auto g = [&](std::size_t k) -> const Vec2& { return geom.bearings[k].direction(); };

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(idx(n), idx(n));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t im1 = geom.prev(i);
    const std::size_t im2 = geom.prev(im1);
    const std::size_t ip1 = geom.next(i);
    const double inv_prev = 1.0 / geom.lengths[im1];
    const double inv_here = 1.0 / geom.lengths[i];
    A(idx(i), idx(im1)) += inv_prev * g(i).dot(P[im1] * g(im2));
    A(idx(i), idx(i)) += inv_prev * g(i).dot(P[im1] * g(i)) + inv_here * g(im1).dot(P[i] * g(im1));
    A(idx(i), idx(ip1)) += inv_here * g(im1).dot(P[i] * g(ip1));
  }
  return A;
}

ErrorMatrix assemble_A(const FormationState& state) {
  return ErrorMatrix{error_matrix(state.geometry()), state.positions()};
}

double projector_quadratic_form(const RingGeometry& geom, const Eigen::VectorXd& x) {
  const std::size_t n = geom.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t ip1 = geom.next(i);
    const std::size_t im1 = geom.prev(i);
    const Vec2 v = geom.bearings[ip1].direction() * x(idx(ip1)) + geom.bearings[im1].direction() * x(idx(i));
    sum += v.dot(project_out(geom.bearings[i], v)) / geom.lengths[i];
  }
  return sum;
}

double lyapunov(const Eigen::VectorXd& eps) { return eps.lpNorm<1>(); }

Eigen::VectorXd sign_vector(const Eigen::VectorXd& eps) {
  return eps.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

bool GradientBox::contains(const Eigen::VectorXd& eta) const {
  if (eta.size() != idx(components.size())) return false;
  for (std::size_t i = 0; i < components.size(); ++i) {
    if (eta(idx(i)) < components[i].lo || eta(idx(i)) > components[i].hi) return false;
  }
  return true;
}

Eigen::VectorXd GradientBox::least_norm() const {
  Eigen::VectorXd out(idx(components.size()));
  for (std::size_t i = 0; i < components.size(); ++i) {
    // Projection of 0 onto [lo, hi].
    out(idx(i)) = std::clamp(0.0, components[i].lo, components[i].hi);
  }
  return out;
}

GradientBox gradient_box(const Eigen::VectorXd& eps) {
  GradientBox box;
  box.components.reserve(static_cast<std::size_t>(eps.size()));
  for (Index i = 0; i < eps.size(); ++i) {
    if (eps(i) > 0.0) {
      box.components.push_back({1.0, 1.0});
    } else if (eps(i) < 0.0) {
      box.components.push_back({-1.0, -1.0});
    } else {
      box.components.push_back({-1.0, 1.0});
    }
  }
  return box;
}

double lie_derivative_value(const FormationState& state, const TargetSpec& spec, double deadband) {
  const RingGeometry geom = state.geometry();
  const SignPolicy policy(deadband);
  const Eigen::VectorXd eps = errors(geom, spec);
  Eigen::VectorXd eta(eps.size());
  for (Eigen::Index i = 0; i < eps.size(); ++i) eta(i) = policy(eps(i));
  return -eta.dot(error_matrix(geom) * eta);
}

Eigen::MatrixXd incidence_matrix(std::size_t n) {
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(idx(n), idx(n));
  for (std::size_t i = 0; i < n; ++i) {
    E(idx(i), idx(i)) = 1.0;
    E(idx(i), idx((i + 1) % n)) = -1.0;
  }
  return E;
}

CycleFactorization cycle_factorization(const RingGeometry& geom) {
  const std::size_t n = geom.size();
  CycleFactorization f{incidence_matrix(n), Eigen::VectorXd(idx(n))};
  for (std::size_t i = 0; i < n; ++i) {
    f.d(idx(i)) = perp(geom.bearings[i]).direction().dot(geom.bearings[geom.prev(i)].direction());
  }
  return f;
}

CycleFactorization cycle_factorization(const FormationState& state) {
  return cycle_factorization(state.geometry());
}

double lambda2_cycle(std::size_t n) {
  if (n < 3) throw std::invalid_argument("lambda2_cycle: n must be >= 3");
  const Eigen::MatrixXd E = incidence_matrix(n);
  const Eigen::MatrixXd L = E.transpose() * E;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(L, Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(1);
}

InfimumCheck sampled_infimum_check(const Eigen::MatrixXd& B, std::size_t samples, std::uint64_t seed) {
  const Index n = B.rows();
  if (n < 2 || B.cols() != n) throw HypothesisViolated("matrix must be square with n >= 2");
  const double scale = std::max(1.0, B.cwiseAbs().maxCoeff());
  if ((B - B.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw HypothesisViolated("matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(B, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd lambda = solver.eigenvalues();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  if (std::abs(lambda(0)) > 1e-9 * scale || (B * ones).norm() > 1e-9 * scale * std::sqrt(double(n))) {
    throw HypothesisViolated("smallest eigenvalue is not 0 on span{1}");
  }
  if (!(lambda(1) > 1e-9 * scale)) {
    std::ostringstream msg;
    msg << "second eigenvalue " << lambda(1) << " is not positive";
    throw HypothesisViolated(msg.str());
  }

  InfimumCheck check;
  check.samples = samples;
  check.lambda2 = lambda(1);
  check.bound = lambda(1) / static_cast<double>(n);
  check.min_sampled = std::numeric_limits<double>::infinity();

  Rng rng(seed);
  Eigen::VectorXd x(n);
  for (std::size_t s = 0; s < samples; ++s) {
    // Magnitudes from the unit sphere, then a uniformly drawn mixed sign pattern.
    for (Index i = 0; i < n; ++i) x(i) = std::abs(rng.normal());
    const double norm = x.norm();
    if (norm == 0.0) continue;
    x /= norm;
    bool any_pos = false;
    bool any_neg = false;
    do {
      any_pos = any_neg = false;
      for (Index i = 0; i < n; ++i) {
        const bool neg = rng.coin();
        x(i) = neg ? -std::abs(x(i)) : std::abs(x(i));
        (neg ? any_neg : any_pos) = true;
      }
    } while (!(any_pos && any_neg));

    const double q = x.dot(B * x);
    if (q < check.min_sampled) {
      check.min_sampled = q;
      check.best = x;
    }
  }
  check.bound_holds = check.min_sampled >= check.bound - 1e-9;
  return check;
}

double w_factor(AngleRad theta, AngleRad theta_star) {
  const double diff = theta.value - theta_star.value;
  if (std::abs(diff) < 1e-7) return -std::sin(theta_star.value);
  return (std::cos(theta.value) - std::cos(theta_star.value)) / diff;
}

Eigen::VectorXd dw_diagonal(const FormationState& state, const TargetSpec& spec) {
  const RingGeometry geom = state.geometry();
  const CycleFactorization f = cycle_factorization(geom);
  Eigen::VectorXd out(idx(geom.size()));
  for (std::size_t i = 0; i < geom.size(); ++i) {
    out(idx(i)) = f.d(idx(i)) * w_factor(AngleRad(geom.angle(i)), AngleRad(spec.angle(i)));
  }
  return out;
}

CertificateReport certify(const TrajectoryRecord& trajectory, const FormationState& state0,
                          const TargetSpec& spec) {
  if (!trajectory.converged || !trajectory.t_f || trajectory.samples.empty()) {
    throw NotConverged("certify: trajectory did not converge");
  }
  const std::size_t n = state0.size();
  CertificateReport report;
  report.n = n;
  report.T_star = collision_horizon(state0);
  report.t_f = *trajectory.t_f;
  report.V0 = lyapunov(errors(state0, spec));
  report.lambda2_EtE = lambda2_cycle(n);

  report.gamma = 0.0;
  report.beta = std::numeric_limits<double>::infinity();
  for (const auto& sample : trajectory.samples) {
    if (sample.t > report.t_f) break;
    const RingGeometry geom = ring_geometry(sample.positions);
    report.gamma = std::max(report.gamma, geom.perimeter());
    report.beta = std::min(report.beta, cycle_factorization(geom).d.array().square().minCoeff());
  }
  report.kappa = report.beta * report.lambda2_EtE / (report.gamma * static_cast<double>(n));

  if (report.V0 == 0.0) {
    report.time_bound = 0.0;
    report.displacement_bound = 0.0;
  } else if (report.kappa > 0.0) {
    report.time_bound = report.V0 / report.kappa;
    report.displacement_bound = 2.0 * report.V0 / report.kappa;
  } else {
    report.time_bound = std::numeric_limits<double>::infinity();
    report.displacement_bound = std::numeric_limits<double>::infinity();
  }

  const Sample& final_sample = trajectory.at_convergence();
  for (std::size_t i = 0; i < n; ++i) {
    report.max_displacement =
        std::max(report.max_displacement, (final_sample.positions[i] - state0.position(i)).norm());
  }

  report.time_ok = report.t_f <= report.time_bound;
  report.displacement_ok = report.max_displacement <= report.displacement_bound;
  report.horizon_ok = report.t_f < report.T_star;
  return report;
}

}  // namespace bearingform
