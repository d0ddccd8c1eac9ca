#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

#include "bearingform/formation.hpp"
#include "bearingform/simulator.hpp"

namespace bearingform {

/// The matrix A in d eps/dt = -A sgn(eps), assembled at one configuration.
///
/// Row i has nonzeros only in columns i-1, i, i+1 (mod n):
///   a_{i,i-1} = g_i^T P_{i-1} g_{i-2} / |e_{i-1}|
///   a_{i,i}   = g_i^T P_{i-1} g_i / |e_{i-1}| + g_{i-1}^T P_i g_{i-1} / |e_i|
///   a_{i,i+1} = g_{i-1}^T P_i g_{i+1} / |e_i|
/// with P_k = I - g_k g_k^T. A is symmetric positive semi-definite.
struct ErrorMatrix {
  Eigen::MatrixXd A;
  std::vector<Vec2> positions;  ///< configuration A was assembled from
};

Eigen::MatrixXd error_matrix(const RingGeometry& geom);
ErrorMatrix assemble_A(const FormationState& state);

/// x^T A x written as sum_i |e_i|^{-1} v_i^T P_i v_i with
/// v_i = g_{i+1} x_{i+1} + g_{i-1} x_i. Evaluated without forming A.
double projector_quadratic_form(const RingGeometry& geom, const Eigen::VectorXd& x);

/// V(eps) = sum |eps_i|.
double lyapunov(const Eigen::VectorXd& eps);

/// Component-wise sign with sgn(0) = 0.
Eigen::VectorXd sign_vector(const Eigen::VectorXd& eps);

/// Generalized gradient of V: {sgn(eps_i)} where eps_i != 0, [-1, 1] where it is 0.
struct GradientBox {
  struct Interval {
    double lo;
    double hi;
  };
  std::vector<Interval> components;

  bool contains(const Eigen::VectorXd& eta) const;
  /// The element of smallest Euclidean norm.
  Eigen::VectorXd least_norm() const;
};

GradientBox gradient_box(const Eigen::VectorXd& eps);

/// -eta^T A eta with eta_i = sgn(eps_i), taken as 0 where |eps_i| <= deadband.
/// The default deadband of 0 gives the exact sign.
double lie_derivative_value(const FormationState& state, const TargetSpec& spec, double deadband = 0.0);

/// E: incidence matrix of the directed cycle, row i = e_i^T - e_{i+1}^T.
/// D: diagonal with D_ii = <perp(g_i), g_{i-1}> = sin theta_i.
struct CycleFactorization {
  Eigen::MatrixXd E;
  Eigen::VectorXd d;

  Eigen::MatrixXd D() const { return d.asDiagonal(); }
};

Eigen::MatrixXd incidence_matrix(std::size_t n);
CycleFactorization cycle_factorization(const RingGeometry& geom);
CycleFactorization cycle_factorization(const FormationState& state);

/// Second-smallest eigenvalue of E^T E for the n-cycle.
double lambda2_cycle(std::size_t n);

struct InfimumCheck {
  std::size_t samples = 0;
  double lambda2 = 0.0;
  double bound = 0.0;        ///< lambda2 / n
  double min_sampled = 0.0;  ///< smallest x^T B x over the drawn samples
  Eigen::VectorXd best;      ///< sample that achieved min_sampled
  bool bound_holds = false;  ///< min_sampled >= bound - 1e-9

  /// min_sampled / bound; 1 means the bound was reached.
  double attainment_ratio() const { return min_sampled / bound; }
};

/// Monte-Carlo check of inf_{x in U} x^T B x >= lambda2(B) / n, where U holds
/// the unit vectors whose nonzero entries do not all share one sign.
/// Throws HypothesisViolated unless B is symmetric PSD with lambda_1 = 0 on
/// span{1} and lambda_2 > 0.
InfimumCheck sampled_infimum_check(const Eigen::MatrixXd& B, std::size_t samples, std::uint64_t seed);

/// (cos theta - cos theta*) / (theta - theta*), equal to -sin theta* in the limit.
double w_factor(AngleRad theta, AngleRad theta_star);

/// Diagonal of D W: sin(theta_i) * w_factor(theta_i, theta_i*).
Eigen::VectorXd dw_diagonal(const FormationState& state, const TargetSpec& spec);

struct CertificateReport {
  std::size_t n = 0;
  double T_star = 0.0;
  double gamma = 0.0;        ///< max observed perimeter sum |e_i| on [0, t_f]
  double beta = 0.0;         ///< min observed min_i D_ii^2 on [0, t_f]
  double lambda2_EtE = 0.0;
  double kappa = 0.0;        ///< beta lambda2 / (gamma n)
  double V0 = 0.0;
  double t_f = 0.0;
  double time_bound = 0.0;          ///< V0 / kappa
  double displacement_bound = 0.0;  ///< 2 V0 / kappa
  double max_displacement = 0.0;    ///< max_i |z_i(t_f) - z_i(0)|

  bool time_ok = false;          ///< t_f <= time_bound
  bool displacement_ok = false;  ///< max_displacement <= displacement_bound
  bool horizon_ok = false;       ///< t_f < T_star

  /// The finite-time and displacement bounds. horizon_ok is reported apart.
  bool passed() const { return time_ok && displacement_ok; }
};

/// Evaluates the convergence-time and displacement certificates on a
/// converged trajectory, with gamma and beta taken from its samples.
/// Throws NotConverged otherwise.
CertificateReport certify(const TrajectoryRecord& trajectory, const FormationState& state0,
                          const TargetSpec& spec);

}  // namespace bearingform
