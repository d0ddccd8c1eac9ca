#include "bearingform/formation.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "bearingform/errors.hpp"
#include "bearingform/random.hpp"

namespace bearingform {

namespace {

bool near_multiple_of_pi(double theta, double eps) {
  const double w = wrap_to_two_pi(theta);
  return w <= eps || std::abs(w - kPi) <= eps || kTwoPi - w <= eps;
}

}  // namespace

AngleSide classify_angle(double theta, double eps) {
  if (near_multiple_of_pi(theta, eps)) return AngleSide::kDegenerate;
  return wrap_to_two_pi(theta) < kPi ? AngleSide::kLower : AngleSide::kUpper;
}

// ---------------------------------------------------------------------------
// TargetSpec

TargetSpec::TargetSpec(std::vector<AngleRad> angles) : angles_(std::move(angles)) {
  if (angles_.size() < 3) {
    throw std::invalid_argument("TargetSpec: a ring needs at least 3 vehicles");
  }
  cos_.reserve(angles_.size());
  for (auto& a : angles_) {
    if (!std::isfinite(a.value)) throw std::invalid_argument("TargetSpec: non-finite angle");
    a.value = wrap_to_two_pi(a.value);
    cos_.push_back(std::cos(a.value));
  }
}

TargetSpec TargetSpec::from_degrees(std::span<const double> degrees) {
  std::vector<AngleRad> angles;
  angles.reserve(degrees.size());
  for (double d : degrees) angles.push_back(AngleRad::from_degrees(d));
  return TargetSpec(std::move(angles));
}

double TargetSpec::angle_sum() const {
  double sum = 0.0;
  for (const auto& a : angles_) sum += a.value;
  return sum;
}

bool TargetSpec::satisfies_assumption(double eps) const {
  return assumption_violations(eps).empty();
}

std::vector<std::size_t> TargetSpec::assumption_violations(double eps) const {
  std::vector<std::size_t> bad;
  for (std::size_t i = 0; i < angles_.size(); ++i) {
    if (near_multiple_of_pi(angles_[i].value, eps)) bad.push_back(i);
  }
  return bad;
}

std::vector<AngleSide> TargetSpec::sides(double eps) const {
  std::vector<AngleSide> out;
  out.reserve(angles_.size());
  for (const auto& a : angles_) out.push_back(classify_angle(a.value, eps));
  return out;
}

// ---------------------------------------------------------------------------
// Ring geometry

double RingGeometry::angle(std::size_t i) const {
  return subtended_angle(bearings[i], bearings[prev(i)]).value;
}

double RingGeometry::perimeter() const {
  double sum = 0.0;
  for (double l : lengths) sum += l;
  return sum;
}

RingGeometry ring_geometry(std::span<const Vec2> positions) {
  const std::size_t n = positions.size();
  RingGeometry geom;
  geom.edges.reserve(n);
  geom.lengths.reserve(n);
  geom.bearings.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e = positions[(i + 1) % n] - positions[i];
    const double len = e.norm();
    if (len <= kCollocationEps) {
      std::ostringstream msg;
      msg << "vehicles " << i + 1 << " and " << (i + 1) % n + 1 << " are collocated";
      throw CollocatedVehicles(msg.str());
    }
    geom.edges.push_back(e);
    geom.lengths.push_back(len);
    geom.bearings.push_back(Bearing::from_unit(e / len));
  }
  return geom;
}

double min_pairwise_distance(std::span<const Vec2> positions) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < positions.size(); ++i) {
    for (std::size_t j = i + 1; j < positions.size(); ++j) {
      best = std::min(best, (positions[i] - positions[j]).norm());
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// FormationState

FormationState::FormationState(std::vector<Vec2> positions) : positions_(std::move(positions)) {
  if (positions_.size() < 3) {
    throw std::invalid_argument("FormationState: a ring needs at least 3 vehicles");
  }
  for (const auto& p : positions_) {
    if (!p.allFinite()) throw std::invalid_argument("FormationState: non-finite position");
  }
  for (std::size_t i = 0; i < positions_.size(); ++i) {
    for (std::size_t j = i + 1; j < positions_.size(); ++j) {
      if ((positions_[i] - positions_[j]).norm() <= kCollocationEps) {
        std::ostringstream msg;
        msg << "vehicles " << i + 1 << " and " << j + 1 << " are collocated";
        throw CollocatedVehicles(msg.str());
      }
    }
  }
}

std::vector<AngleRad> FormationState::angles() const {
  const RingGeometry geom = geometry();
  std::vector<AngleRad> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.emplace_back(geom.angle(i));
  return out;
}

Eigen::VectorXd errors(const RingGeometry& geom, const TargetSpec& spec) {
  const std::size_t n = geom.size();
  if (spec.size() != n) throw std::invalid_argument("errors: spec and state sizes differ");
  Eigen::VectorXd eps(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double c = -geom.bearings[i].direction().dot(geom.bearings[geom.prev(i)].direction());
    eps(static_cast<Eigen::Index>(i)) = c - spec.cos_angle(i);
  }
  return eps;
}

Eigen::VectorXd errors(const FormationState& state, const TargetSpec& spec) {
  return errors(state.geometry(), spec);
}

double angle_sum(const FormationState& state) {
  const RingGeometry geom = state.geometry();
  double sum = 0.0;
  for (std::size_t i = 0; i < geom.size(); ++i) sum += geom.angle(i);
  return sum;
}

FeasibilityReport validate_feasibility(const FormationState& state0, const TargetSpec& spec) {
  FeasibilityReport report;
  const std::size_t n = spec.size();
  if (state0.size() != n) {
    report.warnings.push_back("vehicle count differs from the number of target angles");
    report.side_ok.assign(n, false);
    return report;
  }

  const std::vector<AngleRad> theta0 = state0.angles();
  for (const auto& a : theta0) report.initial_sum += a.value;
  report.target_sum = spec.angle_sum();
  report.sum_residual = report.initial_sum - report.target_sum;
  report.angle_sum_ok = std::abs(report.sum_residual) <= kAngleSumTol;
  if (!report.angle_sum_ok) {
    std::ostringstream msg;
    msg << "angle sums differ by " << report.sum_residual << " rad";
    report.warnings.push_back(msg.str());
  }

  report.assumption_violations = spec.assumption_violations();
  report.assumption_ok = report.assumption_violations.empty();
  for (std::size_t i : report.assumption_violations) {
    std::ostringstream msg;
    msg << "target angle " << i + 1 << " is 0 or pi";
    report.warnings.push_back(msg.str());
  }

  const std::vector<AngleSide> target_sides = spec.sides();
  report.side_ok.resize(n);
  report.sides_ok = true;
  for (std::size_t i = 0; i < n; ++i) {
    const AngleSide now = classify_angle(theta0[i].value);
    // An initial angle of exactly 0 or pi is reported as a failure.
    const bool ok = now != AngleSide::kDegenerate && now == target_sides[i];
    report.side_ok[i] = ok;
    if (!ok) {
      report.sides_ok = false;
      std::ostringstream msg;
      msg << "initial angle " << i + 1 << " is not on the same side of pi as its target";
      report.warnings.push_back(msg.str());
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// realize_target

namespace {

// Solves min ||l - 1||^2 subject to G l = 0 and l >= lower by clamping the
// worst violator and re-projecting until the free set is feasible.
Eigen::VectorXd close_polygon(const Eigen::Matrix2Xd& g, double lower) {
  const Eigen::Index n = g.cols();
  Eigen::VectorXd lengths = Eigen::VectorXd::Ones(n);
  if ((g * lengths).norm() <= 1e-12) return lengths;

  std::vector<bool> clamped(static_cast<std::size_t>(n), false);
  for (Eigen::Index round = 0; round < n; ++round) {
    std::vector<Eigen::Index> free_idx;
    Vec2 fixed_sum = Vec2::Zero();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (clamped[static_cast<std::size_t>(i)]) {
        fixed_sum += g.col(i) * lower;
      } else {
        free_idx.push_back(i);
      }
    }
    if (free_idx.empty()) break;

    Eigen::Matrix2Xd g_free(2, static_cast<Eigen::Index>(free_idx.size()));
    for (std::size_t k = 0; k < free_idx.size(); ++k) g_free.col(static_cast<Eigen::Index>(k)) = g.col(free_idx[k]);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(g_free.cols());
    const Vec2 rhs = -fixed_sum - g_free * ones;
    const Eigen::Matrix2d gram = g_free * g_free.transpose();
    const Vec2 y = gram.completeOrthogonalDecomposition().solve(rhs);
    const Eigen::VectorXd l_free = ones + g_free.transpose() * y;

    Eigen::Index worst = -1;
    double worst_val = lower;
    for (std::size_t k = 0; k < free_idx.size(); ++k) {
      const Eigen::Index i = free_idx[k];
      lengths(i) = l_free(static_cast<Eigen::Index>(k));
      if (lengths(i) < worst_val - 1e-12) {
        worst_val = lengths(i);
        worst = i;
      }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (clamped[static_cast<std::size_t>(i)]) lengths(i) = lower;
    }
    if (worst < 0) break;
    clamped[static_cast<std::size_t>(worst)] = true;
  }
  return lengths;
}

}  // namespace

FormationState realize_target(const TargetSpec& spec, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw std::invalid_argument("realize_target: scale must be positive");
  }
  if (!spec.satisfies_assumption()) {
    throw InfeasibleTarget("realize_target: a target angle is 0 or pi");
  }
  const std::size_t n = spec.size();

  // Headings of g_1..g_n; the turn from g_n back to g_1 must close as well.
  std::vector<double> heading(n);
  heading[0] = 0.0;
  for (std::size_t i = 1; i < n; ++i) heading[i] = heading[i - 1] + kPi + spec.angle(i);
  const double wrap_gap = wrap_to_two_pi(heading[n - 1] + kPi + spec.angle(0));
  if (std::min(wrap_gap, kTwoPi - wrap_gap) > 1e-8) {
    throw InfeasibleTarget("realize_target: target angles do not close the ring");
  }

  Eigen::Matrix2Xd g(2, static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    g.col(static_cast<Eigen::Index>(i)) = Bearing::from_heading(heading[i]).direction();
  }

  Eigen::VectorXd lengths = close_polygon(g, 0.1);
  const double shortest = lengths.minCoeff();
  if (!(shortest > 0.0)) throw InfeasibleTarget("realize_target: no positive closure exists");
  lengths /= shortest;
  const double residual = (g * lengths).norm();
  if (residual > 1e-8) {
    std::ostringstream msg;
    msg << "realize_target: closure residual " << residual << " exceeds 1e-8";
    throw InfeasibleTarget(msg.str());
  }
  lengths *= scale;

  std::vector<Vec2> positions(n);
  positions[0] = Vec2::Zero();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    positions[i + 1] = positions[i] + lengths(static_cast<Eigen::Index>(i)) * g.col(static_cast<Eigen::Index>(i));
  }
  Vec2 centroid = Vec2::Zero();
  for (const auto& p : positions) centroid += p;
  centroid /= static_cast<double>(n);
  for (auto& p : positions) p -= centroid;

  try {
    FormationState state(std::move(positions));
    const std::vector<AngleRad> got = state.angles();
    for (std::size_t i = 0; i < n; ++i) {
      const double diff = wrap_to_two_pi(got[i].value - spec.angle(i));
      if (std::min(diff, kTwoPi - diff) > 1e-8) {
        throw InfeasibleTarget("realize_target: realized angle misses its target");
      }
    }
    return state;
  } catch (const CollocatedVehicles& e) {
    throw InfeasibleTarget(std::string("realize_target: ") + e.what());
  }
}

FormationState perturb(const FormationState& state, double magnitude, std::uint64_t seed) {
  if (!(magnitude >= 0.0) || !std::isfinite(magnitude)) {
    throw std::invalid_argument("perturb: magnitude must be non-negative");
  }
  Rng rng(seed);
  std::vector<Vec2> out = state.positions();
  for (auto& p : out) {
    const double r = magnitude * std::sqrt(rng.uniform());
    const double phi = kTwoPi * rng.uniform();
    p += Vec2(r * std::cos(phi), r * std::sin(phi));
  }
  return FormationState(std::move(out));
}

}  // namespace bearingform
