#pragma once

#include <stdexcept>
#include <string>

namespace bearingform {

/// Base class for every failure raised by the library.
class FormationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two vehicles are closer than collocation_eps; bearings are undefined.
class CollocatedVehicles : public FormationError {
 public:
  using FormationError::FormationError;
};

/// No positive-length polygon realizes the requested angles.
class InfeasibleTarget : public FormationError {
 public:
  using FormationError::FormationError;
};

/// Minimum pairwise distance dropped to the collision floor.
class CollisionImminent : public FormationError {
 public:
  using FormationError::FormationError;
};

/// Initial state fails feasibility validation and no override was given.
class InfeasibleScenario : public FormationError {
 public:
  using FormationError::FormationError;
};

/// A matrix does not have the eigenstructure a bound requires.
class HypothesisViolated : public FormationError {
 public:
  using FormationError::FormationError;
};

/// Certification requested on a trajectory that never converged.
class NotConverged : public FormationError {
 public:
  using FormationError::FormationError;
};

}  // namespace bearingform
