#pragma once

#include <cstddef>
#include <functional>

#include "spthe/linalg.hpp"

namespace spthe {

/// Known regressor phi(t) with a declared uniform bound.
///
/// `phi` must be re-entrant: models are shared across threads and runs.
/// Negative times are valid (recordings may predate the run).
struct RegressorModel {
  std::size_t dimension = 0;
  std::function<Vector(double)> phi;
  double phi_bound = 0.0;

  Vector operator()(double t) const;
};

/// Ground truth behind the measurements: theta* and the disturbance d(t).
struct TrueSystem {
  Vector theta_star;
  std::function<double(double)> disturbance;
  double disturbance_bound = 0.0;

  /// Same truth with d == 0.
  TrueSystem without_disturbance() const;
};

struct SignalModel {
  TrueSystem system;
  RegressorModel regressor;

  std::size_t dimension() const { return regressor.dimension; }
};

/// psi(theta*, t) = phi(t)^T theta* + d(t).
double measure(const TrueSystem& sys, const RegressorModel& reg, double t);

/// Real-time learning signal phi(t) (phi(t)^T theta - psi(theta*, t)).
Vector chi(const TrueSystem& sys, const RegressorModel& reg, const Vector& theta, double t);

/// phi(t) phi(t)^T.
Matrix xi(const RegressorModel& reg, double t);

/// theta* = (1, -2, 1), phi = (1, sin t, sin^2 t), d = tanh(t) / 4.
SignalModel section5_model();

}  // namespace spthe
