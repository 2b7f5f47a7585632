#include "spthe/signal_model.hpp"

#include <cmath>

#include "spthe/errors.hpp"

namespace spthe {

Vector RegressorModel::operator()(double t) const {
  Vector v = phi(t);
  if (static_cast<std::size_t>(v.size()) != dimension) {
    throw Error(ErrorKind::DimensionMismatch, "regressor returned a vector of the wrong size");
  }
  return v;
}

TrueSystem TrueSystem::without_disturbance() const {
  TrueSystem clean = *this;
  clean.disturbance = [](double) { return 0.0; };
  clean.disturbance_bound = 0.0;
  return clean;
}

double measure(const TrueSystem& sys, const RegressorModel& reg, double t) {
  const Vector p = reg(t);
  if (p.size() != sys.theta_star.size()) {
    throw Error(ErrorKind::DimensionMismatch, "measure: theta* and phi differ in dimension");
  }
  return p.dot(sys.theta_star) + sys.disturbance(t);
}

Vector chi(const TrueSystem& sys, const RegressorModel& reg, const Vector& theta, double t) {
  const Vector p = reg(t);
  if (theta.size() != p.size()) {
    throw Error(ErrorKind::DimensionMismatch, "chi: theta has the wrong dimension");
  }
  return p * (p.dot(theta) - measure(sys, reg, t));
}

Matrix xi(const RegressorModel& reg, double t) {
  const Vector p = reg(t);
  return p * p.transpose();
}

SignalModel section5_model() {
  SignalModel model;
  model.regressor.dimension = 3;
  model.regressor.phi = [](double t) {
    const double s = std::sin(t);
    Vector p(3);
    p << 1.0, s, s * s;
    return p;
  };
  model.regressor.phi_bound = std::sqrt(3.0);

  model.system.theta_star = Vector(3);
  model.system.theta_star << 1.0, -2.0, 1.0;
  model.system.disturbance = [](double t) { return 0.25 * std::tanh(t); };
  model.system.disturbance_bound = 0.25;
  return model;
}

}  // namespace spthe
