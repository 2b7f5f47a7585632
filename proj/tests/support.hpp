#pragma once

// Independent oracles and hand-rolled generators shared by the tests. Nothing
// here calls into the code under test except where a test explicitly passes a
// library function in.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  Vec vector(Eigen::Index n, double lo = -1.0, double hi = 1.0) {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = uniform(lo, hi);
    return v;
  }
  Vec unit(Eigen::Index n) {
    Vec v = vector(n);
    while (v.norm() < 1e-6) v = vector(n);
    return v / v.norm();
  }
  Mat matrix(Eigen::Index r, Eigen::Index c, double lo = -1.0, double hi = 1.0) {
    Mat m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index k = 0; k < c; ++k) m(i, k) = uniform(lo, hi);
    return m;
  }
  Mat symmetric(Eigen::Index n) {
    const Mat a = matrix(n, n);
    return 0.5 * (a + a.transpose());
  }
  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

/// Scalar RK4 from t0 to t1 with steps that shrink like (t_blow - t) / 200
/// near a known singularity.
inline double integrate_scalar(const std::function<double(double)>& rate, double y0, double t0, double t1,
                               double t_blow = kInf, double base_step = 1e-3) {
  double t = t0;
  double y = y0;
  while (t < t1) {
    double h = base_step;
    if (std::isfinite(t_blow)) h = std::min(h, (t_blow - t) / 200.0);
    h = std::min(h, t1 - t);
    const double k1 = rate(y);
    const double k2 = rate(y + 0.5 * h * k1);
    const double k3 = rate(y + 0.5 * h * k2);
    const double k4 = rate(y + h * k3);
    y += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    t += h;
  }
  return y;
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
inline double power_max_eigen(const Mat& a, int iterations = 20000) {
  Vec v = Vec::Ones(a.rows()) / std::sqrt(static_cast<double>(a.rows()));
  double lambda = 0.0;
  for (int k = 0; k < iterations; ++k) {
    Vec w = a * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    lambda = v.dot(w);
    v = w / norm;
  }
  return lambda;
}

/// Smallest eigenvalue of a symmetric matrix: power iteration on sigma I - A
/// with sigma the Gershgorin bound.
inline double power_min_eigen(const Mat& a, int iterations = 20000) {
  double sigma = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) sigma = std::max(sigma, a.row(i).cwiseAbs().sum());
  const Mat shifted = sigma * Mat::Identity(a.rows(), a.cols()) - a;
  return sigma - power_max_eigen(shifted, iterations);
}

/// Spectral norm as sqrt of the top eigenvalue of A^T A.
inline double power_spectral_norm(const Mat& a) { return std::sqrt(power_max_eigen(a.transpose() * a)); }

/// Central difference of f at x.
inline double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double relative_error(double got, double want) {
  return std::abs(got - want) / std::max(1e-300, std::abs(want));
}

}  // namespace oracle
