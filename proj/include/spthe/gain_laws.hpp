#pragma once

#include <string>

namespace spthe {

/// Family member selector for the dynamic gain mu.
///
/// Exponential is the ell = 1 member (hyperexponential convergence, no escape
/// time). Power covers every finite ell > 1 and Prescribed is the ell = inf
/// limit; both escape to infinity in finite time. Frozen keeps mu constant and
/// expresses the standard concurrent-learning baseline inside the same
/// pipeline.
enum class GainKind { Exponential, Power, Prescribed, Frozen };

class GainLaw {
 public:
  static GainLaw exponential(double upsilon);
  /// ell == 1 collapses to exponential(); ell == +inf to prescribed().
  static GainLaw power(double ell, double upsilon);
  static GainLaw prescribed(double upsilon);
  static GainLaw frozen();

  GainKind kind() const { return kind_; }
  /// 1 for Exponential, +inf for Prescribed, 0 for Frozen.
  double ell() const { return ell_; }
  double upsilon() const { return upsilon_; }
  bool has_blow_up() const { return kind_ == GainKind::Power || kind_ == GainKind::Prescribed; }

  std::string describe() const;

  friend bool operator==(const GainLaw&, const GainLaw&) = default;

 private:
  GainLaw(GainKind kind, double ell, double upsilon) : kind_(kind), ell_(ell), upsilon_(upsilon) {}

  GainKind kind_;
  double ell_;
  double upsilon_;
};

/// Parses "1", "2.5", "inf" or "frozen" together with upsilon.
GainLaw parse_gain_law(const std::string& ell, double upsilon);

// Points closer than this fraction of the escape time are rejected.
inline constexpr double kBlowUpGuardFraction = 1e-12;

double gain_rate(const GainLaw& law, double mu);
double gain_solution(const GainLaw& law, double mu0, double t);
double blow_up_time(const GainLaw& law, double mu0);

/// Real time t -> dilated time s. dD/dt equals the gain started at c.
double dilate(const GainLaw& law, double c, double t);
/// Dilated time s -> real time t; inverse of dilate.
double contract(const GainLaw& law, double c, double s);

/// Right-hand side of the gain in dilated time: F(mu_hat) / mu_hat.
double dilated_gain_rate(const GainLaw& law, double mu_hat);

/// Initial gain that places the escape time at `prescribed_time`.
double mu0_for_prescribed_time(const GainLaw& law, double prescribed_time);

}  // namespace spthe
