#include "spthe/gain_laws.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "spthe/errors.hpp"

namespace spthe {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_upsilon(double upsilon) {
  if (!(upsilon > 0.0) || !std::isfinite(upsilon)) {
    throw Error(ErrorKind::Domain, "gain law: upsilon must be positive and finite");
  }
}

void require_gain(double mu, const char* what) {
  if (!std::isfinite(mu) || mu < 1.0) {
    std::ostringstream os;
    os << what << " must be finite and >= 1 (got " << mu << ")";
    throw Error(ErrorKind::Domain, os.str());
  }
}

// ell / (ell - 1) for the Power member.
double power_exponent(const GainLaw& law) { return law.ell() / (law.ell() - 1.0); }

void require_time_in_domain(const GainLaw& law, double c, double t) {
  if (!std::isfinite(t) || t < 0.0) {
    std::ostringstream os;
    os << "time " << t << " outside [0, T)";
    throw Error(ErrorKind::Domain, os.str());
  }
  const double escape = blow_up_time(law, c);
  if (std::isfinite(escape) && t >= escape * (1.0 - kBlowUpGuardFraction)) {
    std::ostringstream os;
    os.precision(17);
    os << "time " << t << " at or beyond the blow-up time " << escape;
    throw Error(ErrorKind::Domain, os.str());
  }
}

}  // namespace

GainLaw GainLaw::exponential(double upsilon) {
  require_upsilon(upsilon);
  return GainLaw(GainKind::Exponential, 1.0, upsilon);
}

GainLaw GainLaw::power(double ell, double upsilon) {
  if (std::isnan(ell) || ell < 1.0) {
    throw Error(ErrorKind::Domain, "gain law: ell must be >= 1 or inf");
  }
  if (ell == 1.0) return exponential(upsilon);
  if (std::isinf(ell)) return prescribed(upsilon);
  require_upsilon(upsilon);
  return GainLaw(GainKind::Power, ell, upsilon);
}

GainLaw GainLaw::prescribed(double upsilon) {
  require_upsilon(upsilon);
  return GainLaw(GainKind::Prescribed, kInf, upsilon);
}

GainLaw GainLaw::frozen() { return GainLaw(GainKind::Frozen, 0.0, 1.0); }

std::string GainLaw::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case GainKind::Exponential: os << "ell=1"; break;
    case GainKind::Power: os << "ell=" << ell_; break;
    case GainKind::Prescribed: os << "ell=inf"; break;
    case GainKind::Frozen: return "frozen";
  }
  os << " upsilon=" << upsilon_;
  return os.str();
}

GainLaw parse_gain_law(const std::string& ell, double upsilon) {
  if (ell == "frozen") return GainLaw::frozen();
  if (ell == "inf" || ell == "infinity") return GainLaw::prescribed(upsilon);
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(ell, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != ell.size() || used == 0) {
    throw Error(ErrorKind::Validation, "cannot parse gain exponent '" + ell + "'");
  }
  return GainLaw::power(value, upsilon);
}

double gain_rate(const GainLaw& law, double mu) {
  require_gain(mu, "gain");
  const double ups = law.upsilon();
  switch (law.kind()) {
    case GainKind::Exponential: return mu / ups;
    case GainKind::Power: {
      const double l = law.ell();
      return power_exponent(law) * std::exp((2.0 - 1.0 / l) * std::log(mu)) / ups;
    }
    case GainKind::Prescribed: return mu * mu / ups;
    case GainKind::Frozen: return 0.0;
  }
  return 0.0;
}

double blow_up_time(const GainLaw& law, double mu0) {
  require_gain(mu0, "initial gain");
  switch (law.kind()) {
    case GainKind::Exponential:
    case GainKind::Frozen: return kInf;
    case GainKind::Power: return law.upsilon() * std::pow(mu0, (1.0 - law.ell()) / law.ell());
    case GainKind::Prescribed: return law.upsilon() / mu0;
  }
  return kInf;
}

double gain_solution(const GainLaw& law, double mu0, double t) {
  require_time_in_domain(law, mu0, t);
  const double ups = law.upsilon();
  switch (law.kind()) {
    case GainKind::Exponential: return mu0 * std::exp(t / ups);
    case GainKind::Power: {
      // mu0 * (T / (T - t))^p evaluated in log space; p grows without bound as ell -> 1.
      const double escape = blow_up_time(law, mu0);
      return mu0 * std::exp(-power_exponent(law) * std::log1p(-t / escape));
    }
    case GainKind::Prescribed: return ups / (ups / mu0 - t);
    case GainKind::Frozen: return mu0;
  }
  return mu0;
}

double dilate(const GainLaw& law, double c, double t) {
  require_time_in_domain(law, c, t);
  const double ups = law.upsilon();
  switch (law.kind()) {
    case GainKind::Exponential: return ups * c * std::expm1(t / ups);
    case GainKind::Power: {
      const double l = law.ell();
      const double escape = blow_up_time(law, c);
      const double scale = (l - 1.0) * ups * std::pow(c, 1.0 / l);
      return scale * std::expm1(-std::log1p(-t / escape) / (l - 1.0));
    }
    case GainKind::Prescribed: return -ups * std::log1p(-c * t / ups);
    case GainKind::Frozen: return c * t;
  }
  return t;
}

double contract(const GainLaw& law, double c, double s) {
  require_gain(c, "dilation constant");
  if (std::isnan(s) || s < 0.0) {
    throw Error(ErrorKind::Domain, "dilated time must be >= 0");
  }
  const double ups = law.upsilon();
  switch (law.kind()) {
    case GainKind::Exponential: return ups * std::log1p(s / (ups * c));
    case GainKind::Power: {
      const double l = law.ell();
      const double escape = blow_up_time(law, c);
      const double scale = (l - 1.0) * ups * std::pow(c, 1.0 / l);
      return -escape * std::expm1(-(l - 1.0) * std::log1p(s / scale));
    }
    case GainKind::Prescribed: return -(ups / c) * std::expm1(-s / ups);
    case GainKind::Frozen: return s / c;
  }
  return s;
}

double dilated_gain_rate(const GainLaw& law, double mu_hat) {
  require_gain(mu_hat, "dilated gain");
  const double ups = law.upsilon();
  switch (law.kind()) {
    case GainKind::Exponential: return 1.0 / ups;
    case GainKind::Power: {
      const double l = law.ell();
      return power_exponent(law) * std::exp((1.0 - 1.0 / l) * std::log(mu_hat)) / ups;
    }
    case GainKind::Prescribed: return mu_hat / ups;
    case GainKind::Frozen: return 0.0;
  }
  return 0.0;
}

double mu0_for_prescribed_time(const GainLaw& law, double prescribed_time) {
  if (!(prescribed_time > 0.0) || !std::isfinite(prescribed_time)) {
    throw Error(ErrorKind::Validation, "prescribed time must be positive and finite");
  }
  double mu0 = 0.0;
  switch (law.kind()) {
    case GainKind::Prescribed: mu0 = law.upsilon() / prescribed_time; break;
    case GainKind::Power:
      mu0 = std::pow(prescribed_time / law.upsilon(), law.ell() / (1.0 - law.ell()));
      break;
    default:
      throw Error(ErrorKind::Validation, "only blow-up gains (ell > 1) have a prescribed time");
  }
  if (mu0 < 1.0 - 1e-12) {
    std::ostringstream os;
    os << "prescribed time " << prescribed_time << " requires mu0 = " << mu0
       << " < 1; choose T <= upsilon";
    throw Error(ErrorKind::Validation, os.str());
  }
  return std::max(mu0, 1.0);
}

}  // namespace spthe
