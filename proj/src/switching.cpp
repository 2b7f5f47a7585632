#include "spthe/switching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "spthe/errors.hpp"

namespace spthe {

void AutomatonParams::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorKind::Validation, "automaton: " + what); };
  if (!(tau_d > 0.0) || !std::isfinite(tau_d)) bad("tau_d must be positive");
  if (!(tau_a > 1.0) || !std::isfinite(tau_a)) bad("tau_a must exceed 1");
  if (!(n0 >= 1.0) || !std::isfinite(n0)) bad("N0 must be >= 1");
  if (!(t0 > 0.0) || !std::isfinite(t0)) bad("T0 must be positive");
  if (all_modes().empty()) throw Error(ErrorKind::EmptyModeSet, "automaton: no modes");
}

std::set<int> AutomatonParams::all_modes() const {
  std::set<int> out = modes.sufficient;
  out.insert(modes.insufficient.begin(), modes.insufficient.end());
  out.insert(modes.corrupted.begin(), modes.corrupted.end());
  return out;
}

bool AutomatonParams::inactive(int q) const {
  return modes.insufficient.count(q) != 0 || modes.corrupted.count(q) != 0;
}

std::set<int> AutomatonParams::inactive_modes() const {
  std::set<int> out = modes.insufficient;
  out.insert(modes.corrupted.begin(), modes.corrupted.end());
  return out;
}

int SwitchingSignal::mode_at(double t) const {
  int q = initial_mode;
  for (const auto& jump : jumps) {
    if (jump.t > t) break;
    q = jump.mode;
  }
  return q;
}

std::vector<double> SwitchingSignal::jump_times() const {
  std::vector<double> out;
  out.reserve(jumps.size());
  for (const auto& jump : jumps) out.push_back(jump.t);
  return out;
}

// ---- generation ------------------------------------------------------------

namespace {

// Budget margin kept by the random generator so that numerically integrated
// timers never graze the edges of the flow and jump sets.
constexpr double kGeneratorMargin = 1e-6;

struct Budget {
  const AutomatonParams& params;
  int q;
  double rho_d;
  double rho_a;

  void advance(double dwell) {
    rho_d = std::min(params.n0, rho_d + dwell / params.tau_d);
    if (params.inactive(q)) {
      rho_a -= dwell * (1.0 - 1.0 / params.tau_a);
    } else {
      rho_a = std::min(params.t0, rho_a + dwell / params.tau_a);
    }
  }

  // Longest admissible stay in an inactive mode given the current rho_a.
  double inactive_capacity(double rho_a_now, double margin) const {
    return std::max(0.0, (rho_a_now - margin) / (1.0 - 1.0 / params.tau_a));
  }
};

void require_mode(const AutomatonParams& params, int q) {
  if (params.all_modes().count(q) == 0) {
    throw Error(ErrorKind::PolicyInfeasible, "policy refers to unknown mode " + std::to_string(q));
  }
}

SwitchingSignal run_scripted(const AutomatonParams& params, const ScriptedPolicy& policy, double s_max) {
  if (policy.segments.empty()) throw Error(ErrorKind::PolicyInfeasible, "scripted policy has no segments");
  for (const auto& [dwell, mode] : policy.segments) {
    if (!(dwell >= 0.0) || !std::isfinite(dwell)) {
      throw Error(ErrorKind::PolicyInfeasible, "scripted dwell must be finite and >= 0");
    }
    require_mode(params, mode);
  }

  SwitchingSignal sig;
  sig.initial_mode = policy.segments.front().second;
  sig.horizon = s_max;
  Budget budget{params, sig.initial_mode, params.n0, params.t0};
  double s = 0.0;
  std::size_t idx = 0;
  const std::size_t count = policy.segments.size();
  constexpr std::size_t kMaxJumps = 1000000;

  auto check_inactive_stay = [&](double dwell) {
    if (params.inactive(budget.q) && dwell * (1.0 - 1.0 / params.tau_a) > budget.rho_a + kSwitchingTolerance) {
      std::ostringstream os;
      os << "dwell " << dwell << " in inactive mode " << budget.q << " at s=" << s
         << " exceeds the activation budget rho_a=" << budget.rho_a;
      throw Error(ErrorKind::PolicyInfeasible, os.str());
    }
  };

  while (true) {
    const bool final_hold = !policy.repeat && idx + 1 == count;
    const double dwell = policy.segments[idx].first;
    if (final_hold || s + dwell >= s_max) {
      check_inactive_stay(s_max - s);
      break;
    }
    check_inactive_stay(dwell);
    budget.advance(dwell);
    s += dwell;
    if (budget.rho_d < 1.0 - kSwitchingTolerance) {
      std::ostringstream os;
      os << "jump requested at s=" << s << " with dwell budget rho_d=" << budget.rho_d << " < 1";
      throw Error(ErrorKind::PolicyInfeasible, os.str());
    }
    const std::size_t next = (idx + 1) % count;
    const int mode = policy.segments[next].second;
    if (mode == budget.q) {
      throw Error(ErrorKind::PolicyInfeasible, "scripted policy jumps from mode " + std::to_string(mode) + " to itself");
    }
    budget.rho_d -= 1.0;
    budget.q = mode;
    sig.jumps.push_back({s, mode});
    idx = next;
    if (sig.jumps.size() > kMaxJumps) throw Error(ErrorKind::PolicyInfeasible, "scripted policy never reaches s_max");
  }
  return sig;
}

SwitchingSignal run_random(const AutomatonParams& params, const RandomPolicy& policy, std::uint64_t seed,
                           double s_max) {
  if (!(policy.min_dwell > 0.0) || !(policy.max_dwell >= policy.min_dwell) || !std::isfinite(policy.max_dwell)) {
    throw Error(ErrorKind::PolicyInfeasible, "random policy needs 0 < min_dwell <= max_dwell");
  }
  std::map<int, double> weights = policy.weights;
  if (weights.empty()) {
    for (int q : params.all_modes()) weights[q] = 1.0;
  }
  for (const auto& [q, w] : weights) {
    require_mode(params, q);
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error(ErrorKind::PolicyInfeasible, "mode weights must be >= 0");
  }

  SwitchingSignal sig;
  sig.initial_mode = policy.initial_mode.value_or(*params.modes.sufficient.begin());
  require_mode(params, sig.initial_mode);
  sig.horizon = s_max;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dwell_dist(policy.min_dwell, policy.max_dwell);
  Budget budget{params, sig.initial_mode, params.n0, params.t0};
  const double leak = 1.0 - 1.0 / params.tau_a;
  if (params.inactive(sig.initial_mode) && budget.inactive_capacity(budget.rho_a, kGeneratorMargin) <
                                               (1.0 + kGeneratorMargin - budget.rho_d) * params.tau_d) {
    throw Error(ErrorKind::PolicyInfeasible, "initial inactive mode cannot be left within the activation budget");
  }
  double s = 0.0;

  while (true) {
    double dwell = dwell_dist(rng);
    const double refill = std::max(0.0, (1.0 + kGeneratorMargin - budget.rho_d) * params.tau_d);
    const bool inactive = params.inactive(budget.q);
    if (inactive) {
      const double cap = budget.inactive_capacity(budget.rho_a, kGeneratorMargin);
      dwell = std::max(std::min(dwell, cap), refill);
      if (s + dwell >= s_max && (s_max - s) * leak <= budget.rho_a - kGeneratorMargin) break;
      if (dwell > cap + kSwitchingTolerance) {
        throw Error(ErrorKind::PolicyInfeasible, "inactive mode entered without enough activation budget");
      }
    } else {
      dwell = std::max(dwell, refill);
      if (s + dwell >= s_max) break;
    }
    budget.advance(dwell);
    s += dwell;

    // Admissible successors: active modes always; inactive ones only if the
    // dwell-time budget refills before the activation budget runs out.
    std::vector<int> candidates;
    std::vector<double> cand_weights;
    for (const auto& [m, w] : weights) {
      if (m == budget.q || w <= 0.0) continue;
      if (params.inactive(m)) {
        const double needed = std::max(0.0, (1.0 + kGeneratorMargin - (budget.rho_d - 1.0)) * params.tau_d);
        if (needed > budget.inactive_capacity(budget.rho_a, kGeneratorMargin)) continue;
      }
      candidates.push_back(m);
      cand_weights.push_back(w);
    }
    if (candidates.empty()) {
      if (!inactive) continue;  // stay and let the budgets refill
      for (int m : params.modes.sufficient) {
        candidates.push_back(m);
        cand_weights.push_back(1.0);
      }
    }
    std::discrete_distribution<std::size_t> pick(cand_weights.begin(), cand_weights.end());
    const int mode = candidates[pick(rng)];
    budget.rho_d -= 1.0;
    budget.q = mode;
    sig.jumps.push_back({s, mode});
  }
  return sig;
}

}  // namespace

GeneratedSwitching generate_switching(const AutomatonParams& params, const GainLaw& law, double mu0,
                                      const SwitchingPolicy& policy, std::uint64_t seed, double s_max) {
  params.validate();
  if (params.modes.sufficient.empty()) {
    throw Error(ErrorKind::EmptySufficientSet, "switching: no sufficiently rich mode available");
  }
  if (!(s_max >= 0.0) || !std::isfinite(s_max)) {
    throw Error(ErrorKind::Validation, "switching: dilated horizon must be finite and >= 0");
  }

  GeneratedSwitching out;
  out.dilated_signal = std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, ScriptedPolicy>) return run_scripted(params, p, s_max);
        else return run_random(params, p, seed, s_max);
      },
      policy);

  out.signal.initial_mode = out.dilated_signal.initial_mode;
  out.signal.horizon = contract(law, mu0, s_max);
  for (const auto& jump : out.dilated_signal.jumps) {
    out.signal.jumps.push_back({contract(law, mu0, jump.t), jump.mode});
  }
  return out;
}

// ---- verification ----------------------------------------------------------

namespace {

void require_ordered(const SwitchingSignal& sig) {
  double previous = 0.0;
  for (const auto& jump : sig.jumps) {
    if (jump.t < previous || !std::isfinite(jump.t)) {
      throw Error(ErrorKind::Validation, "switching signal: jump times must be finite and nondecreasing from 0");
    }
    previous = jump.t;
  }
  if (sig.horizon < previous) throw Error(ErrorKind::Validation, "switching signal: jump after the horizon");
}

// clock[k] is the (possibly dilated) time of jump k.
ConstraintReport adt_core(const std::vector<double>& clock, const std::vector<double>& reported, double tau_d,
                          double n0, std::string name) {
  ConstraintReport report{std::move(name), true, n0, std::nullopt};
  for (std::size_t a = 0; a < clock.size(); ++a) {
    for (std::size_t b = a; b < clock.size(); ++b) {
      const double count = static_cast<double>(b - a + 1);
      const double slack = (clock[b] - clock[a]) / tau_d + n0 - count;
      if (slack < report.worst_margin) {
        report.worst_margin = slack;
        report.witness = std::make_pair(reported[a], reported[b]);
      }
    }
  }
  report.ok = report.worst_margin >= -kSwitchingTolerance;
  return report;
}

// breaks: 0, jump times, horizon in the checking clock; inactive[k] tells
// whether the interval [breaks[k], breaks[k+1]] runs an inactive mode.
ConstraintReport aat_core(const std::vector<double>& breaks, const std::vector<double>& reported,
                          const std::vector<bool>& inactive, double tau_a, double t0, std::string name) {
  std::vector<double> active_time(breaks.size(), 0.0);
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    active_time[k + 1] = active_time[k] + (inactive[k] ? breaks[k + 1] - breaks[k] : 0.0);
  }
  ConstraintReport report{std::move(name), true, t0, std::nullopt};
  for (std::size_t p = 0; p < breaks.size(); ++p) {
    for (std::size_t r = p + 1; r < breaks.size(); ++r) {
      const double slack = (breaks[r] - breaks[p]) / tau_a + t0 - (active_time[r] - active_time[p]);
      if (slack < report.worst_margin) {
        report.worst_margin = slack;
        report.witness = std::make_pair(reported[p], reported[r]);
      }
    }
  }
  report.ok = report.worst_margin >= -kSwitchingTolerance;
  return report;
}

double checked_dilate(const GainLaw& law, double mu0, double t) {
  try {
    return dilate(law, mu0, t);
  } catch (const Error& e) {
    throw Error(ErrorKind::Domain, std::string("switching verifier: ") + e.what());
  }
}

void build_breaks(const SwitchingSignal& sig, const std::set<int>& inactive_modes, std::vector<double>& times,
                  std::vector<bool>& inactive) {
  times.push_back(0.0);
  int q = sig.initial_mode;
  inactive.push_back(inactive_modes.count(q) != 0);
  for (const auto& jump : sig.jumps) {
    times.push_back(jump.t);
    inactive.push_back(inactive_modes.count(jump.mode) != 0);
  }
  times.push_back(sig.horizon);
}

}  // namespace

ConstraintReport verify_adt(const SwitchingSignal& sig, double tau_d, double n0) {
  require_ordered(sig);
  const auto times = sig.jump_times();
  return adt_core(times, times, tau_d, n0, "ADT");
}

ConstraintReport verify_dadt(const SwitchingSignal& sig, const GainLaw& law, double mu0, double tau_d,
                             double n0) {
  require_ordered(sig);
  const auto times = sig.jump_times();
  std::vector<double> clock;
  clock.reserve(times.size());
  for (double t : times) clock.push_back(checked_dilate(law, mu0, t));
  return adt_core(clock, times, tau_d, n0, "D-ADT");
}

ConstraintReport verify_aat(const SwitchingSignal& sig, double tau_a, double t0,
                            const std::set<int>& inactive_modes) {
  require_ordered(sig);
  std::vector<double> times;
  std::vector<bool> inactive;
  build_breaks(sig, inactive_modes, times, inactive);
  return aat_core(times, times, inactive, tau_a, t0, "AAT");
}

ConstraintReport verify_daat(const SwitchingSignal& sig, const GainLaw& law, double mu0, double tau_a,
                             double t0, const std::set<int>& inactive_modes) {
  require_ordered(sig);
  std::vector<double> times;
  std::vector<bool> inactive;
  build_breaks(sig, inactive_modes, times, inactive);
  // Integral of mu over an interval equals the increment of D across it.
  std::vector<double> clock;
  clock.reserve(times.size());
  for (double t : times) clock.push_back(checked_dilate(law, mu0, t));
  return aat_core(clock, times, inactive, tau_a, t0, "D-AAT");
}

// ---- automaton as a hybrid system -------------------------------------------

std::pair<double, double> automaton_rates(const AutomatonParams& params, const AutomatonState& y,
                                          bool saturate) {
  const double rate_d = saturate && y.rho_d >= params.n0 ? 0.0 : 1.0 / params.tau_d;
  double rate_a = 0.0;
  if (params.inactive(y.q)) rate_a = 1.0 / params.tau_a - 1.0;
  else if (!saturate || y.rho_a < params.t0) rate_a = 1.0 / params.tau_a;
  return {rate_d, rate_a};
}

bool automaton_in_flow_set(const AutomatonParams& params, const AutomatonState& y) {
  const double tol = kSwitchingTolerance;
  return params.all_modes().count(y.q) != 0 && y.rho_d >= -tol && y.rho_d <= params.n0 + tol &&
         y.rho_a >= -tol && y.rho_a <= params.t0 + tol;
}

bool automaton_in_jump_set(const AutomatonParams& params, const AutomatonState& y) {
  const double tol = kSwitchingTolerance;
  return params.all_modes().count(y.q) != 0 && y.rho_d >= 1.0 - tol && y.rho_d <= params.n0 + tol &&
         y.rho_a >= -tol && y.rho_a <= params.t0 + tol;
}

void clip_automaton(const AutomatonParams& params, AutomatonState& y) {
  y.rho_d = std::clamp(y.rho_d, 0.0, params.n0);
  y.rho_a = std::min(y.rho_a, params.t0);
}

namespace {
AutomatonState read_automaton(const State& z, std::size_t offset) {
  return {static_cast<int>(std::lround(z(static_cast<Eigen::Index>(offset)))),
          z(static_cast<Eigen::Index>(offset + 1)), z(static_cast<Eigen::Index>(offset + 2))};
}
}  // namespace

HybridSystem automaton_hds(const AutomatonParams& params, const GainLaw& law, JumpSchedule schedule,
                           TimeScale scale) {
  params.validate();
  HybridSystem sys;
  sys.dimension = 4;
  sys.labels = {"q", "rho_d", "rho_a", "mu"};
  sys.flow_in = [params](double, const State& z) {
    return automaton_in_flow_set(params, read_automaton(z, 0)) && z(3) >= 1.0;
  };
  sys.flow_rhs = [params, law, scale](double, const State& z) {
    const auto [rate_d, rate_a] = automaton_rates(params, read_automaton(z, 0), false);
    const double mu = z(3);
    const double gain = scale == TimeScale::Real ? mu : 1.0;
    State dz(4);
    dz << 0.0, gain * rate_d, gain * rate_a,
        scale == TimeScale::Real ? gain_rate(law, mu) : dilated_gain_rate(law, mu);
    return dz;
  };
  sys.jump_enabled = [params, schedule](double t, int j, const State& z) {
    return schedule.due(t, j) && automaton_in_jump_set(params, read_automaton(z, 0));
  };
  sys.jump_map = [schedule](double, int j, const State& z) {
    State next = z;
    const int mode = schedule.mode(j);
    if (mode == static_cast<int>(std::lround(z(0)))) {
      throw Error(ErrorKind::Integration, "jump map: next mode equals the current mode");
    }
    next(0) = mode;
    next(1) -= 1.0;
    return next;
  };
  sys.project = [params](State& z) {
    AutomatonState y = read_automaton(z, 0);
    clip_automaton(params, y);
    z(1) = y.rho_d;
    z(2) = y.rho_a;
  };
  return sys;
}

SwitchingSignal switching_from_arc(const HybridArc& arc, std::size_t q_index) {
  const auto qi = static_cast<Eigen::Index>(q_index);
  SwitchingSignal sig;
  sig.initial_mode = static_cast<int>(std::lround(arc.front().x(qi)));
  for (std::size_t k = 1; k < arc.segments.size(); ++k) {
    const auto& first = arc.segments[k].samples.front();
    sig.jumps.push_back({first.t, static_cast<int>(std::lround(first.x(qi)))});
  }
  sig.horizon = arc.back().t;
  return sig;
}

}  // namespace spthe
