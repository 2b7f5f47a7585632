#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "spthe/dataset_store.hpp"
#include "spthe/gain_laws.hpp"
#include "spthe/hybrid_core.hpp"

namespace spthe {

/// Slack down to -kSwitchingTolerance is accepted by the verifiers and by the
/// automaton's set-membership tests.
inline constexpr double kSwitchingTolerance = 1e-9;

struct AutomatonParams {
  double tau_d = 2.0;  // dwell-rate parameter
  double tau_a = 25.0; // activation-rate parameter, > 1
  double n0 = 2.0;     // jump budget, >= 1
  double t0 = 1.0;     // activation budget, > 0
  Partition modes;

  void validate() const;
  std::set<int> all_modes() const;
  /// Insufficiently rich or corrupted.
  bool inactive(int q) const;
  std::set<int> inactive_modes() const;
};

struct AutomatonState {
  int q = 1;
  double rho_d = 0.0;
  double rho_a = 0.0;
};

struct Jump {
  double t = 0.0;
  int mode = 0;
};

/// Piecewise-constant mode signal. Jump times are nondecreasing (several
/// jumps may share an instant) and below the horizon.
struct SwitchingSignal {
  int initial_mode = 1;
  std::vector<Jump> jumps;
  double horizon = 0.0;

  int mode_at(double t) const;  // mode after all jumps at or before t
  std::vector<double> jump_times() const;
};

/// (dilated dwell, mode) pairs. The first entry's mode is the initial mode;
/// each entry holds its mode for its dwell, then jumps to the next entry. With
/// `repeat` the list cycles; otherwise the final mode holds until the horizon.
struct ScriptedPolicy {
  std::vector<std::pair<double, int>> segments;
  bool repeat = false;
};

/// Dwell drawn uniformly from [min_dwell, max_dwell] (dilated time), next mode
/// drawn with the given weights among admissible modes.
struct RandomPolicy {
  double min_dwell = 0.5;
  double max_dwell = 4.0;
  std::map<int, double> weights;  // empty: uniform over all modes
  std::optional<int> initial_mode;
};

using SwitchingPolicy = std::variant<ScriptedPolicy, RandomPolicy>;

struct GeneratedSwitching {
  SwitchingSignal signal;          // real time
  SwitchingSignal dilated_signal;  // same signal in dilated time
};

/// Builds the signal in dilated time with explicit ADT/AAT budget bookkeeping
/// and maps every jump back through contract().
GeneratedSwitching generate_switching(const AutomatonParams& params, const GainLaw& law, double mu0,
                                      const SwitchingPolicy& policy, std::uint64_t seed, double s_max);

struct ConstraintReport {
  std::string name;
  bool ok = true;
  double worst_margin = 0.0;
  /// Interval [t1, t2] achieving the worst margin (violating when !ok).
  std::optional<std::pair<double, double>> witness;
};

/// Dilated average dwell-time: j2 - j1 <= (D(t2) - D(t1)) / tau_d + N0.
ConstraintReport verify_dadt(const SwitchingSignal& sig, const GainLaw& law, double mu0, double tau_d,
                             double n0);
/// Dilated average activation time over the inactive (IR or corrupted) modes.
ConstraintReport verify_daat(const SwitchingSignal& sig, const GainLaw& law, double mu0, double tau_a,
                             double t0, const std::set<int>& inactive_modes);

/// Undilated checks on a signal whose jump times are already dilated.
ConstraintReport verify_adt(const SwitchingSignal& sig, double tau_d, double n0);
ConstraintReport verify_aat(const SwitchingSignal& sig, double tau_a, double t0,
                            const std::set<int>& inactive_modes);

enum class TimeScale { Real, Dilated };

/// Jump trigger: the k-th jump fires once the flow variable reaches
/// `jumps[k].t` and the automaton's jump set allows it.
struct JumpSchedule {
  std::vector<Jump> jumps;

  bool due(double t, int j) const {
    return j < static_cast<int>(jumps.size()) && t >= jumps[static_cast<std::size_t>(j)].t;
  }
  int mode(int j) const { return jumps.at(static_cast<std::size_t>(j)).mode; }
};

/// Flow rates of (rho_d, rho_a) under the maximal-rate selection, before
/// scaling by mu. With `saturate` a full budget has rate 0; without it the
/// caps are left to clip_automaton, which is how the hybrid systems below
/// integrate them (a rate switch inside an RK4 step loses accuracy).
std::pair<double, double> automaton_rates(const AutomatonParams& params, const AutomatonState& y,
                                          bool saturate = true);
bool automaton_in_flow_set(const AutomatonParams& params, const AutomatonState& y);
bool automaton_in_jump_set(const AutomatonParams& params, const AutomatonState& y);
void clip_automaton(const AutomatonParams& params, AutomatonState& y);

/// Data-querying automaton with state (q, rho_d, rho_a, mu). In the Real scale
/// the timers run at mu times their rates and mu follows the gain ODE; in the
/// Dilated scale the timers are unscaled and mu follows the dilated gain ODE.
HybridSystem automaton_hds(const AutomatonParams& params, const GainLaw& law, JumpSchedule schedule,
                           TimeScale scale);

/// Switching signal carried by the mode component `q_index` of an arc.
SwitchingSignal switching_from_arc(const HybridArc& arc, std::size_t q_index);

}  // namespace spthe
