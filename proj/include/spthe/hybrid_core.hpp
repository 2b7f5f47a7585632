#pragma once

#include <compare>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "spthe/gain_laws.hpp"
#include "spthe/linalg.hpp"

namespace spthe {

using State = Vector;

struct HybridTime {
  double t = 0.0;
  int j = 0;

  friend auto operator<=>(const HybridTime&, const HybridTime&) = default;
};

/// Single-valued selection of the data (C, F, D, G) of a hybrid system.
///
/// The flow variable `t` passed to every callback is the integration variable
/// of the run (real time or dilated time, depending on who built the system).
/// `j` is the current jump count, which lets policy-driven jump triggers index
/// into a schedule.
struct HybridSystem {
  std::size_t dimension = 0;
  std::function<bool(double t, const State&)> flow_in;
  std::function<State(double t, const State&)> flow_rhs;
  std::function<bool(double t, int j, const State&)> jump_enabled;
  std::function<State(double t, int j, const State&)> jump_map;
  /// Optional projection applied to every flow step before the set tests
  /// (budget clipping).
  std::function<void(State&)> project;
  std::vector<std::string> labels;
};

enum class Termination { HorizonReached, BlowUpGuard, JumpBudget, DeadSolution, Converged };

std::string to_string(Termination termination);

struct ArcSample {
  double t = 0.0;
  State x;
};

struct ArcSegment {
  int j = 0;
  std::vector<ArcSample> samples;
};

struct HybridArc {
  std::vector<ArcSegment> segments;
  Termination termination = Termination::HorizonReached;

  int jump_count() const { return segments.empty() ? 0 : static_cast<int>(segments.size()) - 1; }
  /// Flow time at which each jump happened, in order.
  std::vector<double> jump_times() const;
  const ArcSample& front() const;
  const ArcSample& back() const;
  std::size_t sample_count() const;
  /// Segments are consecutive in j, t is strictly increasing inside each
  /// segment and continuous across jumps.
  bool valid_domain(std::string* why = nullptr) const;
};

struct StopConditions {
  double t_max = std::numeric_limits<double>::infinity();
  int j_max = 100000;
  /// Escape time of the gain; the run is cut at (1 - eps_stop) * blow_up_time.
  std::optional<double> blow_up_time;
  double eps_stop = 0.01;
  std::function<double(const State&)> convergence_metric;
  double converge_tol = 0.0;
};

struct IntegrateOptions {
  double dt = 1e-3;
  double event_tol = 1e-10;
  StopConditions stop;
};

/// Classical RK4 between jumps; jump instants and flow-set exits are
/// localised by bisection on the step length.
HybridArc integrate(const HybridSystem& sys, const State& z0, const IntegrateOptions& opts);

enum class TimeDirection { ToDilated, ToReal };

/// Re-indexes every sample's flow time through dilate/contract; j and the
/// state values are untouched.
HybridArc map_arc_time(const HybridArc& arc, const GainLaw& law, double mu0, TimeDirection direction);

/// Linear interpolation inside segment j.
State sample_at(const HybridArc& arc, double t, int j);

/// Largest max-norm gap over the first `components` state entries, evaluating
/// `reference` at every sample of `other`. Samples up to `time_slack` past the
/// ends of a reference segment are clamped to it. Throws OutOfDomain when the
/// arcs have different jump counts or a sample falls outside the slack.
double arc_sup_distance(const HybridArc& reference, const HybridArc& other, std::size_t components,
                        double time_slack);

/// CSV: t,j,s,<labels...>. `s` is the dilated time when `law` is given, else empty.
void write_trace_csv(std::ostream& out, const HybridArc& arc, const std::vector<std::string>& labels,
                     const std::optional<GainLaw>& law = std::nullopt, double mu0 = 1.0);

}  // namespace spthe
