#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "spthe/dataset_store.hpp"
#include "spthe/gain_laws.hpp"
#include "spthe/hybrid_core.hpp"
#include "spthe/signal_model.hpp"
#include "spthe/switching.hpp"

namespace spthe {

struct EstimatorConfig {
  double k_t = 1.0;
  double k_r = 1.0;
  GainLaw law = GainLaw::prescribed(8.0);
  double mu0 = 1.0;
  AutomatonParams automaton;  // automaton.modes must equal registry.partition()
  DatasetRegistry registry;
  SignalModel model;
  Vector theta0;

  /// Throws Validation / DimensionMismatch, and EmptySufficientSet when no
  /// dataset is sufficiently rich.
  void validate() const;
};

/// Closed-loop state layout: theta (n), q, rho_d, rho_a, tau, mu.
struct StateLayout {
  std::size_t n = 0;

  std::size_t q() const { return n; }
  std::size_t rho_d() const { return n + 1; }
  std::size_t rho_a() const { return n + 2; }
  std::size_t tau() const { return n + 3; }
  std::size_t mu() const { return n + 4; }
  std::size_t size() const { return n + 5; }
  std::vector<std::string> labels() const;
};

/// -k_t chi(theta, tau) - k_r (Phi_q theta - Psi_q).
Vector omega(const EstimatorConfig& cfg, const Vector& theta, double tau, const Dataset& ds);

/// Error vector field of the surrogate system. `u2` holds one entry per
/// recorded sample of dataset q (ignored for corrupted modes); `u3` has
/// dimension n (ignored for SR/IR modes).
Vector error_rhs(const EstimatorConfig& cfg, const Vector& vartheta, double tau, int q, double u1,
                 const Vector& u2, const Vector& u3);

/// Real-time closed loop; jumps follow `schedule` (real jump times).
HybridSystem build_closed_loop(const EstimatorConfig& cfg, JumpSchedule schedule);
/// Same loop in dilated time; the tau slot carries real time and the mu slot
/// the dilated gain. Jumps follow `schedule` (dilated jump times).
HybridSystem build_target_loop(const EstimatorConfig& cfg, JumpSchedule schedule);

/// theta0, initial mode, full budgets, tau = 0, mu = mu0.
State initial_state(const EstimatorConfig& cfg, int initial_mode);

enum class RunMode { Direct, Dilated };

struct RunOptions {
  RunMode mode = RunMode::Dilated;
  double dt = 1e-3;  // in the integration variable
  double event_tol = 1e-10;
  double eps_stop = 0.01;
  /// Real-time horizon. Required for laws without escape time; for the others
  /// the run ends at min(horizon, (1 - eps_stop) T).
  std::optional<double> horizon;
};

struct RunResult {
  HybridArc arc;                          // real time
  std::optional<HybridArc> dilated_arc;   // dilated-mode runs only
  GeneratedSwitching switching;           // requested signal
  SwitchingSignal realized;               // read back from the arc (real time)
  ConstraintReport dadt;
  ConstraintReport daat;
  double t_end = 0.0;
  double s_end = 0.0;
};

/// Real-time end of a run under `opts`.
double run_end_time(const EstimatorConfig& cfg, const RunOptions& opts);

RunResult run(const EstimatorConfig& cfg, const SwitchingPolicy& policy, std::uint64_t seed,
              const RunOptions& opts);

/// |theta - theta*| at every sample of a closed-loop arc, in arc order.
std::vector<double> error_trace(const EstimatorConfig& cfg, const HybridArc& arc);
double final_error(const EstimatorConfig& cfg, const HybridArc& arc);

struct TheoremConstants {
  double kappa_lower = 0.0;
  double varpi = 0.0;
  double zeta = 0.0;
  double lambda = 0.0;
  double c_lower = 0.5;
  double c_upper = 0.0;
  double eta_bar = 0.0;
  double gamma = 0.0;
  double kappa1 = 0.0;
  double kappa2 = 0.0;
  double kappa3 = 0.0;
  /// lambda > 0, i.e. tau_a > 1 + varpi / (k_r alpha_min).
  bool certified = false;
};

/// Throws EmptySufficientSet. A non-positive lambda is reported through
/// `certified`, with kappa1..kappa3 left at zero.
TheoremConstants theorem_constants(const EstimatorConfig& cfg);

/// Aggregate input magnitude sqrt(d_bar^2 + |u2|^2 + |u3|^2): declared
/// disturbance bound, stacked recording noise over SR/IR datasets, and the
/// largest corruption offset.
double input_bound(const EstimatorConfig& cfg);

using BoundCurve = std::function<double(double t, int j)>;

/// kappa1 |vartheta0| exp(-kappa2 (D(t) + j)) + kappa3 u_sup. Throws
/// NegativeLambda when the constants are not certified.
BoundCurve bound_curve(const TheoremConstants& constants, const GainLaw& law, double mu0,
                       double vartheta0_norm, double u_sup);

struct LyapunovSample {
  double t = 0.0;
  int j = 0;
  double w = 0.0;
  double v = 0.0;
};

/// W = |theta - theta*|^2 / 2 and V = W exp((kappa_lower + varpi) rho_a).
std::vector<LyapunovSample> lyapunov_diagnostics(const EstimatorConfig& cfg, const HybridArc& arc);

/// Columns t,j,s,theta_1..theta_n,err,mu,q,rho_d,rho_a,W,V,bound. The bound
/// column is left empty when `bound` is not given.
void write_diagnostics_csv(std::ostream& out, const EstimatorConfig& cfg, const HybridArc& arc,
                           const std::optional<BoundCurve>& bound);

}  // namespace spthe
