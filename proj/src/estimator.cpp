#include "spthe/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <ostream>

#include "spthe/errors.hpp"

namespace spthe {

void EstimatorConfig::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorKind::Validation, "estimator config: " + what); };
  if (!(k_t > 0.0) || !std::isfinite(k_t)) bad("k_t must be positive");
  if (!(k_r > 0.0) || !std::isfinite(k_r)) bad("k_r must be positive");
  if (!(mu0 >= 1.0) || !std::isfinite(mu0)) bad("mu0 must be finite and >= 1");
  if (registry.empty()) bad("no datasets");
  const std::size_t n = model.dimension();
  if (n == 0 || !model.regressor.phi || !model.system.disturbance) bad("signal model is incomplete");
  if (registry.dimension() != n || static_cast<std::size_t>(model.system.theta_star.size()) != n ||
      static_cast<std::size_t>(theta0.size()) != n) {
    throw Error(ErrorKind::DimensionMismatch, "estimator config: datasets, model and theta0 disagree in dimension");
  }
  if (!theta0.allFinite()) bad("theta0 must be finite");
  automaton.validate();
  if (!(automaton.modes == registry.partition())) bad("automaton modes differ from the dataset partition");
  if (registry.partition().sufficient.empty()) {
    throw Error(ErrorKind::EmptySufficientSet,
                "condition (a) violated: at least one sufficiently rich dataset is required");
  }
}

std::vector<std::string> StateLayout::labels() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("theta_" + std::to_string(i + 1));
  for (const char* l : {"q", "rho_d", "rho_a", "tau", "mu"}) out.emplace_back(l);
  return out;
}

Vector omega(const EstimatorConfig& cfg, const Vector& theta, double tau, const Dataset& ds) {
  if (static_cast<std::size_t>(theta.size()) != ds.dimension()) {
    throw Error(ErrorKind::DimensionMismatch, "omega: theta and dataset differ in dimension");
  }
  return -cfg.k_t * chi(cfg.model.system, cfg.model.regressor, theta, tau) - cfg.k_r * residual(ds, theta);
}

Vector error_rhs(const EstimatorConfig& cfg, const Vector& vartheta, double tau, int q, double u1,
                 const Vector& u2, const Vector& u3) {
  const Dataset& ds = cfg.registry.at(q);
  const auto n = static_cast<Eigen::Index>(ds.dimension());
  if (vartheta.size() != n) throw Error(ErrorKind::DimensionMismatch, "error_rhs: vartheta dimension");
  const Vector p = cfg.model.regressor(tau);
  const bool corrupted = cfg.registry.partition().corrupted.count(q) != 0;

  Vector out = -cfg.k_t * p * p.dot(vartheta) + cfg.k_t * p * u1;
  if (corrupted) {
    if (u3.size() != n) throw Error(ErrorKind::DimensionMismatch, "error_rhs: u3 must have dimension n");
    out += cfg.k_r * u3;
  } else {
    const auto& samples = ds.samples();
    if (static_cast<std::size_t>(u2.size()) != samples.size()) {
      throw Error(ErrorKind::DimensionMismatch, "error_rhs: u2 needs one entry per recorded sample");
    }
    out -= cfg.k_r * (ds.data_matrix() * vartheta);
    for (std::size_t k = 0; k < samples.size(); ++k) {
      out += cfg.k_r * samples[k].phi * u2(static_cast<Eigen::Index>(k));
    }
  }
  return out;
}

// ---- closed loop ------------------------------------------------------------

namespace {

int mode_of(const State& z, const StateLayout& layout) {
  return static_cast<int>(std::lround(z(static_cast<Eigen::Index>(layout.q()))));
}

AutomatonState automaton_of(const State& z, const StateLayout& layout) {
  return {mode_of(z, layout), z(static_cast<Eigen::Index>(layout.rho_d())),
          z(static_cast<Eigen::Index>(layout.rho_a()))};
}

HybridSystem build_loop(const EstimatorConfig& cfg, JumpSchedule schedule, TimeScale scale) {
  cfg.validate();
  auto shared = std::make_shared<const EstimatorConfig>(cfg);
  const StateLayout layout{cfg.model.dimension()};
  const auto n = static_cast<Eigen::Index>(layout.n);

  HybridSystem sys;
  sys.dimension = layout.size();
  sys.labels = layout.labels();
  sys.flow_in = [shared, layout](double, const State& z) {
    return automaton_in_flow_set(shared->automaton, automaton_of(z, layout)) &&
           z(static_cast<Eigen::Index>(layout.mu())) >= 1.0 && z(static_cast<Eigen::Index>(layout.tau())) >= 0.0;
  };
  sys.flow_rhs = [shared, layout, n, scale](double, const State& z) {
    const auto& c = *shared;
    const AutomatonState y = automaton_of(z, layout);
    const double tau = z(static_cast<Eigen::Index>(layout.tau()));
    const double mu = z(static_cast<Eigen::Index>(layout.mu()));
    const auto [rate_d, rate_a] = automaton_rates(c.automaton, y, false);
    const bool real = scale == TimeScale::Real;
    const double gain = real ? mu : 1.0;

    State dz = State::Zero(z.size());
    dz.head(n) = gain * omega(c, z.head(n), tau, c.registry.at(y.q));
    dz(static_cast<Eigen::Index>(layout.rho_d())) = gain * rate_d;
    dz(static_cast<Eigen::Index>(layout.rho_a())) = gain * rate_a;
    dz(static_cast<Eigen::Index>(layout.tau())) = real ? 1.0 : 1.0 / mu;
    dz(static_cast<Eigen::Index>(layout.mu())) = real ? gain_rate(c.law, mu) : dilated_gain_rate(c.law, mu);
    return dz;
  };
  sys.jump_enabled = [shared, layout, schedule](double t, int j, const State& z) {
    return schedule.due(t, j) && automaton_in_jump_set(shared->automaton, automaton_of(z, layout));
  };
  sys.jump_map = [layout, schedule](double, int j, const State& z) {
    State next = z;
    const int mode = schedule.mode(j);
    if (mode == mode_of(z, layout)) throw Error(ErrorKind::Integration, "jump map: next mode equals the current mode");
    next(static_cast<Eigen::Index>(layout.q())) = mode;
    next(static_cast<Eigen::Index>(layout.rho_d())) -= 1.0;
    return next;
  };
  sys.project = [shared, layout](State& z) {
    AutomatonState y = automaton_of(z, layout);
    clip_automaton(shared->automaton, y);
    z(static_cast<Eigen::Index>(layout.rho_d())) = y.rho_d;
    z(static_cast<Eigen::Index>(layout.rho_a())) = y.rho_a;
  };
  return sys;
}

}  // namespace

HybridSystem build_closed_loop(const EstimatorConfig& cfg, JumpSchedule schedule) {
  return build_loop(cfg, std::move(schedule), TimeScale::Real);
}

HybridSystem build_target_loop(const EstimatorConfig& cfg, JumpSchedule schedule) {
  return build_loop(cfg, std::move(schedule), TimeScale::Dilated);
}

State initial_state(const EstimatorConfig& cfg, int initial_mode) {
  const StateLayout layout{cfg.model.dimension()};
  State z(static_cast<Eigen::Index>(layout.size()));
  z.head(static_cast<Eigen::Index>(layout.n)) = cfg.theta0;
  z(static_cast<Eigen::Index>(layout.q())) = initial_mode;
  z(static_cast<Eigen::Index>(layout.rho_d())) = cfg.automaton.n0;
  z(static_cast<Eigen::Index>(layout.rho_a())) = cfg.automaton.t0;
  z(static_cast<Eigen::Index>(layout.tau())) = 0.0;
  z(static_cast<Eigen::Index>(layout.mu())) = cfg.mu0;
  return z;
}

double run_end_time(const EstimatorConfig& cfg, const RunOptions& opts) {
  if (!(opts.eps_stop > 0.0 && opts.eps_stop < 1.0)) {
    throw Error(ErrorKind::Validation, "run: eps_stop must lie in (0, 1)");
  }
  double t_end = opts.horizon.value_or(std::numeric_limits<double>::infinity());
  if (cfg.law.has_blow_up()) t_end = std::min(t_end, (1.0 - opts.eps_stop) * blow_up_time(cfg.law, cfg.mu0));
  if (!std::isfinite(t_end) || !(t_end > 0.0)) {
    throw Error(ErrorKind::Validation, "run: a positive horizon is required for laws without escape time");
  }
  return t_end;
}

RunResult run(const EstimatorConfig& cfg, const SwitchingPolicy& policy, std::uint64_t seed,
              const RunOptions& opts) {
  cfg.validate();
  RunResult result;
  result.t_end = run_end_time(cfg, opts);
  result.s_end = dilate(cfg.law, cfg.mu0, result.t_end);
  result.switching = generate_switching(cfg.automaton, cfg.law, cfg.mu0, policy, seed, result.s_end);

  const State z0 = initial_state(cfg, result.switching.signal.initial_mode);
  IntegrateOptions iopts;
  iopts.dt = opts.dt;
  iopts.event_tol = opts.event_tol;
  const bool guarded = cfg.law.has_blow_up() && result.t_end >= (1.0 - opts.eps_stop) * blow_up_time(cfg.law, cfg.mu0);

  if (opts.mode == RunMode::Direct) {
    iopts.stop.t_max = result.t_end;
    if (guarded) {
      iopts.stop.t_max = std::numeric_limits<double>::infinity();
      iopts.stop.blow_up_time = blow_up_time(cfg.law, cfg.mu0);
      iopts.stop.eps_stop = opts.eps_stop;
    }
    result.arc = integrate(build_closed_loop(cfg, {result.switching.signal.jumps}), z0, iopts);
  } else {
    iopts.stop.t_max = result.s_end;
    HybridArc dilated = integrate(build_target_loop(cfg, {result.switching.dilated_signal.jumps}), z0, iopts);
    if (guarded && dilated.termination == Termination::HorizonReached) dilated.termination = Termination::BlowUpGuard;
    result.arc = map_arc_time(dilated, cfg.law, cfg.mu0, TimeDirection::ToReal);
    result.dilated_arc = std::move(dilated);
  }

  const StateLayout layout{cfg.model.dimension()};
  result.realized = switching_from_arc(result.arc, layout.q());
  const auto& a = cfg.automaton;
  result.dadt = verify_dadt(result.realized, cfg.law, cfg.mu0, a.tau_d, a.n0);
  result.daat = verify_daat(result.realized, cfg.law, cfg.mu0, a.tau_a, a.t0, a.inactive_modes());
  return result;
}

std::vector<double> error_trace(const EstimatorConfig& cfg, const HybridArc& arc) {
  const auto n = static_cast<Eigen::Index>(cfg.model.dimension());
  std::vector<double> out;
  out.reserve(arc.sample_count());
  for (const auto& seg : arc.segments) {
    for (const auto& s : seg.samples) out.push_back((s.x.head(n) - cfg.model.system.theta_star).norm());
  }
  return out;
}

double final_error(const EstimatorConfig& cfg, const HybridArc& arc) {
  const auto n = static_cast<Eigen::Index>(cfg.model.dimension());
  return (arc.back().x.head(n) - cfg.model.system.theta_star).norm();
}

// ---- certificate --------------------------------------------------------------

TheoremConstants theorem_constants(const EstimatorConfig& cfg) {
  const auto& part = cfg.registry.partition();
  if (part.sufficient.empty()) {
    throw Error(ErrorKind::EmptySufficientSet, "theorem constants: no sufficiently rich dataset");
  }
  double alpha_min = std::numeric_limits<double>::infinity();
  for (int q : part.sufficient) alpha_min = std::min(alpha_min, cfg.registry.at(q).classification().alpha);

  double corrupt_norm = 0.0;  // max over an empty set
  for (int q : part.corrupted) corrupt_norm = std::max(corrupt_norm, spectral_norm(cfg.registry.at(q).data_matrix()));

  double mass = 1.0;
  for (const auto& group : {part.sufficient, part.insufficient}) {
    for (int q : group) mass = std::max(mass, regressor_mass(cfg.registry.at(q)));
  }

  const auto& a = cfg.automaton;
  TheoremConstants c;
  c.kappa_lower = cfg.k_r * alpha_min;
  c.varpi = 1.0 + cfg.k_r * corrupt_norm;
  c.zeta = (c.kappa_lower + c.varpi) / a.tau_a;
  c.lambda = c.kappa_lower - c.zeta;
  c.c_lower = 0.5;
  c.c_upper = std::exp((c.varpi + c.kappa_lower) * a.t0) / 2.0;
  c.eta_bar = cfg.k_t * cfg.model.regressor.phi_bound + cfg.k_r * mass;
  c.gamma = c.c_upper * c.eta_bar * c.eta_bar / std::min(1.0, c.kappa_lower);
  c.certified = c.lambda > 0.0;
  if (c.certified) {
    c.kappa2 = (c.lambda / 4.0) * a.tau_d / (1.0 + a.tau_d);
    c.kappa1 = std::exp(c.kappa2 * (c.varpi + c.kappa_lower) * a.t0 / 2.0 * a.n0);
    c.kappa3 = 2.0 * std::sqrt(c.gamma / c.lambda);
  }
  return c;
}

double input_bound(const EstimatorConfig& cfg) {
  const auto& part = cfg.registry.partition();
  const Vector& theta_star = cfg.model.system.theta_star;
  const double d_bar = cfg.model.system.disturbance_bound;
  double u2_sq = 0.0;
  for (const auto& group : {part.sufficient, part.insufficient}) {
    for (int q : group) u2_sq += recorded_noise(cfg.registry.at(q), theta_star).squaredNorm();
  }
  double u3 = 0.0;
  for (int q : part.corrupted) u3 = std::max(u3, corruption_offset(cfg.registry.at(q), theta_star));
  return std::sqrt(d_bar * d_bar + u2_sq + u3 * u3);
}

BoundCurve bound_curve(const TheoremConstants& constants, const GainLaw& law, double mu0, double vartheta0_norm,
                       double u_sup) {
  if (!constants.certified || !(constants.lambda > 0.0)) {
    throw Error(ErrorKind::NegativeLambda, "bound curve: lambda <= 0, condition (b) violated");
  }
  if (!(vartheta0_norm >= 0.0) || !(u_sup >= 0.0)) {
    throw Error(ErrorKind::Validation, "bound curve: norms must be nonnegative");
  }
  return [c = constants, law, mu0, vartheta0_norm, u_sup](double t, int j) {
    const double clock = dilate(law, mu0, t) + static_cast<double>(j);
    return c.kappa1 * vartheta0_norm * std::exp(-c.kappa2 * clock) + c.kappa3 * u_sup;
  };
}

std::vector<LyapunovSample> lyapunov_diagnostics(const EstimatorConfig& cfg, const HybridArc& arc) {
  const TheoremConstants c = theorem_constants(cfg);
  const StateLayout layout{cfg.model.dimension()};
  const auto n = static_cast<Eigen::Index>(layout.n);
  std::vector<LyapunovSample> out;
  out.reserve(arc.sample_count());
  for (const auto& seg : arc.segments) {
    for (const auto& s : seg.samples) {
      const double w = 0.5 * (s.x.head(n) - cfg.model.system.theta_star).squaredNorm();
      const double rho_a = s.x(static_cast<Eigen::Index>(layout.rho_a()));
      out.push_back({s.t, seg.j, w, w * std::exp((c.kappa_lower + c.varpi) * rho_a)});
    }
  }
  return out;
}

void write_diagnostics_csv(std::ostream& out, const EstimatorConfig& cfg, const HybridArc& arc,
                           const std::optional<BoundCurve>& bound) {
  const StateLayout layout{cfg.model.dimension()};
  const auto n = static_cast<Eigen::Index>(layout.n);
  const auto lyap = lyapunov_diagnostics(cfg, arc);

  out << "t,j,s";
  for (Eigen::Index i = 0; i < n; ++i) out << ",theta_" << (i + 1);
  out << ",err,mu,q,rho_d,rho_a,W,V,bound\n";
  const auto old_precision = out.precision(17);
  std::size_t k = 0;
  for (const auto& seg : arc.segments) {
    for (const auto& s : seg.samples) {
      const auto& row = lyap[k++];
      out << s.t << ',' << seg.j << ',' << dilate(cfg.law, cfg.mu0, s.t);
      for (Eigen::Index i = 0; i < n; ++i) out << ',' << s.x(i);
      out << ',' << (s.x.head(n) - cfg.model.system.theta_star).norm() << ','
          << s.x(static_cast<Eigen::Index>(layout.mu())) << ',' << mode_of(s.x, layout) << ','
          << s.x(static_cast<Eigen::Index>(layout.rho_d())) << ',' << s.x(static_cast<Eigen::Index>(layout.rho_a()))
          << ',' << row.w << ',' << row.v << ',';
      if (bound) out << (*bound)(s.t, seg.j);
      out << '\n';
    }
  }
  out.precision(old_precision);
}

}  // namespace spthe
