#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "expect_kind.hpp"
#include "spthe/switching.hpp"
#include "support.hpp"

using namespace spthe;

namespace {

AutomatonParams reference_params() {
  AutomatonParams p;
  p.tau_d = 2.0;
  p.tau_a = 25.0;
  p.n0 = 2.0;
  p.t0 = 1.0;
  p.modes = {{1, 2}, {3}, {4}};
  return p;
}

// D for ell = inf, Upsilon = 8, mu0 = 1: -8 log(1 - t / 8).
double pt_clock(double t) { return -8.0 * std::log1p(-t / 8.0); }

// Smallest slack N0 + (s_k - s_i) / tau_d - (k - i + 1) over jump pairs.
double oracle_adt_margin(const std::vector<double>& s, double tau_d, double n0) {
  double worst = n0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t k = i; k < s.size(); ++k)
      worst = std::min(worst, n0 + (s[k] - s[i]) / tau_d - static_cast<double>(k - i + 1));
  return worst;
}

struct Piece {
  double a, b;
  bool inactive;
};

std::vector<Piece> pieces(const SwitchingSignal& sig, const std::set<int>& inactive,
                          const std::function<double(double)>& clock) {
  std::vector<Piece> out;
  double start = 0.0;
  int q = sig.initial_mode;
  for (const auto& jump : sig.jumps) {
    out.push_back({clock(start), clock(jump.t), inactive.count(q) != 0});
    start = jump.t;
    q = jump.mode;
  }
  out.push_back({clock(start), clock(sig.horizon), inactive.count(q) != 0});
  return out;
}

double inactive_time(const std::vector<Piece>& ps, double s1, double s2) {
  double total = 0.0;
  for (const auto& p : ps)
    if (p.inactive) total += std::max(0.0, std::min(p.b, s2) - std::max(p.a, s1));
  return total;
}

// Slack T0 + (s2 - s1) / tau_a - inactive time, minimised over piece ends.
double oracle_aat_margin(const std::vector<Piece>& ps, double tau_a, double t0) {
  std::vector<double> ends{ps.front().a};
  for (const auto& p : ps) ends.push_back(p.b);
  double worst = t0;
  for (double s1 : ends)
    for (double s2 : ends)
      if (s2 > s1) worst = std::min(worst, t0 + (s2 - s1) / tau_a - inactive_time(ps, s1, s2));
  return worst;
}

SwitchingSignal signal(int q0, std::vector<Jump> jumps, double horizon) {
  SwitchingSignal s;
  s.initial_mode = q0;
  s.jumps = std::move(jumps);
  s.horizon = horizon;
  return s;
}

}  // namespace

TEST(AutomatonParams, Validation) {
  AutomatonParams p = reference_params();
  EXPECT_NO_THROW(p.validate());
  p.tau_a = 1.0;
  EXPECT_ERROR_KIND(p.validate(), ErrorKind::Validation);
  p = reference_params();
  p.n0 = 0.5;
  EXPECT_ERROR_KIND(p.validate(), ErrorKind::Validation);
  p = reference_params();
  p.tau_d = 0.0;
  EXPECT_ERROR_KIND(p.validate(), ErrorKind::Validation);
  p = reference_params();
  p.modes = {};
  EXPECT_ERROR_KIND(p.validate(), ErrorKind::EmptyModeSet);
  p = reference_params();
  EXPECT_EQ(p.inactive_modes(), (std::set<int>{3, 4}));
  EXPECT_FALSE(p.inactive(2));
}

TEST(SwitchingSignal, ModeAt) {
  const SwitchingSignal s = signal(1, {{1.0, 2}, {1.0, 3}, {2.0, 1}}, 3.0);
  EXPECT_EQ(s.mode_at(0.5), 1);
  EXPECT_EQ(s.mode_at(1.0), 3);
  EXPECT_EQ(s.mode_at(1.5), 3);
  EXPECT_EQ(s.mode_at(2.5), 1);
  EXPECT_EQ(s.jump_times(), (std::vector<double>{1.0, 1.0, 2.0}));
}

TEST(Verifiers, ClassicalHandCases) {
  // Two jumps at the same instant exhaust N0 = 2 exactly.
  const SwitchingSignal pair = signal(1, {{1.0, 2}, {1.0, 1}}, 3.0);
  EXPECT_TRUE(verify_adt(pair, 2.0, 2.0).ok);
  EXPECT_NEAR(verify_adt(pair, 2.0, 2.0).worst_margin, 0.0, 1e-15);

  const SwitchingSignal burst = signal(1, {{1.0, 2}, {1.0, 1}, {1.0, 2}}, 3.0);
  const ConstraintReport r = verify_adt(burst, 2.0, 2.0);
  EXPECT_FALSE(r.ok);
  EXPECT_NEAR(r.worst_margin, -1.0, 1e-15);
  ASSERT_TRUE(r.witness);
  EXPECT_EQ(r.witness->first, 1.0);
  EXPECT_EQ(r.witness->second, 1.0);

  const SwitchingSignal none = signal(1, {}, 5.0);
  EXPECT_EQ(verify_adt(none, 2.0, 2.0).worst_margin, 2.0);
  EXPECT_EQ(verify_aat(none, 25.0, 1.0, {3, 4}).worst_margin, 1.0);
}

TEST(Verifiers, InactiveOverstay) {
  const GainLaw frozen = GainLaw::frozen();
  for (int bad : {3, 4}) {
    const SwitchingSignal s = signal(1, {{1.0, bad}, {4.0, 1}}, 6.0);
    const ConstraintReport r = verify_daat(s, frozen, 1.0, 25.0, 1.0, {3, 4});
    EXPECT_FALSE(r.ok);
    EXPECT_NEAR(r.worst_margin, 1.0 + 3.0 / 25.0 - 3.0, 1e-12);
    ASSERT_TRUE(r.witness);
    EXPECT_NEAR(r.witness->first, 1.0, 1e-12);
    EXPECT_NEAR(r.witness->second, 4.0, 1e-12);
  }
  // The same dwell shrunk to fit the budget passes.
  const SwitchingSignal ok = signal(1, {{1.0, 3}, {2.0, 1}}, 6.0);
  EXPECT_TRUE(verify_daat(ok, frozen, 1.0, 25.0, 1.0, {3, 4}).ok);
}

TEST(Verifiers, DilationTightensLateSwitching) {
  // Real gaps of 0.5 are fine for the classical check with tau_d = 0.4 but the
  // dilated clock stretches them near the escape time, so the dilated check is
  // looser, never tighter.
  const GainLaw pt = GainLaw::prescribed(8);
  std::vector<Jump> jumps;
  for (int k = 1; k <= 14; ++k) jumps.push_back({0.5 * k, k % 2 == 0 ? 1 : 2});
  const SwitchingSignal s = signal(1, jumps, 7.5);
  EXPECT_GE(verify_dadt(s, pt, 1.0, 2.0, 2.0).worst_margin, verify_adt(s, 2.0, 2.0).worst_margin - 1e-12);
}

TEST(Verifiers, Rejections) {
  const SwitchingSignal unordered = signal(1, {{2.0, 2}, {1.0, 1}}, 3.0);
  EXPECT_ERROR_KIND(verify_adt(unordered, 2.0, 2.0), ErrorKind::Validation);
  const SwitchingSignal late = signal(1, {{9.0, 2}}, 9.5);
  EXPECT_ERROR_KIND(verify_dadt(late, GainLaw::prescribed(8), 1.0, 2.0, 2.0), ErrorKind::Domain);
}

TEST(Verifiers, MatchOracle) {
  const GainLaw pt = GainLaw::prescribed(8);
  oracle::Gen gen(51);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Jump> jumps;
    double t = 0.0;
    int q = 1;
    const int count = gen.integer(0, 12);
    for (int k = 0; k < count; ++k) {
      t += gen.uniform(0.0, 0.6);
      if (t >= 7.5) break;
      int next = gen.integer(1, 4);
      if (next == q) next = next % 4 + 1;
      jumps.push_back({t, next});
      q = next;
    }
    const SwitchingSignal s = signal(1, jumps, 7.5);
    std::vector<double> clock;
    for (const auto& jump : jumps) clock.push_back(pt_clock(jump.t));
    const ConstraintReport dadt = verify_dadt(s, pt, 1.0, 2.0, 2.0);
    EXPECT_NEAR(dadt.worst_margin, oracle_adt_margin(clock, 2.0, 2.0), 1e-9);
    const ConstraintReport daat = verify_daat(s, pt, 1.0, 25.0, 1.0, {3, 4});
    EXPECT_NEAR(daat.worst_margin, oracle_aat_margin(pieces(s, {3, 4}, pt_clock), 25.0, 1.0), 1e-9);
  }
}

TEST(Verifiers, TimeScaleConsistency) {
  const GainLaw pt = GainLaw::prescribed(8);
  const AutomatonParams p = reference_params();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RandomPolicy policy;
    policy.min_dwell = 0.05;
    policy.max_dwell = 1.0;
    const GeneratedSwitching g = generate_switching(p, pt, 1.0, policy, seed, pt_clock(7.9));
    // Perturb some jumps to get failing cases too.
    SwitchingSignal real = g.signal;
    SwitchingSignal dil = g.dilated_signal;
    if (seed % 2 == 1 && real.jumps.size() > 3) {
      for (std::size_t k = 1; k < real.jumps.size(); ++k) {
        real.jumps[k].t = real.jumps[0].t;
        dil.jumps[k].t = dil.jumps[0].t;
      }
    }
    const auto classical_d = verify_adt(dil, p.tau_d, p.n0);
    const auto dilated_d = verify_dadt(real, pt, 1.0, p.tau_d, p.n0);
    EXPECT_EQ(classical_d.ok, dilated_d.ok) << seed;
    EXPECT_NEAR(classical_d.worst_margin, dilated_d.worst_margin, 1e-7) << seed;
    const auto classical_a = verify_aat(dil, p.tau_a, p.t0, p.inactive_modes());
    const auto dilated_a = verify_daat(real, pt, 1.0, p.tau_a, p.t0, p.inactive_modes());
    EXPECT_EQ(classical_a.ok, dilated_a.ok) << seed;
    EXPECT_NEAR(classical_a.worst_margin, dilated_a.worst_margin, 1e-7) << seed;
  }
}

TEST(Generator, ClosureOverSeeds) {
  const AutomatonParams p = reference_params();
  for (const GainLaw& law : {GainLaw::prescribed(8), GainLaw::exponential(8)}) {
    const double s_max = law.kind() == GainKind::Prescribed ? pt_clock(7.92) : 8.0 * (std::exp(1.0) - 1.0);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      RandomPolicy policy;
      policy.min_dwell = 0.1;
      policy.max_dwell = 2.0;
      policy.weights = {{1, 1.0}, {2, 1.0}, {3, 2.0}, {4, 2.0}};
      const GeneratedSwitching g = generate_switching(p, law, 1.0, policy, seed, s_max);
      const auto d = verify_dadt(g.signal, law, 1.0, p.tau_d, p.n0);
      const auto a = verify_daat(g.signal, law, 1.0, p.tau_a, p.t0, p.inactive_modes());
      EXPECT_TRUE(d.ok && a.ok) << law.describe() << " seed " << seed;
      EXPECT_GE(d.worst_margin, 0.0);
      EXPECT_GE(a.worst_margin, 0.0);

      ASSERT_EQ(g.signal.jumps.size(), g.dilated_signal.jumps.size());
      for (std::size_t k = 0; k < g.signal.jumps.size(); ++k) {
        EXPECT_NEAR(dilate(law, 1.0, g.signal.jumps[k].t), g.dilated_signal.jumps[k].t, 1e-8);
        EXPECT_EQ(g.signal.jumps[k].mode, g.dilated_signal.jumps[k].mode);
        EXPECT_GE(g.signal.jumps[k].t, k == 0 ? 0.0 : g.signal.jumps[k - 1].t);
        EXPECT_NE(g.signal.jumps[k].mode, k == 0 ? g.signal.initial_mode : g.signal.jumps[k - 1].mode);
      }
    }
  }
}

TEST(Generator, Deterministic) {
  const AutomatonParams p = reference_params();
  const GainLaw pt = GainLaw::prescribed(8);
  const auto a = generate_switching(p, pt, 1.0, RandomPolicy{}, 7, 30.0);
  const auto b = generate_switching(p, pt, 1.0, RandomPolicy{}, 7, 30.0);
  ASSERT_EQ(a.signal.jumps.size(), b.signal.jumps.size());
  for (std::size_t k = 0; k < a.signal.jumps.size(); ++k) {
    EXPECT_EQ(a.signal.jumps[k].t, b.signal.jumps[k].t);
    EXPECT_EQ(a.signal.jumps[k].mode, b.signal.jumps[k].mode);
  }
}

TEST(Generator, ScriptedFeasible) {
  const AutomatonParams p = reference_params();
  ScriptedPolicy policy{{{3.0, 2}, {0.5, 3}, {3.0, 2}}, false};
  const auto g = generate_switching(p, GainLaw::frozen(), 1.0, policy, 0, 10.0);
  EXPECT_EQ(g.dilated_signal.initial_mode, 2);
  ASSERT_EQ(g.dilated_signal.jumps.size(), 2u);
  EXPECT_DOUBLE_EQ(g.dilated_signal.jumps[0].t, 3.0);
  EXPECT_EQ(g.dilated_signal.jumps[0].mode, 3);
  EXPECT_DOUBLE_EQ(g.dilated_signal.jumps[1].t, 3.5);
  EXPECT_EQ(g.dilated_signal.jumps[1].mode, 2);
}

TEST(Generator, ScriptedRepeatRunsOutOfBudget) {
  const AutomatonParams p = reference_params();
  ScriptedPolicy policy{{{3.0, 2}, {0.5, 3}}, true};
  const auto g = generate_switching(p, GainLaw::frozen(), 1.0, policy, 0, 10.0);
  EXPECT_TRUE(verify_aat(g.dilated_signal, p.tau_a, p.t0, p.inactive_modes()).ok);
  EXPECT_ERROR_KIND(generate_switching(p, GainLaw::frozen(), 1.0, policy, 0, 40.0), ErrorKind::PolicyInfeasible);
}

TEST(Generator, ScriptedRejections) {
  const AutomatonParams p = reference_params();
  const auto run = [&](ScriptedPolicy policy) {
    return generate_switching(p, GainLaw::frozen(), 1.0, policy, 0, 20.0);
  };
  EXPECT_ERROR_KIND(run({{{1.0, 9}}, false}), ErrorKind::PolicyInfeasible);
  EXPECT_ERROR_KIND(run({{{-1.0, 1}, {1.0, 2}}, false}), ErrorKind::PolicyInfeasible);
  EXPECT_ERROR_KIND(run({{{1.0, 1}, {2.0, 3}, {1.0, 1}}, false}), ErrorKind::PolicyInfeasible);
  EXPECT_ERROR_KIND(run({{{1.0, 1}, {1.0, 1}}, false}), ErrorKind::PolicyInfeasible);
  EXPECT_ERROR_KIND(run({{{0.0, 1}, {0.0, 2}, {0.0, 1}, {1.0, 2}}, false}), ErrorKind::PolicyInfeasible);
  // Two immediate jumps use the whole budget and are allowed.
  EXPECT_NO_THROW(run({{{0.0, 1}, {0.0, 2}, {1.0, 1}}, false}));
}

TEST(Generator, Rejections) {
  AutomatonParams p = reference_params();
  EXPECT_ERROR_KIND(generate_switching(p, GainLaw::frozen(), 1.0, RandomPolicy{}, 0, -1.0), ErrorKind::Validation);
  RandomPolicy zero;
  zero.min_dwell = 0.0;
  EXPECT_ERROR_KIND(generate_switching(p, GainLaw::frozen(), 1.0, zero, 0, 5.0), ErrorKind::PolicyInfeasible);
  p.modes = {{}, {3}, {4}};
  EXPECT_ERROR_KIND(generate_switching(p, GainLaw::frozen(), 1.0, RandomPolicy{}, 0, 5.0),
                    ErrorKind::EmptySufficientSet);
}

TEST(Automaton, RatesAndSets) {
  const AutomatonParams p = reference_params();
  auto [rd, ra] = automaton_rates(p, {1, 1.0, 0.5});
  EXPECT_DOUBLE_EQ(rd, 0.5);
  EXPECT_DOUBLE_EQ(ra, 0.04);
  std::tie(rd, ra) = automaton_rates(p, {3, 2.0, 1.0});
  EXPECT_DOUBLE_EQ(rd, 0.0);
  EXPECT_DOUBLE_EQ(ra, -0.96);
  std::tie(rd, ra) = automaton_rates(p, {1, 2.0, 1.0});
  EXPECT_DOUBLE_EQ(ra, 0.0);
  std::tie(rd, ra) = automaton_rates(p, {1, 2.0, 1.0}, false);
  EXPECT_DOUBLE_EQ(rd, 0.5);
  EXPECT_DOUBLE_EQ(ra, 0.04);

  EXPECT_TRUE(automaton_in_flow_set(p, {1, 0.0, 0.0}));
  EXPECT_FALSE(automaton_in_flow_set(p, {1, 0.0, -0.1}));
  EXPECT_FALSE(automaton_in_flow_set(p, {7, 1.0, 0.5}));
  EXPECT_TRUE(automaton_in_jump_set(p, {1, 1.0, 0.0}));
  EXPECT_FALSE(automaton_in_jump_set(p, {1, 0.9, 0.5}));

  AutomatonState y{1, 2.5, 1.4};
  clip_automaton(p, y);
  EXPECT_EQ(y.rho_d, 2.0);
  EXPECT_EQ(y.rho_a, 1.0);
}

TEST(Automaton, InactiveModeDiesWithoutJump) {
  const AutomatonParams p = reference_params();
  const HybridSystem sys = automaton_hds(p, GainLaw::frozen(), {}, TimeScale::Dilated);
  IntegrateOptions o;
  o.stop.t_max = 5.0;
  const HybridArc arc = integrate(sys, State{{3.0, 2.0, 1.0, 1.0}}, o);
  EXPECT_EQ(arc.termination, Termination::DeadSolution);
  EXPECT_NEAR(arc.back().t, 1.0 / 0.96, 1e-6);
}

TEST(Automaton, ClosureAlongGeneratedSchedules) {
  const AutomatonParams p = reference_params();
  const GainLaw pt = GainLaw::prescribed(8);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RandomPolicy policy;
    policy.min_dwell = 0.1;
    policy.max_dwell = 1.5;
    const auto g = generate_switching(p, pt, 1.0, policy, seed, pt_clock(7.92));
    for (const TimeScale scale : {TimeScale::Dilated, TimeScale::Real}) {
      const auto& sig = scale == TimeScale::Dilated ? g.dilated_signal : g.signal;
      const HybridSystem sys = automaton_hds(p, pt, JumpSchedule{sig.jumps}, scale);
      IntegrateOptions o;
      o.dt = 1e-3;
      o.stop.t_max = scale == TimeScale::Dilated ? pt_clock(7.92) : 7.92;
      const HybridArc arc = integrate(sys, State{{double(sig.initial_mode), p.n0, p.t0, 1.0}}, o);
      EXPECT_EQ(arc.termination, Termination::HorizonReached) << seed;
      EXPECT_EQ(arc.jump_count(), static_cast<int>(sig.jumps.size())) << seed;
      for (const auto& seg : arc.segments) {
        for (const auto& s : seg.samples) {
          EXPECT_TRUE(automaton_in_flow_set(p, {static_cast<int>(s.x(0)), s.x(1), s.x(2)}));
        }
      }
      const SwitchingSignal realized = switching_from_arc(arc, 0);
      for (std::size_t k = 0; k < sig.jumps.size(); ++k) {
        EXPECT_NEAR(realized.jumps[k].t, sig.jumps[k].t, scale == TimeScale::Dilated ? 1e-8 : 1e-6);
        EXPECT_EQ(realized.jumps[k].mode, sig.jumps[k].mode);
      }
    }
  }
}
