#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "expect_kind.hpp"
#include "spthe/hybrid_core.hpp"
#include "support.hpp"

using namespace spthe;

namespace {

HybridSystem decay(double a = -1.0) {
  HybridSystem sys;
  sys.dimension = 1;
  sys.flow_in = [](double, const State&) { return true; };
  sys.flow_rhs = [a](double, const State& z) { return State(a * z); };
  sys.jump_enabled = [](double, int, const State&) { return false; };
  sys.jump_map = [](double, int, const State& z) { return z; };
  sys.labels = {"z"};
  return sys;
}

// Timer with period p, reset to zero.
HybridSystem timer(double p) {
  HybridSystem sys;
  sys.dimension = 1;
  sys.flow_in = [p](double, const State& z) { return z(0) <= p; };
  sys.flow_rhs = [](double, const State&) { return State::Ones(1); };
  sys.jump_enabled = [p](double, int, const State& z) { return z(0) >= p; };
  sys.jump_map = [](double, int, const State&) { return State::Zero(1); };
  sys.labels = {"tau"};
  return sys;
}

IntegrateOptions horizon(double t, double dt = 1e-3) {
  IntegrateOptions o;
  o.dt = dt;
  o.stop.t_max = t;
  return o;
}

}  // namespace

TEST(Integrate, LinearDecay) {
  const HybridArc arc = integrate(decay(), State::Ones(1), horizon(1.0));
  EXPECT_EQ(arc.termination, Termination::HorizonReached);
  EXPECT_EQ(arc.jump_count(), 0);
  EXPECT_DOUBLE_EQ(arc.back().t, 1.0);
  EXPECT_NEAR(arc.back().x(0), std::exp(-1.0), 1e-8);
}

TEST(Integrate, TimerJumps) {
  const HybridArc arc = integrate(timer(1.0), State::Zero(1), horizon(2.5));
  ASSERT_EQ(arc.jump_count(), 2);
  const auto jt = arc.jump_times();
  EXPECT_NEAR(jt[0], 1.0, 1e-9);
  EXPECT_NEAR(jt[1], 2.0, 1e-9);
  EXPECT_NEAR(arc.back().x(0), 0.5, 1e-8);
  EXPECT_TRUE(arc.valid_domain());
}

TEST(Integrate, FourthOrderConvergence) {
  const double want = std::exp(-1.0);
  const double coarse = std::abs(integrate(decay(), State::Ones(1), horizon(1.0, 0.1)).back().x(0) - want);
  const double fine = std::abs(integrate(decay(), State::Ones(1), horizon(1.0, 0.05)).back().x(0) - want);
  EXPECT_GE(coarse / fine, 8.0);
}

TEST(Integrate, BlowUpGuard) {
  IntegrateOptions o;
  o.stop.blow_up_time = 8.0;
  o.stop.eps_stop = 0.01;
  const HybridArc arc = integrate(decay(), State::Ones(1), o);
  EXPECT_EQ(arc.termination, Termination::BlowUpGuard);
  EXPECT_NEAR(arc.back().t, 7.92, 1e-12);

  o.stop.t_max = 5.0;
  EXPECT_EQ(integrate(decay(), State::Ones(1), o).termination, Termination::HorizonReached);
}

TEST(Integrate, DeadSolution) {
  HybridSystem sys = timer(1.0);
  sys.jump_enabled = [](double, int, const State&) { return false; };
  const HybridArc arc = integrate(sys, State::Zero(1), horizon(3.0));
  EXPECT_EQ(arc.termination, Termination::DeadSolution);
  EXPECT_NEAR(arc.back().t, 1.0, 1e-9);
  EXPECT_LE(arc.back().x(0), 1.0);
}

TEST(Integrate, JumpBudget) {
  IntegrateOptions o = horizon(10.0);
  o.stop.j_max = 3;
  const HybridArc arc = integrate(timer(1.0), State::Zero(1), o);
  EXPECT_EQ(arc.termination, Termination::JumpBudget);
  EXPECT_EQ(arc.jump_count(), 3);
}

TEST(Integrate, Converged) {
  IntegrateOptions o;
  o.stop.convergence_metric = [](const State& z) { return std::abs(z(0)); };
  o.stop.converge_tol = 1e-3;
  const HybridArc arc = integrate(decay(), State::Ones(1), o);
  EXPECT_EQ(arc.termination, Termination::Converged);
  EXPECT_NEAR(arc.back().t, std::log(1e3), 2e-3);
}

TEST(Integrate, ImmediateJumpsAtStart) {
  const HybridArc arc = integrate(timer(1.0), State::Ones(1), horizon(0.5));
  EXPECT_EQ(arc.jump_count(), 1);
  EXPECT_EQ(arc.jump_times().front(), 0.0);
  EXPECT_TRUE(arc.valid_domain());
}

TEST(Integrate, ProjectionApplied) {
  HybridSystem sys = decay(1.0);
  sys.project = [](State& z) { z(0) = std::min(z(0), 2.0); };
  const HybridArc arc = integrate(sys, State::Ones(1), horizon(3.0));
  EXPECT_DOUBLE_EQ(arc.back().x(0), 2.0);
}

TEST(Integrate, Rejections) {
  EXPECT_ERROR_KIND(integrate(decay(), State::Ones(1), horizon(1.0, 0.0)), ErrorKind::Validation);
  EXPECT_ERROR_KIND(integrate(decay(), State::Ones(2), horizon(1.0)), ErrorKind::DimensionMismatch);
  EXPECT_ERROR_KIND(integrate(decay(), State::Ones(1), IntegrateOptions{}), ErrorKind::Validation);
  HybridSystem none = decay();
  none.flow_in = [](double, const State&) { return false; };
  EXPECT_ERROR_KIND(integrate(none, State::Ones(1), horizon(1.0)), ErrorKind::Integration);
  State bad(1);
  bad(0) = std::nan("");
  EXPECT_ERROR_KIND(integrate(decay(), bad, horizon(1.0)), ErrorKind::Integration);
}

TEST(Arc, DomainValidity) {
  HybridArc arc = integrate(timer(1.0), State::Zero(1), horizon(2.5));
  EXPECT_TRUE(arc.valid_domain());
  HybridArc broken = arc;
  broken.segments[1].samples.front().t += 0.1;
  std::string why;
  EXPECT_FALSE(broken.valid_domain(&why));
  EXPECT_FALSE(why.empty());
  HybridArc unordered = arc;
  std::swap(unordered.segments[0].samples[1], unordered.segments[0].samples[2]);
  EXPECT_FALSE(unordered.valid_domain());
}

TEST(Arc, SampleAt) {
  const HybridArc arc = integrate(timer(1.0), State::Zero(1), horizon(2.5, 0.1));
  EXPECT_NEAR(sample_at(arc, 0.55, 0)(0), 0.55, 1e-12);
  const double jump = arc.jump_times().front();
  EXPECT_NEAR(sample_at(arc, jump, 1)(0), 0.0, 1e-9);
  EXPECT_NEAR(sample_at(arc, jump, 0)(0), 1.0, 1e-9);
  EXPECT_ERROR_KIND(sample_at(arc, 1.5, 0), ErrorKind::OutOfDomain);
  EXPECT_ERROR_KIND(sample_at(arc, 0.5, 3), ErrorKind::OutOfDomain);
}

TEST(Arc, SupDistance) {
  const HybridArc a = integrate(timer(1.0), State::Zero(1), horizon(2.5, 1e-2));
  const HybridArc b = integrate(timer(1.0), State::Zero(1), horizon(2.5, 1e-3));
  EXPECT_LE(arc_sup_distance(a, b, 1, 1e-6), 1e-8);
  const HybridArc c = integrate(timer(1.0), State::Zero(1), horizon(1.5));
  EXPECT_ERROR_KIND(arc_sup_distance(a, c, 1, 1e-6), ErrorKind::OutOfDomain);
}

TEST(Arc, TimeMapRoundTrip) {
  const GainLaw law = GainLaw::prescribed(8);
  const HybridArc arc = integrate(timer(1.0), State::Zero(1), horizon(7.5));
  const HybridArc back =
      map_arc_time(map_arc_time(arc, law, 1.0, TimeDirection::ToDilated), law, 1.0, TimeDirection::ToReal);
  ASSERT_EQ(back.jump_count(), arc.jump_count());
  for (std::size_t s = 0; s < arc.segments.size(); ++s) {
    ASSERT_EQ(back.segments[s].samples.size(), arc.segments[s].samples.size());
    for (std::size_t k = 0; k < arc.segments[s].samples.size(); ++k) {
      EXPECT_NEAR(back.segments[s].samples[k].t, arc.segments[s].samples[k].t, 1e-9);
      EXPECT_EQ(back.segments[s].samples[k].x, arc.segments[s].samples[k].x);
    }
  }
}

TEST(Arc, TraceCsv) {
  const HybridArc arc = integrate(timer(1.0), State::Zero(1), horizon(1.5, 0.5));
  std::ostringstream plain;
  write_trace_csv(plain, arc, {"tau"});
  std::istringstream lines(plain.str());
  std::string header;
  std::getline(lines, header);
  EXPECT_EQ(header, "t,j,s,tau");
  std::size_t rows = 0;
  for (std::string line; std::getline(lines, line);) ++rows;
  EXPECT_EQ(rows, arc.sample_count());

  std::ostringstream dilated;
  write_trace_csv(dilated, arc, {"tau"}, GainLaw::prescribed(8), 1.0);
  EXPECT_NE(dilated.str(), plain.str());
}

TEST(HybridProperties, LinearFlowsMatchExponential) {
  oracle::Gen gen(41);
  for (int trial = 0; trial < 50; ++trial) {
    const double a = gen.uniform(-2.0, 1.0);
    const double z0 = gen.uniform(-3.0, 3.0);
    const double t = gen.uniform(0.1, 3.0);
    const HybridArc arc = integrate(decay(a), State::Constant(1, z0), horizon(t));
    EXPECT_LE(std::abs(arc.back().x(0) - z0 * std::exp(a * t)), 1e-9 * (1.0 + std::abs(z0 * std::exp(a * t))));
  }
}

TEST(HybridProperties, TimerJumpCountAndInstants) {
  oracle::Gen gen(42);
  for (int trial = 0; trial < 50; ++trial) {
    const double p = gen.uniform(0.3, 1.5);
    double h = gen.uniform(1.0, 6.0);
    // Keep the horizon clear of a jump instant.
    if (std::abs(h / p - std::round(h / p)) < 1e-3) h += 0.01 * p;
    const HybridArc arc = integrate(timer(p), State::Zero(1), horizon(h));
    const int expected = static_cast<int>(std::floor(h / p));
    ASSERT_EQ(arc.jump_count(), expected) << "p=" << p << " h=" << h;
    const auto jt = arc.jump_times();
    for (int k = 0; k < expected; ++k) EXPECT_NEAR(jt[static_cast<std::size_t>(k)], (k + 1) * p, 1e-9);
    EXPECT_TRUE(arc.valid_domain());
  }
}
