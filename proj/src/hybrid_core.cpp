#include "spthe/hybrid_core.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "spthe/errors.hpp"

namespace spthe {

std::string to_string(Termination termination) {
  switch (termination) {
    case Termination::HorizonReached: return "HorizonReached";
    case Termination::BlowUpGuard: return "BlowUpGuard";
    case Termination::JumpBudget: return "JumpBudget";
    case Termination::DeadSolution: return "DeadSolution";
    case Termination::Converged: return "Converged";
  }
  return "?";
}

std::vector<double> HybridArc::jump_times() const {
  std::vector<double> out;
  for (std::size_t k = 1; k < segments.size(); ++k) out.push_back(segments[k].samples.front().t);
  return out;
}

const ArcSample& HybridArc::front() const {
  if (segments.empty() || segments.front().samples.empty()) throw Error(ErrorKind::OutOfDomain, "empty arc");
  return segments.front().samples.front();
}

const ArcSample& HybridArc::back() const {
  if (segments.empty() || segments.back().samples.empty()) throw Error(ErrorKind::OutOfDomain, "empty arc");
  return segments.back().samples.back();
}

std::size_t HybridArc::sample_count() const {
  std::size_t n = 0;
  for (const auto& seg : segments) n += seg.samples.size();
  return n;
}

bool HybridArc::valid_domain(std::string* why) const {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  if (segments.empty()) return fail("no segments");
  for (std::size_t k = 0; k < segments.size(); ++k) {
    const auto& seg = segments[k];
    if (seg.j != static_cast<int>(k)) return fail("segment indices are not consecutive");
    if (seg.samples.empty()) return fail("empty segment " + std::to_string(k));
    for (std::size_t i = 1; i < seg.samples.size(); ++i) {
      if (!(seg.samples[i].t > seg.samples[i - 1].t)) {
        return fail("flow time not strictly increasing in segment " + std::to_string(k));
      }
    }
    if (k > 0 && segments[k - 1].samples.back().t != seg.samples.front().t) {
      return fail("jump " + std::to_string(k) + " is not instantaneous");
    }
  }
  if (segments.front().samples.front().t < 0.0) return fail("negative start time");
  return true;
}

namespace {

void require_finite(const State& x, double t, const char* what) {
  if (!x.allFinite()) {
    std::ostringstream os;
    os << what << " is not finite at t=" << t << ": [" << x.transpose() << "]";
    throw Error(ErrorKind::Integration, os.str());
  }
}

State rk4_step(const HybridSystem& sys, double t, const State& z, double h) {
  const State k1 = sys.flow_rhs(t, z);
  require_finite(k1, t, "flow derivative");
  const State k2 = sys.flow_rhs(t + 0.5 * h, z + 0.5 * h * k1);
  require_finite(k2, t + 0.5 * h, "flow derivative");
  const State k3 = sys.flow_rhs(t + 0.5 * h, z + 0.5 * h * k2);
  require_finite(k3, t + 0.5 * h, "flow derivative");
  const State k4 = sys.flow_rhs(t + h, z + h * k3);
  require_finite(k4, t + h, "flow derivative");
  return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

HybridArc integrate(const HybridSystem& sys, const State& z0, const IntegrateOptions& opts) {
  if (!(opts.dt > 0.0)) throw Error(ErrorKind::Validation, "integrate: dt must be positive");
  if (static_cast<std::size_t>(z0.size()) != sys.dimension) {
    throw Error(ErrorKind::DimensionMismatch, "integrate: initial state has the wrong dimension");
  }
  require_finite(z0, 0.0, "initial state");
  if (!sys.flow_in(0.0, z0) && !sys.jump_enabled(0.0, 0, z0)) {
    throw Error(ErrorKind::Integration, "integrate: initial state is in neither the flow set nor the jump set");
  }

  const auto& stop = opts.stop;
  double t_stop = stop.t_max;
  bool guarded = false;
  if (stop.blow_up_time && std::isfinite(*stop.blow_up_time)) {
    const double guard = (1.0 - stop.eps_stop) * *stop.blow_up_time;
    if (guard <= t_stop) {
      t_stop = guard;
      guarded = true;
    }
  }
  if (!std::isfinite(t_stop) && !stop.convergence_metric) {
    throw Error(ErrorKind::Validation, "integrate: no finite horizon and no convergence criterion");
  }

  HybridArc arc;
  double t = 0.0;
  int j = 0;
  State z = z0;
  arc.segments.push_back({0, {{t, z}}});

  auto push = [&](double time, const State& x) { arc.segments.back().samples.push_back({time, x}); };

  while (true) {
    while (sys.jump_enabled(t, j, z)) {
      if (j >= stop.j_max) {
        arc.termination = Termination::JumpBudget;
        return arc;
      }
      z = sys.jump_map(t, j, z);
      require_finite(z, t, "post-jump state");
      ++j;
      arc.segments.push_back({j, {{t, z}}});
    }
    if (stop.convergence_metric && stop.convergence_metric(z) <= stop.converge_tol) {
      arc.termination = Termination::Converged;
      return arc;
    }
    if (t >= t_stop) {
      arc.termination = guarded ? Termination::BlowUpGuard : Termination::HorizonReached;
      return arc;
    }
    if (!sys.flow_in(t, z)) {
      arc.termination = Termination::DeadSolution;
      return arc;
    }

    const bool last = opts.dt >= t_stop - t;
    const double h = last ? t_stop - t : opts.dt;
    auto step_to = [&](double step) {
      State out = rk4_step(sys, t, z, step);
      if (sys.project) sys.project(out);
      return out;
    };
    State z1 = step_to(h);
    auto event_at = [&](double step, State& out) {
      out = step_to(step);
      return sys.jump_enabled(t + step, j, out) || !sys.flow_in(t + step, out);
    };

    if (sys.jump_enabled(t + h, j, z1) || !sys.flow_in(t + h, z1)) {
      double lo = 0.0;
      double hi = h;
      State probe;
      while (hi - lo > opts.event_tol) {
        const double mid = 0.5 * (lo + hi);
        if (event_at(mid, probe)) hi = mid;
        else lo = mid;
      }
      State z_hi = step_to(hi);
      if (sys.jump_enabled(t + hi, j, z_hi)) {
        t = (last && hi == h) ? t_stop : t + hi;
        z = std::move(z_hi);
        push(t, z);
        continue;
      }
      // Leaving the flow set with no jump available: keep the last inside point.
      if (lo > 0.0) {
        z = step_to(lo);
        t += lo;
        push(t, z);
      }
      arc.termination = Termination::DeadSolution;
      return arc;
    }

    t = last ? t_stop : t + h;
    z = std::move(z1);
    push(t, z);
  }
}

HybridArc map_arc_time(const HybridArc& arc, const GainLaw& law, double mu0, TimeDirection direction) {
  HybridArc out = arc;
  for (auto& seg : out.segments) {
    for (auto& s : seg.samples) {
      s.t = direction == TimeDirection::ToDilated ? dilate(law, mu0, s.t) : contract(law, mu0, s.t);
    }
  }
  return out;
}

State sample_at(const HybridArc& arc, double t, int j) {
  if (j < 0 || j >= static_cast<int>(arc.segments.size())) {
    throw Error(ErrorKind::OutOfDomain, "sample_at: jump index " + std::to_string(j) + " not in the arc");
  }
  const auto& samples = arc.segments[static_cast<std::size_t>(j)].samples;
  const double first = samples.front().t;
  const double last = samples.back().t;
  const double slack = 1e-12 * std::max(1.0, std::abs(last));
  if (t < first - slack || t > last + slack) {
    std::ostringstream os;
    os << "sample_at: (" << t << ", " << j << ") outside segment [" << first << ", " << last << "]";
    throw Error(ErrorKind::OutOfDomain, os.str());
  }
  if (t <= first) return samples.front().x;
  if (t >= last) return samples.back().x;
  auto it = std::upper_bound(samples.begin(), samples.end(), t,
                             [](double value, const ArcSample& s) { return value < s.t; });
  const auto& right = *it;
  const auto& left = *(it - 1);
  if (left.t == t) return left.x;
  const double w = (t - left.t) / (right.t - left.t);
  return (1.0 - w) * left.x + w * right.x;
}

double arc_sup_distance(const HybridArc& reference, const HybridArc& other, std::size_t components,
                        double time_slack) {
  if (reference.jump_count() != other.jump_count()) {
    throw Error(ErrorKind::OutOfDomain, "arc_sup_distance: jump counts differ");
  }
  const auto m = static_cast<Eigen::Index>(components);
  double worst = 0.0;
  for (const auto& seg : other.segments) {
    const auto& ref = reference.segments[static_cast<std::size_t>(seg.j)].samples;
    const double lo = ref.front().t;
    const double hi = ref.back().t;
    for (const auto& s : seg.samples) {
      if (s.t < lo - time_slack || s.t > hi + time_slack) {
        std::ostringstream os;
        os << "arc_sup_distance: t=" << s.t << " outside reference segment " << seg.j << " [" << lo << ", " << hi << "]";
        throw Error(ErrorKind::OutOfDomain, os.str());
      }
      const State x = sample_at(reference, std::clamp(s.t, lo, hi), seg.j);
      worst = std::max(worst, (x.head(m) - s.x.head(m)).lpNorm<Eigen::Infinity>());
    }
  }
  return worst;
}

void write_trace_csv(std::ostream& out, const HybridArc& arc, const std::vector<std::string>& labels,
                     const std::optional<GainLaw>& law, double mu0) {
  out << "t,j,s";
  for (const auto& l : labels) out << ',' << l;
  out << '\n';
  const auto old_precision = out.precision(17);
  for (const auto& seg : arc.segments) {
    for (const auto& s : seg.samples) {
      out << s.t << ',' << seg.j << ',';
      if (law) out << dilate(*law, mu0, s.t);
      for (Eigen::Index i = 0; i < s.x.size(); ++i) out << ',' << s.x(i);
      out << '\n';
    }
  }
  out.precision(old_precision);
}

}  // namespace spthe
