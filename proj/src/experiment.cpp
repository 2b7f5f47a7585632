#include "spthe/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "spthe/errors.hpp"

namespace spthe {

using nlohmann::json;

std::optional<Variant> parse_variant(const std::string& text) {
  if (text == "standard") return Variant::Standard;
  if (text == "he") return Variant::He;
  if (text == "pt") return Variant::Pt;
  return std::nullopt;
}

std::string to_string(Variant variant) {
  switch (variant) {
    case Variant::Standard: return "standard";
    case Variant::He: return "he";
    case Variant::Pt: return "pt";
  }
  return "?";
}

namespace {

constexpr double kReferenceUpsilon = 8.0;
constexpr double kReferenceHorizon = 8.0;

EstimatorConfig reference_estimator(const SignalModel& model, const DatasetRegistry& registry, const GainLaw& law,
                                    double mu0) {
  EstimatorConfig est;
  est.law = law;
  est.mu0 = mu0;
  est.model = model;
  est.registry = registry;
  est.automaton = AutomatonParams{2.0, 25.0, 2.0, 1.0, registry.partition()};
  est.theta0 = Vector::Zero(static_cast<Eigen::Index>(model.dimension()));
  return est;
}

}  // namespace

ExperimentConfig section5_experiment(Variant variant, std::uint64_t seed, double eps_stop) {
  const SignalModel model = section5_model();
  const DatasetRegistry full = section5_registry(model);
  ExperimentConfig cfg;
  cfg.name = "section5-" + to_string(variant);
  cfg.seed = seed;
  cfg.run.eps_stop = eps_stop;
  RandomPolicy random;
  random.initial_mode = 1;
  switch (variant) {
    case Variant::Standard:
      cfg.estimator = reference_estimator(model, full.subset({2}), GainLaw::frozen(), 1.0);
      cfg.policy = ScriptedPolicy{{{0.0, 2}}, false};
      cfg.run.horizon = kReferenceHorizon;
      break;
    case Variant::He:
      cfg.estimator = reference_estimator(model, full, GainLaw::exponential(kReferenceUpsilon), 1.0);
      cfg.policy = random;
      cfg.run.horizon = kReferenceHorizon;
      break;
    case Variant::Pt: {
      const GainLaw law = GainLaw::prescribed(kReferenceUpsilon);
      cfg.estimator = reference_estimator(model, full, law, mu0_for_prescribed_time(law, kReferenceHorizon));
      cfg.policy = random;
      break;
    }
  }
  return cfg;
}

ExperimentConfig clean_experiment(const GainLaw& law, double mu0, int dataset_id, double horizon) {
  SignalModel model = section5_model();
  model.system = model.system.without_disturbance();
  ExperimentConfig cfg;
  cfg.name = "clean-" + std::to_string(dataset_id);
  cfg.estimator = reference_estimator(model, section5_registry(model).subset({dataset_id}), law, mu0);
  cfg.policy = ScriptedPolicy{{{0.0, dataset_id}}, false};
  cfg.run.horizon = horizon;
  return cfg;
}

// ---- config parsing -----------------------------------------------------------

namespace {

int line_at(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

class ConfigReader {
 public:
  explicit ConfigReader(const std::string& text) : text_(text) {}

  [[noreturn]] void fail(const std::string& path, const std::string& message) const {
    const auto dot = path.find_last_of('.');
    const std::string key = dot == std::string::npos ? path : path.substr(dot + 1);
    const auto pos = key.empty() ? std::string::npos : text_.find('"' + key + '"');
    std::ostringstream os;
    os << "config";
    if (pos != std::string::npos) os << " line " << line_at(text_, pos);
    os << ": " << path << ": " << message;
    throw Error(ErrorKind::Validation, os.str());
  }

  void only_keys(const json& obj, const std::string& path, std::initializer_list<const char*> keys) const {
    if (!obj.is_object()) fail(path, "expected an object");
    for (const auto& item : obj.items()) {
      if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return item.key() == k; })) {
        fail(join(path, item.key()), "unknown key");
      }
    }
  }

  double number(const json& obj, const std::string& path, const char* key, std::optional<double> fallback) const {
    const std::string where = join(path, key);
    if (!obj.contains(key)) {
      if (!fallback) fail(where, "missing required number");
      return *fallback;
    }
    const json& v = obj.at(key);
    if (!v.is_number()) fail(where, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(where, "expected a finite number");
    return x;
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

 private:
  const std::string& text_;
};

GainLaw read_law(const ConfigReader& r, const json& j, double& mu0) {
  r.only_keys(j, "law", {"ell", "upsilon", "mu0", "prescribed_time"});
  if (!j.contains("ell")) r.fail("law.ell", "missing (number, \"inf\" or \"frozen\")");
  const json& ell = j.at("ell");
  GainLaw law = GainLaw::frozen();
  try {
    if (ell.is_string() && ell.get<std::string>() == "frozen") {
      law = GainLaw::frozen();
    } else {
      const double ups = r.number(j, "law", "upsilon", std::nullopt);
      if (ell.is_string()) law = parse_gain_law(ell.get<std::string>(), ups);
      else if (ell.is_number()) law = GainLaw::power(ell.get<double>(), ups);
      else r.fail("law.ell", "expected a number, \"inf\" or \"frozen\"");
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Validation && std::string(e.what()).rfind("config", 0) == 0) throw;
    r.fail("law.ell", e.what());
  }
  if (j.contains("prescribed_time")) {
    if (j.contains("mu0")) r.fail("law.prescribed_time", "give either mu0 or prescribed_time, not both");
    if (!law.has_blow_up()) r.fail("law.prescribed_time", "only laws with ell > 1 have an escape time");
    try {
      mu0 = mu0_for_prescribed_time(law, r.number(j, "law", "prescribed_time", std::nullopt));
    } catch (const Error& e) {
      if (std::string(e.what()).rfind("config", 0) == 0) throw;
      r.fail("law.prescribed_time", e.what());
    }
  } else {
    mu0 = r.number(j, "law", "mu0", 1.0);
    if (mu0 < 1.0) r.fail("law.mu0", "must be >= 1");
  }
  return law;
}

int read_int(const ConfigReader& r, const json& v, const std::string& path) {
  if (!v.is_number_integer()) r.fail(path, "expected an integer");
  return v.get<int>();
}

SwitchingPolicy read_policy(const ConfigReader& r, const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
    r.fail("policy.kind", "expected \"random\" or \"scripted\"");
  }
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "random") {
    r.only_keys(j, "policy", {"kind", "min_dwell", "max_dwell", "weights", "initial_mode"});
    RandomPolicy p;
    p.min_dwell = r.number(j, "policy", "min_dwell", p.min_dwell);
    p.max_dwell = r.number(j, "policy", "max_dwell", p.max_dwell);
    if (!(p.min_dwell > 0.0) || p.max_dwell < p.min_dwell) r.fail("policy.min_dwell", "need 0 < min_dwell <= max_dwell");
    if (j.contains("weights")) {
      const json& w = j.at("weights");
      if (!w.is_object()) r.fail("policy.weights", "expected an object mapping mode ids to weights");
      for (const auto& item : w.items()) {
        int id = 0;
        try {
          std::size_t used = 0;
          id = std::stoi(item.key(), &used);
          if (used != item.key().size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
          r.fail("policy.weights." + item.key(), "mode ids must be integers");
        }
        if (!item.value().is_number() || item.value().get<double>() < 0.0) {
          r.fail("policy.weights." + item.key(), "weights must be nonnegative numbers");
        }
        p.weights[id] = item.value().get<double>();
      }
    }
    if (j.contains("initial_mode")) p.initial_mode = read_int(r, j.at("initial_mode"), "policy.initial_mode");
    return p;
  }
  if (kind == "scripted") {
    r.only_keys(j, "policy", {"kind", "segments", "repeat"});
    ScriptedPolicy p;
    if (!j.contains("segments") || !j.at("segments").is_array() || j.at("segments").empty()) {
      r.fail("policy.segments", "expected a nonempty array of [dwell, mode] pairs");
    }
    for (const auto& seg : j.at("segments")) {
      if (!seg.is_array() || seg.size() != 2 || !seg[0].is_number()) {
        r.fail("policy.segments", "each entry must be [dwell, mode]");
      }
      p.segments.emplace_back(seg[0].get<double>(), read_int(r, seg[1], "policy.segments"));
    }
    if (j.contains("repeat")) {
      if (!j.at("repeat").is_boolean()) r.fail("policy.repeat", "expected true or false");
      p.repeat = j.at("repeat").get<bool>();
    }
    return p;
  }
  r.fail("policy.kind", "expected \"random\" or \"scripted\"");
}

}  // namespace

ExperimentConfig parse_experiment(const std::string& text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::ostringstream os;
    os << "config line " << line_at(text, e.byte == 0 ? 0 : e.byte - 1) << ": malformed JSON (" << e.what() << ")";
    throw Error(ErrorKind::Validation, os.str());
  }
  const ConfigReader r(text);
  r.only_keys(doc, "", {"version", "name", "model", "disturbance", "datasets", "law", "weights", "automaton",
                        "policy", "seed", "theta0", "run"});
  if (!doc.contains("version") || !doc.at("version").is_number_integer() || doc.at("version").get<int>() != 1) {
    r.fail("version", "must be 1");
  }

  ExperimentConfig cfg;
  if (doc.contains("name")) {
    if (!doc.at("name").is_string()) r.fail("name", "expected a string");
    cfg.name = doc.at("name").get<std::string>();
  }
  const std::string model_name = doc.value("model", std::string("section5"));
  if (model_name != "section5") r.fail("model", "only the built-in \"section5\" model is available");
  SignalModel model = section5_model();
  if (doc.contains("disturbance")) {
    if (!doc.at("disturbance").is_boolean()) r.fail("disturbance", "expected true or false");
    if (!doc.at("disturbance").get<bool>()) model.system = model.system.without_disturbance();
  }

  DatasetRegistry registry;
  if (doc.contains("datasets")) {
    const json& d = doc.at("datasets");
    r.only_keys(d, "datasets", {"file", "use"});
    if (d.contains("file")) {
      if (!d.at("file").is_string()) r.fail("datasets.file", "expected a path");
      registry = load_registry(base_dir / d.at("file").get<std::string>());
    } else {
      registry = section5_registry(model);
    }
    if (d.contains("use")) {
      std::vector<int> ids;
      if (!d.at("use").is_array()) r.fail("datasets.use", "expected an array of dataset ids");
      for (const auto& v : d.at("use")) ids.push_back(read_int(r, v, "datasets.use"));
      try {
        registry = registry.subset(ids);
      } catch (const Error& e) {
        r.fail("datasets.use", e.what());
      }
    }
  } else {
    registry = section5_registry(model);
  }

  double mu0 = 1.0;
  if (!doc.contains("law")) r.fail("law", "missing");
  const GainLaw law = read_law(r, doc.at("law"), mu0);
  EstimatorConfig est = reference_estimator(model, registry, law, mu0);

  if (doc.contains("weights")) {
    const json& w = doc.at("weights");
    r.only_keys(w, "weights", {"k_t", "k_r"});
    est.k_t = r.number(w, "weights", "k_t", 1.0);
    est.k_r = r.number(w, "weights", "k_r", 1.0);
    if (!(est.k_t > 0.0)) r.fail("weights.k_t", "must be positive");
    if (!(est.k_r > 0.0)) r.fail("weights.k_r", "must be positive");
  }
  if (doc.contains("automaton")) {
    const json& a = doc.at("automaton");
    r.only_keys(a, "automaton", {"tau_d", "tau_a", "n0", "t0"});
    est.automaton.tau_d = r.number(a, "automaton", "tau_d", est.automaton.tau_d);
    est.automaton.tau_a = r.number(a, "automaton", "tau_a", est.automaton.tau_a);
    est.automaton.n0 = r.number(a, "automaton", "n0", est.automaton.n0);
    est.automaton.t0 = r.number(a, "automaton", "t0", est.automaton.t0);
    if (!(est.automaton.tau_d > 0.0)) r.fail("automaton.tau_d", "must be positive");
    if (!(est.automaton.tau_a > 1.0)) r.fail("automaton.tau_a", "must exceed 1");
    if (!(est.automaton.n0 >= 1.0)) r.fail("automaton.n0", "must be >= 1");
    if (!(est.automaton.t0 > 0.0)) r.fail("automaton.t0", "must be positive");
  }
  if (doc.contains("theta0")) {
    const json& t = doc.at("theta0");
    const auto n = static_cast<std::size_t>(est.theta0.size());
    if (!t.is_array() || t.size() != n) r.fail("theta0", "expected an array of " + std::to_string(n) + " numbers");
    for (std::size_t i = 0; i < n; ++i) {
      if (!t[i].is_number()) r.fail("theta0", "expected numbers");
      est.theta0(static_cast<Eigen::Index>(i)) = t[i].get<double>();
    }
  }
  cfg.estimator = std::move(est);

  if (doc.contains("policy")) cfg.policy = read_policy(r, doc.at("policy"));
  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_unsigned()) r.fail("seed", "expected a nonnegative integer");
    cfg.seed = doc.at("seed").get<std::uint64_t>();
  }
  if (doc.contains("run")) {
    const json& j = doc.at("run");
    r.only_keys(j, "run", {"mode", "dt", "eps_stop", "horizon"});
    if (j.contains("mode")) {
      const std::string mode = j.at("mode").is_string() ? j.at("mode").get<std::string>() : "";
      if (mode == "dilated") cfg.run.mode = RunMode::Dilated;
      else if (mode == "direct") cfg.run.mode = RunMode::Direct;
      else r.fail("run.mode", "expected \"dilated\" or \"direct\"");
    }
    cfg.run.dt = r.number(j, "run", "dt", cfg.run.dt);
    cfg.run.eps_stop = r.number(j, "run", "eps_stop", cfg.run.eps_stop);
    if (j.contains("horizon")) cfg.run.horizon = r.number(j, "run", "horizon", std::nullopt);
    if (!(cfg.run.dt > 0.0)) r.fail("run.dt", "must be positive");
    if (!(cfg.run.eps_stop > 0.0 && cfg.run.eps_stop < 1.0)) r.fail("run.eps_stop", "must lie in (0, 1)");
    if (cfg.run.horizon && !(*cfg.run.horizon > 0.0)) r.fail("run.horizon", "must be positive");
  }
  if (!cfg.estimator.law.has_blow_up() && !cfg.run.horizon) {
    r.fail("run.horizon", "required when the law has no escape time");
  }
  cfg.estimator.validate();
  return cfg;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_experiment(buffer.str(), path.parent_path());
}

// ---- running and reporting ------------------------------------------------------

ExperimentOutcome run_experiment(const ExperimentConfig& cfg) {
  ExperimentOutcome out;
  out.result = run(cfg.estimator, cfg.policy, cfg.seed, cfg.run);
  out.constants = theorem_constants(cfg.estimator);
  out.u_sup = input_bound(cfg.estimator);
  out.vartheta0_norm = (cfg.estimator.theta0 - cfg.estimator.model.system.theta_star).norm();
  out.final_error = final_error(cfg.estimator, out.result.arc);
  if (out.constants.certified) {
    out.bound = bound_curve(out.constants, cfg.estimator.law, cfg.estimator.mu0, out.vartheta0_norm, out.u_sup);
  }
  return out;
}

namespace {

std::string describe_report(const ConstraintReport& rep) {
  std::ostringstream os;
  os << std::setprecision(6) << rep.name << ": " << (rep.ok ? "OK" : "FAIL") << " worst margin " << rep.worst_margin;
  if (rep.witness) os << " on [" << rep.witness->first << ", " << rep.witness->second << "]";
  return os.str();
}

std::string condition_b_line(const EstimatorConfig& est, const TheoremConstants& c) {
  std::ostringstream os;
  os << std::setprecision(6);
  const double threshold = 1.0 + c.varpi / c.kappa_lower;
  os << (c.certified ? "condition (b) satisfied" : "condition (b) violated") << ": tau_a = " << est.automaton.tau_a
     << (c.certified ? " > " : " <= ") << "1 + varpi / (k_r alpha_min) = " << threshold;
  return os.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace

std::string format_constants(const TheoremConstants& c) {
  std::ostringstream os;
  os << std::setprecision(8);
  os << "kappa_lower = " << c.kappa_lower << '\n'
     << "varpi = " << c.varpi << '\n'
     << "zeta = " << c.zeta << '\n'
     << "lambda = " << c.lambda << '\n'
     << "c_lower = " << c.c_lower << '\n'
     << "c_upper = " << c.c_upper << '\n'
     << "eta_bar = " << c.eta_bar << '\n'
     << "gamma = " << c.gamma << '\n'
     << "kappa1 = " << c.kappa1 << '\n'
     << "kappa2 = " << c.kappa2 << '\n'
     << "kappa3 = " << c.kappa3 << '\n'
     << "certified = " << (c.certified ? "yes" : "no") << '\n';
  return os.str();
}

std::string constants_json(const TheoremConstants& c, double u_sup, double vartheta0_norm) {
  json j = {{"kappa_lower", c.kappa_lower}, {"varpi", c.varpi}, {"zeta", c.zeta},   {"lambda", c.lambda},
            {"c_lower", c.c_lower},         {"c_upper", c.c_upper}, {"eta_bar", c.eta_bar}, {"gamma", c.gamma},
            {"kappa1", c.kappa1},           {"kappa2", c.kappa2}, {"kappa3", c.kappa3}, {"certified", c.certified},
            {"u_sup", u_sup},               {"vartheta0_norm", vartheta0_norm}};
  return j.dump(2) + "\n";
}

std::string classification_report(const DatasetRegistry& registry) {
  std::ostringstream os;
  os << std::setprecision(6);
  for (int id : registry.ids()) {
    const Dataset& ds = registry.at(id);
    const auto& cls = ds.classification();
    os << id << ' ' << to_string(cls.kind) << " alpha=";
    if (cls.kind == DataClass::SufficientlyRich) os << cls.alpha;
    else os << '-';
    os << " norm=" << spectral_norm(ds.data_matrix()) << '\n';
  }
  return os.str();
}

std::string format_report(const ExperimentConfig& cfg, const ExperimentOutcome& outcome) {
  const auto& est = cfg.estimator;
  const auto& res = outcome.result;
  std::ostringstream os;
  os << std::setprecision(8);
  os << "experiment: " << cfg.name << '\n';
  os << "law: " << est.law.describe() << ", mu0 = " << est.mu0;
  if (est.law.has_blow_up()) os << ", escape time " << blow_up_time(est.law, est.mu0);
  os << '\n';
  os << "weights: k_t = " << est.k_t << ", k_r = " << est.k_r << '\n';
  os << "automaton: tau_d = " << est.automaton.tau_d << ", tau_a = " << est.automaton.tau_a
     << ", N0 = " << est.automaton.n0 << ", T0 = " << est.automaton.t0 << '\n';
  os << "run: " << (cfg.run.mode == RunMode::Dilated ? "dilated" : "direct") << " time, dt = " << cfg.run.dt
     << ", seed = " << cfg.seed << ", t_end = " << res.t_end << ", s_end = " << res.s_end
     << ", termination = " << to_string(res.arc.termination) << '\n';
  os << "\n[datasets]\n" << classification_report(est.registry);
  os << "\n[switching]\njumps = " << res.arc.jump_count() << '\n'
     << describe_report(res.dadt) << '\n'
     << describe_report(res.daat) << '\n';
  os << "\n[certificate]\n" << format_constants(outcome.constants) << condition_b_line(est, outcome.constants) << '\n'
     << "u_sup = " << outcome.u_sup << '\n'
     << "|theta0 - theta*| = " << outcome.vartheta0_norm << '\n';
  if (outcome.bound) {
    const auto& last = res.arc.back();
    os << "bound at end = " << (*outcome.bound)(last.t, res.arc.jump_count()) << '\n';
  }
  os << "\n[result]\nfinal error = " << outcome.final_error << '\n';
  return os.str();
}

void write_outputs(const ExperimentConfig& cfg, const ExperimentOutcome& outcome,
                   const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + out_dir.string() + ": " + ec.message());

  std::ostringstream trace;
  write_diagnostics_csv(trace, cfg.estimator, outcome.result.arc, outcome.bound);
  write_file(out_dir / "trace.csv", trace.str());
  write_file(out_dir / "report.txt", format_report(cfg, outcome));
  write_file(out_dir / "constants.json", constants_json(outcome.constants, outcome.u_sup, outcome.vartheta0_norm));
  write_file(out_dir / "registry.json", registry_to_json(cfg.estimator.registry));

  std::vector<double> ts;
  for (const auto& seg : outcome.result.arc.segments) {
    for (const auto& s : seg.samples) ts.push_back(s.t);
  }
  write_file(out_dir / "error.svg", error_svg(ts, error_trace(cfg.estimator, outcome.result.arc), cfg.name));
}

std::string bounds_report(const ExperimentConfig& cfg, const std::vector<double>& times, const std::vector<int>& jumps) {
  const auto& est = cfg.estimator;
  const TheoremConstants c = theorem_constants(est);
  const double u_sup = input_bound(est);
  const double v0 = (est.theta0 - est.model.system.theta_star).norm();
  std::ostringstream os;
  os << std::setprecision(8) << format_constants(c) << condition_b_line(est, c) << '\n'
     << "u_sup = " << u_sup << '\n'
     << "|theta0 - theta*| = " << v0 << '\n';
  if (!c.certified) return os.str();

  const BoundCurve full = bound_curve(c, est.law, est.mu0, v0, u_sup);
  const BoundCurve transient = bound_curve(c, est.law, est.mu0, v0, 0.0);
  const double t_end = run_end_time(est, cfg.run);
  const double decay = c.kappa2 * dilate(est.law, est.mu0, t_end);
  os << "kappa2 * D(t_end) = " << decay << " at t_end = " << t_end << " (transient below 1e-6 |vartheta0| needs > "
     << -std::log(1e-6 / c.kappa1) << ")\n";

  std::vector<double> grid = times;
  if (grid.empty()) {
    for (double f : {0.0, 0.25, 0.5, 0.75, 0.9, 1.0}) grid.push_back(f * t_end);
  }
  const std::vector<int> js = jumps.empty() ? std::vector<int>{0, 1, 2, 5, 10} : jumps;
  os << "\n" << std::setw(12) << "t" << std::setw(6) << "j" << std::setw(18) << "bound" << std::setw(18)
     << "transient" << '\n';
  for (double t : grid) {
    for (int j : js) {
      os << std::setw(12) << t << std::setw(6) << j << std::setw(18) << full(t, j) << std::setw(18)
         << transient(t, j) << '\n';
    }
  }
  return os.str();
}

SwitchingSignal read_trace_switching(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Validation, "trace: empty file");
  auto split = [](const std::string& text) {
    std::vector<std::string> cells;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  const auto header = split(line);
  auto column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorKind::Validation, "trace: missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t ct = column("t");
  const std::size_t cj = column("j");
  const std::size_t cq = column("q");

  SwitchingSignal sig;
  int row = 1;
  int last_j = -1;
  bool first = true;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split(line);
    double t = 0.0;
    int j = 0;
    int q = 0;
    try {
      if (cells.size() <= std::max({ct, cj, cq})) throw std::invalid_argument("short row");
      t = std::stod(cells[ct]);
      j = std::stoi(cells[cj]);
      q = static_cast<int>(std::lround(std::stod(cells[cq])));
    } catch (const std::exception&) {
      throw Error(ErrorKind::Validation, "trace line " + std::to_string(row) + ": cannot read t, j, q");
    }
    if (first) {
      if (j != 0) throw Error(ErrorKind::Validation, "trace: first row must have j = 0");
      sig.initial_mode = q;
      first = false;
    } else if (j == last_j + 1) {
      sig.jumps.push_back({t, q});
    } else if (j != last_j) {
      throw Error(ErrorKind::Validation, "trace line " + std::to_string(row) + ": j must grow by 0 or 1");
    }
    last_j = j;
    sig.horizon = t;
  }
  if (first) throw Error(ErrorKind::Validation, "trace: no data rows");
  return sig;
}

std::string error_svg(const std::vector<double>& t, const std::vector<double>& err, const std::string& title) {
  constexpr double width = 640.0;
  constexpr double height = 400.0;
  constexpr double left = 60.0;
  constexpr double right = 20.0;
  constexpr double top = 30.0;
  constexpr double bottom = 40.0;
  const std::size_t count = std::min(t.size(), err.size());

  double t_max = 0.0;
  double y_lo = std::numeric_limits<double>::infinity();
  double y_hi = -std::numeric_limits<double>::infinity();
  std::vector<double> ys(count);
  for (std::size_t i = 0; i < count; ++i) {
    ys[i] = std::log10(std::max(err[i], 1e-16));
    t_max = std::max(t_max, t[i]);
    y_lo = std::min(y_lo, ys[i]);
    y_hi = std::max(y_hi, ys[i]);
  }
  if (count == 0 || t_max <= 0.0) {
    t_max = 1.0;
    y_lo = -1.0;
    y_hi = 0.0;
  }
  y_lo = std::floor(y_lo);
  y_hi = std::max(std::ceil(y_hi), y_lo + 1.0);
  auto px = [&](double x) { return left + (width - left - right) * x / t_max; };
  auto py = [&](double y) { return top + (height - top - bottom) * (y_hi - y) / (y_hi - y_lo); };

  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << left << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << title
     << ": log10 |theta - theta*|</text>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << height - bottom << "\" x2=\"" << width - right << "\" y2=\""
     << height - bottom << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << height - bottom
     << "\" stroke=\"black\"/>\n";
  for (double y = y_lo; y <= y_hi + 0.5; y += 1.0) {
    os << "<text x=\"" << left - 8 << "\" y=\"" << py(y) + 4 << "\" font-family=\"sans-serif\" font-size=\"11\" "
       << "text-anchor=\"end\">" << static_cast<int>(y) << "</text>\n";
  }
  for (int k = 0; k <= 4; ++k) {
    const double x = t_max * k / 4.0;
    os << "<text x=\"" << px(x) << "\" y=\"" << height - bottom + 16 << "\" font-family=\"sans-serif\" "
       << "font-size=\"11\" text-anchor=\"middle\">" << x << "</text>\n";
  }
  os << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
  const std::size_t stride = std::max<std::size_t>(1, count / 2000);
  for (std::size_t i = 0; i < count; i += stride) os << px(t[i]) << ',' << py(ys[i]) << ' ';
  if (count > 0) os << px(t[count - 1]) << ',' << py(ys[count - 1]);
  os << "\"/>\n</svg>\n";
  return os.str();
}

}  // namespace spthe
