#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spthe/errors.hpp"
#include "spthe/experiment.hpp"

namespace {

using namespace spthe;

enum Exit { kOk = 0, kValidation = 1, kCertificate = 2, kIo = 3 };

int exit_code(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::Io: return kIo;
    case ErrorKind::NegativeLambda: return kCertificate;
    default: return kValidation;
  }
}

std::vector<double> split_numbers(const std::string& text, char sep) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, sep)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw Error(ErrorKind::Validation, "cannot read number '" + cell + "' in '" + text + "'");
    }
  }
  return out;
}

int finish_run(const ExperimentConfig& cfg, const std::string& out_dir) {
  const ExperimentOutcome outcome = run_experiment(cfg);
  write_outputs(cfg, outcome, out_dir);
  std::cout << format_report(cfg, outcome);
  std::cout << "outputs written to " << out_dir << '\n';
  const bool switching_ok = outcome.result.dadt.ok && outcome.result.daat.ok;
  return switching_ok && outcome.constants.certified ? kOk : kCertificate;
}

int cmd_example(const std::string& variant_text, const std::string& out_dir, std::uint64_t seed, double eps_stop) {
  const auto variant = parse_variant(variant_text);
  if (!variant) throw Error(ErrorKind::Validation, "unknown variant '" + variant_text + "' (standard, he, pt)");
  return finish_run(section5_experiment(*variant, seed, eps_stop), out_dir);
}

int cmd_simulate(const std::string& config, const std::string& out_dir, std::optional<std::uint64_t> seed) {
  ExperimentConfig cfg = load_experiment(config);
  if (seed) cfg.seed = *seed;
  return finish_run(cfg, out_dir);
}

int cmd_bounds(const std::string& config, const std::string& times, const std::string& jumps) {
  const ExperimentConfig cfg = load_experiment(config);
  std::vector<int> js;
  if (!jumps.empty()) {
    for (double j : split_numbers(jumps, ',')) js.push_back(static_cast<int>(j));
  }
  std::cout << bounds_report(cfg, times.empty() ? std::vector<double>{} : split_numbers(times, ','), js);
  return theorem_constants(cfg.estimator).certified ? kOk : kCertificate;
}

int cmd_verify(const std::string& trace_path, const std::string& config, const std::string& law_text,
               const std::string& params_text, const std::string& inactive_text) {
  std::ifstream in(trace_path);
  if (!in) throw Error(ErrorKind::Io, "cannot read trace " + trace_path);
  const SwitchingSignal sig = read_trace_switching(in);

  GainLaw law = GainLaw::frozen();
  double mu0 = 1.0;
  AutomatonParams params;
  std::set<int> inactive;
  if (!config.empty()) {
    const ExperimentConfig cfg = load_experiment(config);
    law = cfg.estimator.law;
    mu0 = cfg.estimator.mu0;
    params = cfg.estimator.automaton;
    inactive = params.inactive_modes();
  } else {
    if (law_text.empty()) throw Error(ErrorKind::Validation, "verify-switching needs --config or --law");
    std::stringstream ss(law_text);
    std::string ell;
    std::string rest;
    std::getline(ss, ell, ':');
    std::getline(ss, rest);
    const auto nums = rest.empty() ? std::vector<double>{} : split_numbers(rest, ':');
    if (ell == "frozen") {
      law = GainLaw::frozen();
      if (!nums.empty()) mu0 = nums.back();
    } else {
      if (nums.empty() || nums.size() > 2) throw Error(ErrorKind::Validation, "--law expects ell:upsilon[:mu0]");
      law = parse_gain_law(ell, nums[0]);
      if (nums.size() == 2) mu0 = nums[1];
    }
    if (!params_text.empty()) {
      const auto p = split_numbers(params_text, ':');
      if (p.size() != 4) throw Error(ErrorKind::Validation, "--params expects tau_d:tau_a:n0:t0");
      params.tau_d = p[0];
      params.tau_a = p[1];
      params.n0 = p[2];
      params.t0 = p[3];
    }
    if (!inactive_text.empty()) {
      for (double q : split_numbers(inactive_text, ',')) inactive.insert(static_cast<int>(q));
    }
  }

  const ConstraintReport dadt = verify_dadt(sig, law, mu0, params.tau_d, params.n0);
  const ConstraintReport daat = verify_daat(sig, law, mu0, params.tau_a, params.t0, inactive);
  std::cout << "jumps = " << sig.jumps.size() << '\n';
  for (const auto* rep : {&dadt, &daat}) {
    std::cout << rep->name << ": " << (rep->ok ? "OK" : "FAIL") << " worst margin " << rep->worst_margin;
    if (rep->witness) std::cout << " on [" << rep->witness->first << ", " << rep->witness->second << "]";
    std::cout << '\n';
  }
  return dadt.ok && daat.ok ? kOk : kCertificate;
}

int cmd_classify(const std::string& path) {
  std::cout << classification_report(load_registry(path));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Switched concurrent learning with dynamic gains: experiments and checks"};
  app.require_subcommand(1);

  std::string variant = "pt";
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  double eps_stop = 0.01;
  auto* example = app.add_subcommand("example", "Run one of the reference variants");
  example->add_option("--variant", variant, "standard, he or pt")->capture_default_str();
  example->add_option("--out", out_dir, "Output directory")->capture_default_str();
  example->add_option("--seed", seed, "Switching policy seed")->capture_default_str();
  example->add_option("--eps-stop", eps_stop, "Stop at (1 - eps) of the escape time")->capture_default_str();

  std::string config;
  std::optional<std::uint64_t> sim_seed;
  auto* simulate = app.add_subcommand("simulate", "Run an experiment from a JSON config");
  simulate->add_option("--config", config, "Experiment config")->required();
  simulate->add_option("--out", out_dir, "Output directory")->capture_default_str();
  simulate->add_option("--seed", sim_seed, "Override the config seed");

  std::string times;
  std::string jumps;
  auto* bounds = app.add_subcommand("bounds", "Print certificate constants and bound values");
  bounds->add_option("--config", config, "Experiment config")->required();
  bounds->add_option("--times", times, "Comma-separated real times");
  bounds->add_option("--jumps", jumps, "Comma-separated jump counts");

  std::string trace;
  std::string law;
  std::string params;
  std::string inactive;
  auto* verify = app.add_subcommand("verify-switching", "Check the dilated dwell and activation constraints");
  verify->add_option("trace", trace, "Trace CSV with t, j, q columns")->required();
  verify->add_option("--config", config, "Take law and automaton parameters from a config");
  verify->add_option("--law", law, "ell:upsilon[:mu0], e.g. inf:8:1");
  verify->add_option("--params", params, "tau_d:tau_a:n0:t0");
  verify->add_option("--inactive", inactive, "Comma-separated inactive modes");

  std::string registry;
  auto* classify = app.add_subcommand("classify-dataset", "Classify every dataset in a registry file");
  classify->add_option("registry", registry, "Registry JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kValidation;
  }

  try {
    if (*example) return cmd_example(variant, out_dir, seed, eps_stop);
    if (*simulate) return cmd_simulate(config, out_dir, sim_seed);
    if (*bounds) return cmd_bounds(config, times, jumps);
    if (*verify) return cmd_verify(trace, config, law, params, inactive);
    if (*classify) return cmd_classify(registry);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  }
  return kValidation;
}
