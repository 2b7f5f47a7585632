#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "spthe/estimator.hpp"

namespace spthe {

enum class Variant { Standard, He, Pt };

std::optional<Variant> parse_variant(const std::string& text);
std::string to_string(Variant variant);

struct ExperimentConfig {
  std::string name = "experiment";
  EstimatorConfig estimator;
  SwitchingPolicy policy = RandomPolicy{};
  std::uint64_t seed = 0;
  RunOptions run;
};

/// The reference setup: datasets 1-4 recorded from the sinusoidal regressor
/// with d = tanh / 4, Upsilon = 8, k_t = k_r = 1, T0 = 1, N0 = 2, tau_d = 2,
/// tau_a = 25. `Standard` freezes the gain and queries dataset 2 only; `He`
/// uses ell = 1 up to t = 8; `Pt` uses ell = inf with escape time 8.
ExperimentConfig section5_experiment(Variant variant, std::uint64_t seed = 0, double eps_stop = 0.01);

/// Same truth without disturbance and a single dataset held for the whole run.
ExperimentConfig clean_experiment(const GainLaw& law, double mu0, int dataset_id, double horizon = 8.0);

/// Parses a JSON experiment document (schema in the README). Dataset files
/// are resolved against `base_dir`. Errors are Validation with a line number.
ExperimentConfig parse_experiment(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment(const std::filesystem::path& path);

struct ExperimentOutcome {
  RunResult result;
  TheoremConstants constants;
  double u_sup = 0.0;
  double vartheta0_norm = 0.0;
  double final_error = 0.0;
  std::optional<BoundCurve> bound;  // set when certified
};

ExperimentOutcome run_experiment(const ExperimentConfig& cfg);

/// Writes trace.csv, report.txt, constants.json, registry.json and error.svg.
void write_outputs(const ExperimentConfig& cfg, const ExperimentOutcome& outcome,
                   const std::filesystem::path& out_dir);

std::string format_report(const ExperimentConfig& cfg, const ExperimentOutcome& outcome);
std::string format_constants(const TheoremConstants& constants);
std::string constants_json(const TheoremConstants& constants, double u_sup, double vartheta0_norm);
/// One line per dataset: id, class, alpha, spectral norm of the data matrix.
std::string classification_report(const DatasetRegistry& registry);
/// Constants followed by bound values on a (t, j) grid.
std::string bounds_report(const ExperimentConfig& cfg, const std::vector<double>& times,
                          const std::vector<int>& jumps);

/// Switching signal stored in a trace CSV with t, j and q columns.
SwitchingSignal read_trace_switching(std::istream& in);

/// Polyline of log10 |theta - theta*| against t.
std::string error_svg(const std::vector<double>& t, const std::vector<double>& err, const std::string& title);

}  // namespace spthe
