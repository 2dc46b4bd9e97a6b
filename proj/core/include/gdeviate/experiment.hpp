#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gdeviate/forward_sde.hpp"

namespace gdeviate {

inline constexpr const char* kVersion = "gdeviate 1.0.0";

struct ExperimentConfig {
  std::string model = "canonical";
  std::map<std::string, double> params;
  double sigma_low = 0.5;
  double sigma_high = 1.0;
  double x = 0.3;
  double s = 0.0;
  double T = 1.0;
  int n_steps = 1000;
  int n_x = 2500;
  double radius = 0.0;  // <= 0: default domain radius
  std::vector<double> eps = {0.2, 0.1, 0.05, 0.025};
  int ensemble_size = 8;
  int mc_per_control = 200;
  std::uint64_t seed = 20240611;
  double p = 2.0;
  double delta = 0.5;
  double k_tol_scale = 0.01;
  double membership_tol = 0.0;  // <= 0: default_membership_tol
  std::string output_dir = "gdeviate_out";

  bool operator==(const ExperimentConfig&) const = default;
};

// Thrown for config documents that fail validation; the message names the field.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& config);
void validate_config(const ExperimentConfig& config);

// Named model functions. "canonical" is the acceptance model
// b = -x, h = 0.2, sigma = 1/(1+0.1x^2) + 0.5, f = -y + 0.1z, g = 0.5cos(x),
// Phi = tanh; "pure-noise" has b = h = f = g = 0, sigma = 1, Phi = x;
// "heat-quadratic" is pure-noise with Phi = x^2. `params` overrides the
// numeric constants of the canonical model.
CoefficientSet make_model(const std::string& name,
                          const std::map<std::string, double>& params = {});

struct SlopeReport {
  std::vector<std::pair<double, double>> pairs;  // pairs actually fitted
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  int excluded = 0;
};

// Least squares on (log eps, log statistic); nonpositive statistics are
// dropped and counted, fewer than three survivors is rejected.
SlopeReport fit_slope(const std::vector<std::pair<double, double>>& pairs);

const std::vector<std::string>& experiment_names();

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitInvalidConfig = 3,
  kExitNumerical = 4,
};

struct RunResult {
  int exit_code = kExitOk;
  std::string message;
  std::vector<std::string> files;  // written, relative to the output directory
};

// Runs one named pipeline and writes CSVs plus manifest.json into
// config.output_dir.
RunResult run_experiment(const ExperimentConfig& config, const std::string& experiment);

// Shortest round-trip decimal rendering used in every CSV.
std::string format_real(double v);

}  // namespace gdeviate
