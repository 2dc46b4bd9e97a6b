// gdeviate <experiment> --config <path> [--out <dir>] [--seed <n>] [--eps <list>]

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "gdeviate/experiment.hpp"

namespace {

std::string join_names() {
  std::string out;
  for (const auto& n : gdeviate::experiment_names()) out += (out.empty() ? "" : ", ") + n;
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Small-noise G-expectation experiments"};
  std::string experiment;
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::string eps_list;
  app.add_option("experiment", experiment, "One of: " + join_names())->required();
  app.add_option("--config", config_path, "JSON experiment config")->required();
  auto* out_opt = app.add_option("--out", out_dir, "Output directory (overrides config)");
  auto* seed_opt = app.add_option("--seed", seed, "Master seed (overrides config)");
  auto* eps_opt = app.add_option("--eps", eps_list, "Comma-separated eps ladder (overrides config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : gdeviate::kExitUsage;
  }

  const auto& names = gdeviate::experiment_names();
  if (std::find(names.begin(), names.end(), experiment) == names.end()) {
    std::cerr << "error: unknown experiment '" << experiment << "' (expected " << join_names()
              << ")\n";
    return gdeviate::kExitUsage;
  }

  gdeviate::ExperimentConfig config;
  try {
    std::ifstream in(config_path);
    if (!in) throw gdeviate::ConfigError("cannot read config file '" + config_path + "'");
    std::stringstream text;
    text << in.rdbuf();
    config = gdeviate::config_from_json(text.str());
    if (*out_opt) config.output_dir = out_dir;
    if (*seed_opt) config.seed = seed;
    if (*eps_opt) {
      config.eps.clear();
      std::stringstream items(eps_list);
      std::string item;
      while (std::getline(items, item, ',')) {
        try {
          config.eps.push_back(std::stod(item));
        } catch (const std::exception&) {
          throw gdeviate::ConfigError("field 'eps': cannot parse '" + item + "'");
        }
      }
    }
    gdeviate::validate_config(config);
  } catch (const gdeviate::ConfigError& e) {
    std::cerr << "error: invalid config: " << e.what() << "\n";
    return gdeviate::kExitInvalidConfig;
  }

  const gdeviate::RunResult result = gdeviate::run_experiment(config, experiment);
  if (result.exit_code != gdeviate::kExitOk) {
    std::cerr << "error: " << result.message << "\n";
    return result.exit_code;
  }
  for (const auto& f : result.files) std::cout << config.output_dir << "/" << f << "\n";
  return 0;
}
