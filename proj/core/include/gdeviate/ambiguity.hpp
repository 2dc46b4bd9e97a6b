#pragma once

// Ambiguity structure and scenario simulation of G-Brownian motion.
//
// The representing family of a G-expectation is approximated by a finite
// ensemble of volatility controls. Each control is a piecewise-constant
// quadratic-variation density a_k in [sigma_low^2, sigma_high^2]; driving it
// with standard normal draws yields one sample of (B, <B>). Sublinear
// expectations and capacities are then maxima, over the ensemble, of Monte
// Carlo means. Finite ensembles give lower bounds.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace gdeviate {

class AmbiguityInterval {
 public:
  AmbiguityInterval(double sigma_low, double sigma_high);

  double sigma_low() const { return sigma_low_; }
  double sigma_high() const { return sigma_high_; }
  double var_low() const { return sigma_low_ * sigma_low_; }
  double var_high() const { return sigma_high_ * sigma_high_; }
  bool contains_variance(double a) const { return a >= var_low() && a <= var_high(); }

 private:
  double sigma_low_;
  double sigma_high_;
};

class TimeGrid {
 public:
  TimeGrid(double t_start, double t_end, int n_steps);

  double t_start() const { return t_start_; }
  double t_end() const { return t_end_; }
  int n_steps() const { return n_steps_; }
  double dt() const { return dt_; }
  double horizon() const { return t_end_ - t_start_; }
  // Node k in [0, n_steps]; the last node is t_end exactly.
  double time(int k) const;

  bool operator==(const TimeGrid& other) const = default;

 private:
  double t_start_;
  double t_end_;
  int n_steps_;
  double dt_;
};

struct VolatilityControl {
  std::vector<double> values;  // a_k per step

  static VolatilityControl constant(const TimeGrid& grid, double a);
  // Throws InvalidInput if the length or any value is inconsistent.
  void validate(const TimeGrid& grid, const AmbiguityInterval& band) const;
};

struct Scenario {
  VolatilityControl control;
  std::vector<double> gauss;
  std::uint64_t seed = 0;
};

struct SamplePath {
  TimeGrid grid;
  std::vector<double> b_values;   // B at nodes, b_values[0] = 0
  std::vector<double> qv_values;  // <B> at nodes, qv_values[0] = 0
  std::vector<double> db;         // B increment per step, sqrt(a_k dt) g_k
  std::vector<double> dqv;        // <B> increment per step, a_k dt
};

struct ScenarioDraw {
  Scenario scenario;
  SamplePath path;
};

// G(a) = (sigma_high^2 a^+ - sigma_low^2 a^-) / 2.
double g_function(double a, const AmbiguityInterval& band);

// Deterministic seed mixing for replicate (control, replicate) of a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t control_index,
                          std::uint64_t replicate_index);

ScenarioDraw sample_scenario(const TimeGrid& grid, const VolatilityControl& control,
                             std::uint64_t seed);

// Path induced by an explicit list of normal draws (no RNG involved).
SamplePath build_path(const TimeGrid& grid, const VolatilityControl& control,
                      std::span<const double> gauss);

std::vector<VolatilityControl> make_control_ensemble(const TimeGrid& grid,
                                                     const AmbiguityInterval& band,
                                                     int count, std::uint64_t seed);

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  int argmax_control = 0;
};

using PathFunctional = std::function<double(const SamplePath&)>;
using VectorPathFunctional = std::function<std::vector<double>(const SamplePath&)>;
using PathPredicate = std::function<bool(const SamplePath&)>;

// Ê[F] ~ max over controls of the Monte Carlo mean of F. Reduction runs in
// canonical order (control index, then replicate index).
Estimate estimate_gexpectation(const PathFunctional& functional, const TimeGrid& grid,
                               const std::vector<VolatilityControl>& ensemble,
                               int mc_per_control, std::uint64_t seed);

// Componentwise version: one scenario sweep, one independent maximum per
// component. `width` is the number of components returned by the functional.
std::vector<Estimate> estimate_gexpectation_multi(const VectorPathFunctional& functional,
                                                  int width, const TimeGrid& grid,
                                                  const std::vector<VolatilityControl>& ensemble,
                                                  int mc_per_control, std::uint64_t seed);

Estimate estimate_capacity(const PathPredicate& event, const TimeGrid& grid,
                           const std::vector<VolatilityControl>& ensemble, int mc_per_control,
                           std::uint64_t seed);

struct HeatSpaceGrid {
  double x_min = -10.0;
  double x_max = 10.0;
  int n_x = 2000;
  int n_steps = 10000;
};

// Solution of d_t u - G(D^2 u) = 0, u(0, .) = terminal, at t = horizon on the
// nodes of `space`. Uses the same explicit monotone scheme as solve_u.
struct HeatSolution {
  std::vector<double> x;
  std::vector<double> u;
  double at(double x_query) const;
};

HeatSolution gheat_expectation(const std::function<double(double)>& terminal, double horizon,
                               const AmbiguityInterval& band, const HeatSpaceGrid& space);

}  // namespace gdeviate
