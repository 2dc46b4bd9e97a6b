#include "gdeviate/ambiguity.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "gdeviate/errors.hpp"

namespace gdeviate {

AmbiguityInterval::AmbiguityInterval(double sigma_low, double sigma_high)
    : sigma_low_(sigma_low), sigma_high_(sigma_high) {
  if (!(sigma_low > 0.0) || !(sigma_high >= sigma_low) || !std::isfinite(sigma_high)) {
    throw InvalidInput("ambiguity interval requires 0 < sigma_low <= sigma_high, got [" +
                       std::to_string(sigma_low) + ", " + std::to_string(sigma_high) + "]");
  }
}

TimeGrid::TimeGrid(double t_start, double t_end, int n_steps)
    : t_start_(t_start), t_end_(t_end), n_steps_(n_steps) {
  if (!(t_start < t_end) || !std::isfinite(t_start) || !std::isfinite(t_end)) {
    throw InvalidInput("time grid requires t_start < t_end");
  }
  if (n_steps < 1) throw InvalidInput("time grid requires n_steps >= 1");
  dt_ = (t_end - t_start) / n_steps;
}

double TimeGrid::time(int k) const {
  if (k == n_steps_) return t_end_;
  return t_start_ + k * dt_;
}

VolatilityControl VolatilityControl::constant(const TimeGrid& grid, double a) {
  return VolatilityControl{std::vector<double>(grid.n_steps(), a)};
}

void VolatilityControl::validate(const TimeGrid& grid, const AmbiguityInterval& band) const {
  if (static_cast<int>(values.size()) != grid.n_steps()) {
    throw InvalidInput("control length " + std::to_string(values.size()) +
                       " does not match n_steps " + std::to_string(grid.n_steps()));
  }
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!band.contains_variance(values[k])) {
      throw InvalidInput("control value out of band at step " + std::to_string(k));
    }
  }
}

double g_function(double a, const AmbiguityInterval& band) {
  return 0.5 * (band.var_high() * std::max(a, 0.0) - band.var_low() * std::max(-a, 0.0));
}

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t control_index,
                          std::uint64_t replicate_index) {
  std::uint64_t s = splitmix64(master);
  s = splitmix64(s ^ (control_index * 0xd1b54a32d192ed03ULL));
  s = splitmix64(s ^ (replicate_index * 0xaef17502108ef2d9ULL));
  return s;
}

SamplePath build_path(const TimeGrid& grid, const VolatilityControl& control,
                      std::span<const double> gauss) {
  const int n = grid.n_steps();
  if (static_cast<int>(control.values.size()) != n || static_cast<int>(gauss.size()) != n) {
    throw InvalidInput("scenario length mismatch: control " +
                       std::to_string(control.values.size()) + ", gauss " +
                       std::to_string(gauss.size()) + ", n_steps " + std::to_string(n));
  }
  SamplePath path{grid, {}, {}, {}, {}};
  path.b_values.resize(n + 1);
  path.qv_values.resize(n + 1);
  path.db.resize(n);
  path.dqv.resize(n);
  const double dt = grid.dt();
  path.b_values[0] = 0.0;
  path.qv_values[0] = 0.0;
  for (int k = 0; k < n; ++k) {
    const double a = control.values[k];
    path.db[k] = std::sqrt(a * dt) * gauss[k];
    path.dqv[k] = a * dt;
    path.b_values[k + 1] = path.b_values[k] + path.db[k];
    path.qv_values[k + 1] = path.qv_values[k] + path.dqv[k];
  }
  return path;
}

ScenarioDraw sample_scenario(const TimeGrid& grid, const VolatilityControl& control,
                             std::uint64_t seed) {
  if (static_cast<int>(control.values.size()) != grid.n_steps()) {
    throw InvalidInput("control length does not match grid");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Scenario scenario{control, std::vector<double>(grid.n_steps()), seed};
  for (double& g : scenario.gauss) g = normal(rng);
  SamplePath path = build_path(grid, scenario.control, scenario.gauss);
  return {std::move(scenario), std::move(path)};
}

std::vector<VolatilityControl> make_control_ensemble(const TimeGrid& grid,
                                                     const AmbiguityInterval& band,
                                                     int count, std::uint64_t seed) {
  if (count < 2) throw InvalidInput("control ensemble needs count >= 2 (both extremes)");
  const int n = grid.n_steps();
  const double lo = band.var_low();
  const double hi = band.var_high();

  std::vector<VolatilityControl> ensemble;
  ensemble.reserve(count);
  ensemble.push_back(VolatilityControl::constant(grid, lo));
  ensemble.push_back(VolatilityControl::constant(grid, hi));

  std::mt19937_64 rng(splitmix64(seed ^ 0x5eedc0de5eedc0deULL));
  std::uniform_int_distribution<int> step_dist(0, n);
  std::uniform_real_distribution<double> level_dist(lo, hi);

  for (int m = 2; m < count; ++m) {
    VolatilityControl control{std::vector<double>(n)};
    if (m % 2 == 0) {
      // bang-bang: 1..4 switch times, alternating extremes
      const int switches = std::uniform_int_distribution<int>(1, 4)(rng);
      std::vector<int> cuts(switches);
      for (int& c : cuts) c = step_dist(rng);
      std::sort(cuts.begin(), cuts.end());
      bool high = std::bernoulli_distribution(0.5)(rng);
      std::size_t next = 0;
      for (int k = 0; k < n; ++k) {
        while (next < cuts.size() && cuts[next] <= k) {
          high = !high;
          ++next;
        }
        control.values[k] = high ? hi : lo;
      }
    } else {
      // piecewise-constant uniform levels on 2..8 pieces
      const int pieces = std::uniform_int_distribution<int>(2, 8)(rng);
      std::vector<int> cuts(pieces - 1);
      for (int& c : cuts) c = step_dist(rng);
      std::sort(cuts.begin(), cuts.end());
      double level = level_dist(rng);
      std::size_t next = 0;
      for (int k = 0; k < n; ++k) {
        while (next < cuts.size() && cuts[next] <= k) {
          level = level_dist(rng);
          ++next;
        }
        control.values[k] = std::clamp(level, lo, hi);
      }
    }
    ensemble.push_back(std::move(control));
  }
  return ensemble;
}

namespace {

// Welford running mean; a constant sample reproduces its value exactly.
struct RunningMean {
  long count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void push(double v) {
    ++count;
    const double delta = v - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (v - mean);
  }
  double std_error() const {
    if (count < 2) return 0.0;
    return std::sqrt(m2 / static_cast<double>(count - 1) / static_cast<double>(count));
  }
};

void check_ensemble(const std::vector<VolatilityControl>& ensemble, int mc_per_control) {
  if (ensemble.empty()) throw InvalidInput("empty control ensemble");
  if (mc_per_control < 1) throw InvalidInput("mc_per_control must be positive");
}

}  // namespace

std::vector<Estimate> estimate_gexpectation_multi(const VectorPathFunctional& functional,
                                                  int width, const TimeGrid& grid,
                                                  const std::vector<VolatilityControl>& ensemble,
                                                  int mc_per_control, std::uint64_t seed) {
  check_ensemble(ensemble, mc_per_control);
  if (width < 1) throw InvalidInput("functional width must be positive");

  std::vector<Estimate> best(width);
  for (std::size_t c = 0; c < ensemble.size(); ++c) {
    std::vector<RunningMean> means(width);
    for (int r = 0; r < mc_per_control; ++r) {
      const ScenarioDraw draw = sample_scenario(grid, ensemble[c], derive_seed(seed, c, r));
      const std::vector<double> values = functional(draw.path);
      if (static_cast<int>(values.size()) != width) {
        throw InvalidInput("functional returned wrong number of components");
      }
      for (int j = 0; j < width; ++j) means[j].push(values[j]);
    }
    for (int j = 0; j < width; ++j) {
      if (c == 0 || means[j].mean > best[j].value) {
        best[j] = Estimate{means[j].mean, means[j].std_error(), static_cast<int>(c)};
      }
    }
  }
  return best;
}

Estimate estimate_gexpectation(const PathFunctional& functional, const TimeGrid& grid,
                               const std::vector<VolatilityControl>& ensemble,
                               int mc_per_control, std::uint64_t seed) {
  return estimate_gexpectation_multi(
      [&](const SamplePath& p) { return std::vector<double>{functional(p)}; }, 1, grid,
      ensemble, mc_per_control, seed)[0];
}

Estimate estimate_capacity(const PathPredicate& event, const TimeGrid& grid,
                           const std::vector<VolatilityControl>& ensemble, int mc_per_control,
                           std::uint64_t seed) {
  check_ensemble(ensemble, mc_per_control);
  Estimate best;
  for (std::size_t c = 0; c < ensemble.size(); ++c) {
    long hits = 0;
    for (int r = 0; r < mc_per_control; ++r) {
      const ScenarioDraw draw = sample_scenario(grid, ensemble[c], derive_seed(seed, c, r));
      if (event(draw.path)) ++hits;
    }
    const double freq = static_cast<double>(hits) / mc_per_control;
    if (c == 0 || freq > best.value) {
      best.value = freq;
      best.std_error = std::sqrt(freq * (1.0 - freq) / mc_per_control);
      best.argmax_control = static_cast<int>(c);
    }
  }
  return best;
}

}  // namespace gdeviate
