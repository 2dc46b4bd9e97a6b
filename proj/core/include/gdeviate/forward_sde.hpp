#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "gdeviate/ambiguity.hpp"

namespace gdeviate {

using StateFn = std::function<double(double)>;
// (t, x, y, z) -> value
using DriverFn = std::function<double(double, double, double, double)>;

// Model functions of the forward-backward system, n = d = 1.
struct CoefficientSet {
  StateFn b;      // drift
  StateFn h;      // d<B> drift
  StateFn sigma;  // dB coefficient
  DriverFn f;     // dt driver
  DriverFn g;     // d<B> driver
  StateFn phi;    // terminal condition
  double lipschitz_L = 1.0;
  int growth_m = 0;
  double bound_L = 1.0;  // sup |b|, |sigma|, |h| on the diagnostic region
};

// Number of diagnostic nodes in [x_lo, x_hi] where |b|, |sigma| or |h|
// exceeds bound_L.
int count_bound_violations(const CoefficientSet& coeffs, double x_lo, double x_hi,
                           int n_nodes = 1001);

struct StatePath {
  TimeGrid grid;
  std::vector<double> values;
};

class EpsilonLadder {
 public:
  explicit EpsilonLadder(std::vector<double> epsilons);
  const std::vector<double>& values() const { return eps_; }
  std::size_t size() const { return eps_.size(); }

 private:
  std::vector<double> eps_;
};

// X_{k+1} = X_k + b dt + eps h d<B> + eps sigma dB along the given path.
StatePath euler_forward(const CoefficientSet& coeffs, double x, double eps,
                        const SamplePath& path);
StatePath euler_forward(const CoefficientSet& coeffs, double x, const TimeGrid& grid,
                        double eps, const Scenario& scenario);

// RK4 for d(phi)/dt = b(phi), phi(t_start) = x.
StatePath limit_phi(const CoefficientSet& coeffs, double x, const TimeGrid& grid);

// Single RK4 step of the autonomous ODE y' = rhs(y).
double rk4_step(const StateFn& rhs, double y, double dt);

struct ForwardStatParams {
  double x = 0.0;
  double eps = 0.1;
  double p = 2.0;
  int mc_per_control = 200;
  std::uint64_t seed = 0;
};

// Ê(sup_t |X^eps_t - phi_t|^p) over grid nodes.
Estimate forward_error_stat(const CoefficientSet& coeffs, const TimeGrid& grid,
                            const std::vector<VolatilityControl>& ensemble,
                            const ForwardStatParams& params);

// Ê(sup_t |X^eps_t|^p) over grid nodes.
Estimate moment_bound_stat(const CoefficientSet& coeffs, const TimeGrid& grid,
                           const std::vector<VolatilityControl>& ensemble,
                           const ForwardStatParams& params);

}  // namespace gdeviate
