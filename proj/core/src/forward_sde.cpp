#include "gdeviate/forward_sde.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "gdeviate/errors.hpp"

namespace gdeviate {

int count_bound_violations(const CoefficientSet& coeffs, double x_lo, double x_hi,
                           int n_nodes) {
  if (n_nodes < 2 || !(x_lo < x_hi)) throw InvalidInput("bad diagnostic grid");
  int violations = 0;
  for (int i = 0; i < n_nodes; ++i) {
    const double x = x_lo + (x_hi - x_lo) * i / (n_nodes - 1);
    const double worst =
        std::max({std::abs(coeffs.b(x)), std::abs(coeffs.sigma(x)), std::abs(coeffs.h(x))});
    if (!(worst <= coeffs.bound_L)) ++violations;
  }
  return violations;
}

EpsilonLadder::EpsilonLadder(std::vector<double> epsilons) : eps_(std::move(epsilons)) {
  if (eps_.empty()) throw InvalidInput("epsilon ladder is empty");
  for (std::size_t i = 0; i < eps_.size(); ++i) {
    if (!(eps_[i] > 0.0 && eps_[i] <= 1.0)) {
      throw InvalidInput("epsilon ladder entries must lie in (0, 1]");
    }
    if (i > 0 && !(eps_[i] < eps_[i - 1])) {
      throw InvalidInput("epsilon ladder must be strictly decreasing");
    }
  }
}

namespace {

[[noreturn]] void blow_up(const char* what, int step, double x) {
  std::ostringstream msg;
  msg << "non-finite " << what << " at step " << step << " (x = " << x << ")";
  throw NumericalAbort(msg.str());
}

}  // namespace

StatePath euler_forward(const CoefficientSet& coeffs, double x, double eps,
                        const SamplePath& path) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw InvalidInput("eps must lie in [0, 1]");
  const TimeGrid& grid = path.grid;
  const int n = grid.n_steps();
  const double dt = grid.dt();
  StatePath out{grid, std::vector<double>(n + 1)};
  out.values[0] = x;
  double state = x;
  for (int k = 0; k < n; ++k) {
    const double drift = coeffs.b(state);
    const double qv_drift = coeffs.h(state);
    const double diffusion = coeffs.sigma(state);
    if (!std::isfinite(drift) || !std::isfinite(qv_drift) || !std::isfinite(diffusion)) {
      blow_up("coefficient", k, state);
    }
    state += drift * dt + eps * qv_drift * path.dqv[k] + eps * diffusion * path.db[k];
    if (!std::isfinite(state)) blow_up("state", k, state);
    out.values[k + 1] = state;
  }
  return out;
}

StatePath euler_forward(const CoefficientSet& coeffs, double x, const TimeGrid& grid,
                        double eps, const Scenario& scenario) {
  return euler_forward(coeffs, x, eps, build_path(grid, scenario.control, scenario.gauss));
}

double rk4_step(const StateFn& rhs, double y, double dt) {
  const double k1 = rhs(y);
  const double k2 = rhs(y + 0.5 * dt * k1);
  const double k3 = rhs(y + 0.5 * dt * k2);
  const double k4 = rhs(y + dt * k3);
  return y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

StatePath limit_phi(const CoefficientSet& coeffs, double x, const TimeGrid& grid) {
  const int n = grid.n_steps();
  StatePath out{grid, std::vector<double>(n + 1)};
  out.values[0] = x;
  for (int k = 0; k < n; ++k) {
    out.values[k + 1] = rk4_step(coeffs.b, out.values[k], grid.dt());
    if (!std::isfinite(out.values[k + 1])) blow_up("limit state", k, out.values[k]);
  }
  return out;
}

Estimate forward_error_stat(const CoefficientSet& coeffs, const TimeGrid& grid,
                            const std::vector<VolatilityControl>& ensemble,
                            const ForwardStatParams& params) {
  if (params.p < 2.0) throw InvalidInput("moment exponent p must be >= 2");
  const StatePath phi = limit_phi(coeffs, params.x, grid);
  auto functional = [&](const SamplePath& path) {
    const StatePath xs = euler_forward(coeffs, params.x, params.eps, path);
    double worst = 0.0;
    for (std::size_t k = 0; k < xs.values.size(); ++k) {
      worst = std::max(worst, std::abs(xs.values[k] - phi.values[k]));
    }
    return std::pow(worst, params.p);
  };
  return estimate_gexpectation(functional, grid, ensemble, params.mc_per_control, params.seed);
}

Estimate moment_bound_stat(const CoefficientSet& coeffs, const TimeGrid& grid,
                           const std::vector<VolatilityControl>& ensemble,
                           const ForwardStatParams& params) {
  if (params.p < 2.0) throw InvalidInput("moment exponent p must be >= 2");
  auto functional = [&](const SamplePath& path) {
    const StatePath xs = euler_forward(coeffs, params.x, params.eps, path);
    double worst = 0.0;
    for (double v : xs.values) worst = std::max(worst, std::abs(v));
    return std::pow(worst, params.p);
  };
  return estimate_gexpectation(functional, grid, ensemble, params.mc_per_control, params.seed);
}

}  // namespace gdeviate
