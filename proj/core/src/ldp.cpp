#include "gdeviate/ldp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <string>

#include "gdeviate/errors.hpp"
#include "gdeviate/gbsde_pde.hpp"

namespace gdeviate {

void ControlPair::validate(const TimeGrid& grid, const AmbiguityInterval& band) const {
  const auto n = static_cast<std::size_t>(grid.n_steps());
  if (phi_dot.size() != n || eta_dot.size() != n) {
    throw InvalidInput("control pair does not match the grid");
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (!band.contains_variance(eta_dot[k])) {
      throw InvalidInput("eta_dot out of band at step " + std::to_string(k) +
                         " (action is +infinity)");
    }
  }
}

double action_j(const ControlPair& pair, const TimeGrid& grid, const AmbiguityInterval& band) {
  pair.validate(grid, band);
  double total = 0.0;
  for (std::size_t k = 0; k < pair.phi_dot.size(); ++k) {
    total += 0.5 * pair.phi_dot[k] * pair.phi_dot[k] / pair.eta_dot[k] * grid.dt();
  }
  return total;
}

StatePath controlled_ode_psi(const CoefficientSet& coeffs, double x, const ControlPair& pair,
                             const TimeGrid& grid) {
  const int n = grid.n_steps();
  if (static_cast<int>(pair.phi_dot.size()) != n || static_cast<int>(pair.eta_dot.size()) != n) {
    throw InvalidInput("control pair does not match the grid");
  }
  StatePath out{grid, std::vector<double>(n + 1)};
  out.values[0] = x;
  for (int k = 0; k < n; ++k) {
    const double v = pair.phi_dot[k];
    const double a = pair.eta_dot[k];
    const StateFn rhs = [&](double y) {
      return coeffs.b(y) + coeffs.sigma(y) * v + coeffs.h(y) * a;
    };
    out.values[k + 1] = rk4_step(rhs, out.values[k], grid.dt());
    if (!std::isfinite(out.values[k + 1])) {
      throw NumericalAbort("non-finite controlled state at step " + std::to_string(k));
    }
  }
  return out;
}

namespace {

void check_target(const std::vector<double>& target, double x, const TimeGrid& grid) {
  if (static_cast<int>(target.size()) != grid.n_steps() + 1) {
    throw InvalidInput("target path does not match the grid");
  }
  if (target[0] != x) throw InvalidInput("target path must start at x");
}

}  // namespace

RateValue rate_lambda(const std::vector<double>& target, const CoefficientSet& coeffs, double x,
                      const AmbiguityInterval& band, const TimeGrid& grid) {
  check_target(target, x, grid);
  const int n = grid.n_steps();
  const double dt = grid.dt();
  const double lo = band.var_low();
  const double hi = band.var_high();
  ControlPair witness{std::vector<double>(n), std::vector<double>(n)};

  for (int k = 0; k < n; ++k) {
    const double xi = target[k];
    // required: sigma phi' = c1 - c2 a
    const double c1 = (target[k + 1] - xi) / dt - coeffs.b(xi);
    const double c2 = coeffs.h(xi);
    const double sig = coeffs.sigma(xi);
    if (!std::isfinite(c1) || !std::isfinite(c2) || !std::isfinite(sig)) {
      throw NumericalAbort("non-finite coefficient at target step " + std::to_string(k));
    }

    if (sig == 0.0) {
      // any phi' works; feasible only if the h-term alone matches the slope
      const double scale = 1e-12 * std::max({1.0, std::abs(c1), std::abs(c2) * hi});
      double a = lo;
      if (c2 != 0.0) a = std::clamp(c1 / c2, lo, hi);
      if (std::abs(c1 - c2 * a) > scale) return RateValue::infinity();
      witness.phi_dot[k] = 0.0;
      witness.eta_dot[k] = a;
      continue;
    }

    auto cost = [&](double a) {
      const double r = c1 - c2 * a;
      return r * r / (2.0 * a * sig * sig);
    };
    // d/da of (c1 - c2 a)^2 / a vanishes at a = |c1 / c2|
    std::array<double, 3> candidates{lo, hi, lo};
    if (c2 != 0.0) {
      const double stationary = std::abs(c1 / c2);
      if (stationary > lo && stationary < hi) candidates[2] = stationary;
    }
    double best_a = candidates[0];
    double best_cost = cost(best_a);
    for (std::size_t j = 1; j < candidates.size(); ++j) {
      const double c = cost(candidates[j]);
      if (c < best_cost) {
        best_cost = c;
        best_a = candidates[j];
      }
    }
    witness.phi_dot[k] = (c1 - c2 * best_a) / sig;
    witness.eta_dot[k] = best_a;
  }
  const double value = action_j(witness, grid, band);
  return RateValue::finite(value, std::move(witness));
}

double default_membership_tol(const CoefficientSet& coeffs, double x, const TimeGrid& grid) {
  // step doubling: compare the n-step path with a 2n-step path at shared nodes
  const StatePath coarse = limit_phi(coeffs, x, grid);
  const StatePath fine =
      limit_phi(coeffs, x, TimeGrid(grid.t_start(), grid.t_end(), 2 * grid.n_steps()));
  double err = 0.0;
  for (std::size_t k = 0; k < coarse.values.size(); ++k) {
    err = std::max(err, std::abs(coarse.values[k] - fine.values[2 * k]));
  }
  return 5.0 * (grid.dt() + err * 16.0 / 15.0);
}

RateValue rate_lambda_degenerate(const std::vector<double>& tilde_target,
                                 const CoefficientSet& coeffs, double x, const TimeGrid& grid,
                                 const AmbiguityInterval& band, double tol) {
  if (!(tol > 0.0)) throw InvalidInput("membership tolerance must be positive");
  if (static_cast<int>(tilde_target.size()) != grid.n_steps() + 1) {
    throw InvalidInput("target path does not match the grid");
  }
  const StatePath phi = limit_phi(coeffs, x, grid);
  for (std::size_t k = 0; k < tilde_target.size(); ++k) {
    if (!(std::abs(x + tilde_target[k] - phi.values[k]) <= tol)) return RateValue::infinity();
  }
  ControlPair witness{std::vector<double>(grid.n_steps(), 0.0),
                      std::vector<double>(grid.n_steps(), band.var_low())};
  return RateValue::finite(0.0, std::move(witness));
}

RateValue rate_pi(const std::vector<double>& target_psi, const CoefficientSet& coeffs, double x,
                  const TimeGrid& grid, const AmbiguityInterval& band, double tol) {
  if (!(tol > 0.0)) throw InvalidInput("membership tolerance must be positive");
  if (static_cast<int>(target_psi.size()) != grid.n_steps() + 1) {
    throw InvalidInput("target path does not match the grid");
  }
  const StatePath phi = limit_phi(coeffs, x, grid);
  std::vector<double> tilde(phi.values.size());
  for (std::size_t k = 0; k < tilde.size(); ++k) tilde[k] = phi.values[k] - x;
  const std::vector<double> image = f_map_limit(coeffs, band, grid, x, tilde);
  for (std::size_t k = 0; k < image.size(); ++k) {
    if (!(std::abs(target_psi[k] - image[k]) <= tol)) return RateValue::infinity();
  }
  ControlPair witness{std::vector<double>(grid.n_steps(), 0.0),
                      std::vector<double>(grid.n_steps(), band.var_low())};
  return RateValue::finite(0.0, std::move(witness));
}

double holder_norm(const std::vector<double>& path, const TimeGrid& grid, double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw InvalidInput("Holder exponent must lie in [0, 1)");
  if (static_cast<int>(path.size()) != grid.n_steps() + 1) {
    throw InvalidInput("path does not match the grid");
  }
  double best = 0.0;
  for (int s = 0; s <= grid.n_steps(); ++s) {
    for (int t = s + 1; t <= grid.n_steps(); ++t) {
      const double gap = grid.time(t) - grid.time(s);
      const double ratio = std::abs(path[t] - path[s]) / (alpha == 0.0 ? 1.0 : std::pow(gap, alpha));
      best = std::max(best, ratio);
    }
  }
  return best;
}

std::vector<CapacityRow> ldp_empirical_check(const CoefficientSet& coeffs, double x,
                                             const TimeGrid& grid, const EpsilonLadder& ladder,
                                             double delta,
                                             const std::vector<VolatilityControl>& ensemble,
                                             int mc_per_control, std::uint64_t seed) {
  if (!(delta > 0.0)) throw InvalidInput("delta must be positive");
  const StatePath phi = limit_phi(coeffs, x, grid);
  std::vector<CapacityRow> rows;
  for (double eps : ladder.values()) {
    auto event = [&](const SamplePath& path) {
      const StatePath xs = euler_forward(coeffs, x, eps, path);
      for (std::size_t k = 0; k < xs.values.size(); ++k) {
        if (std::abs(xs.values[k] - phi.values[k]) >= delta) return true;
      }
      return false;
    };
    CapacityRow row;
    row.eps = eps;
    row.capacity = estimate_capacity(event, grid, ensemble, mc_per_control, seed);
    row.zero_count = row.capacity.value == 0.0;
    if (!row.zero_count) row.eps_log_capacity = eps * std::log(row.capacity.value);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace gdeviate
