#pragma once

// Large-deviation functionals for the small-noise forward/backward system.

#include <cstdint>
#include <optional>
#include <vector>

#include "gdeviate/ambiguity.hpp"
#include "gdeviate/forward_sde.hpp"

namespace gdeviate {

// Per-step derivatives of (phi, eta); eta_dot takes values in the variance band.
struct ControlPair {
  std::vector<double> phi_dot;
  std::vector<double> eta_dot;

  void validate(const TimeGrid& grid, const AmbiguityInterval& band) const;
};

// Nonnegative rate or a tagged +infinity; never a floating overflow.
struct RateValue {
  bool infinite = false;
  double value = 0.0;
  std::optional<ControlPair> witness;

  static RateValue infinity() { return RateValue{true, 0.0, std::nullopt}; }
  static RateValue finite(double v, std::optional<ControlPair> w = std::nullopt) {
    return RateValue{false, v, std::move(w)};
  }
  bool is_zero() const { return !infinite && value == 0.0; }
};

// J = 1/2 int phi'^2 / eta' dr, left-endpoint quadrature. Out-of-band eta'
// is rejected.
double action_j(const ControlPair& pair, const TimeGrid& grid, const AmbiguityInterval& band);

// RK4 for Psi' = b(Psi) + sigma(Psi) phi' + h(Psi) eta', controls frozen per step.
StatePath controlled_ode_psi(const CoefficientSet& coeffs, double x, const ControlPair& pair,
                             const TimeGrid& grid);

// inf J over pairs steering x to the target path, by exact per-step scalar
// minimization over eta' in the band.
RateValue rate_lambda(const std::vector<double>& target, const CoefficientSet& coeffs, double x,
                      const AmbiguityInterval& band, const TimeGrid& grid);

// 5 (dt + RK4 error estimate of the limit path).
double default_membership_tol(const CoefficientSet& coeffs, double x, const TimeGrid& grid);

// Degenerate rate: 0 on the limit path (within tol), +infinity elsewhere.
RateValue rate_lambda_degenerate(const std::vector<double>& tilde_target,
                                 const CoefficientSet& coeffs, double x, const TimeGrid& grid,
                                 const AmbiguityInterval& band, double tol);

// Contraction of the degenerate rate through u^0: 0 when the target matches
// t -> u^0(t, phi_t) within tol, +infinity otherwise.
RateValue rate_pi(const std::vector<double>& target_psi, const CoefficientSet& coeffs, double x,
                  const TimeGrid& grid, const AmbiguityInterval& band, double tol);

// max over node pairs of |path_s - path_t| / |s - t|^alpha, alpha in [0, 1).
double holder_norm(const std::vector<double>& path, const TimeGrid& grid, double alpha);

struct CapacityRow {
  double eps = 0.0;
  Estimate capacity;
  bool zero_count = false;   // capacity estimate is 0: eps log C is -infinity
  double eps_log_capacity = 0.0;  // meaningful only when !zero_count
};

// eps log Ĉ(sup_t |X^eps_t - phi_t| >= delta) along the ladder, shared seeds.
std::vector<CapacityRow> ldp_empirical_check(const CoefficientSet& coeffs, double x,
                                             const TimeGrid& grid, const EpsilonLadder& ladder,
                                             double delta,
                                             const std::vector<VolatilityControl>& ensemble,
                                             int mc_per_control, std::uint64_t seed);

}  // namespace gdeviate
