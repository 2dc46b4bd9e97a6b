#pragma once

// G-BSDE machinery through its nonlinear parabolic PDE.
//
// u^eps solves d_t u + G(H) + b Du + f(t, x, u, eps sigma Du) = 0 with
// H = (eps sigma)^2 D^2u + 2 eps h Du + 2 g(t, x, u, eps sigma Du) and
// u(T, .) = Phi. Along a forward path, Y = u^eps(t, X), Z = eps sigma Du^eps,
// and K is the residual that balances the backward equation.

#include <cstdint>
#include <vector>

#include "gdeviate/ambiguity.hpp"
#include "gdeviate/forward_sde.hpp"

namespace gdeviate {

// Space mesh over [x_min, x_max] with n_x intervals. `time` is the output
// grid: the surface stores one slice per node of it. The explicit scheme
// advances `substeps` internal steps per output interval.
struct SpaceTimeGrid {
  TimeGrid time;
  double x_min = -1.0;
  double x_max = 1.0;
  int n_x = 100;
  int substeps = 1;

  double dx() const { return (x_max - x_min) / n_x; }
  double x(int i) const { return i == n_x ? x_max : x_min + i * dx(); }
  double scheme_dt() const { return time.dt() / substeps; }
  void validate() const;
};

// Largest explicit step admissible for (coeffs, eps, band) on the mesh.
double cfl_step_limit(const CoefficientSet& coeffs, double eps, const AmbiguityInterval& band,
                      const SpaceTimeGrid& grid);

// Domain radius |b|_inf T + 6 sigma_high (1 + |sigma|_inf), bounds from bound_L.
double default_domain_radius(const CoefficientSet& coeffs, const AmbiguityInterval& band,
                             double horizon);

// Mesh on [center - radius, center + radius] with the fewest substeps that
// satisfy the CFL limit.
SpaceTimeGrid make_space_time_grid(const CoefficientSet& coeffs, double eps,
                                   const AmbiguityInterval& band, const TimeGrid& time,
                                   double center, double radius, int n_x);

class ValueSurface {
 public:
  ValueSurface(SpaceTimeGrid grid, double eps, std::vector<double> values,
               bool boundary_flag);

  const SpaceTimeGrid& grid() const { return grid_; }
  double eps() const { return eps_; }
  int n_nodes() const { return grid_.n_x + 1; }
  double value(int time_index, int space_index) const {
    return values_[static_cast<std::size_t>(time_index) * n_nodes() + space_index];
  }
  // Node derivative: central inside, one-sided at the two ends.
  double node_gradient(int time_index, int space_index) const;

  bool contains(double x) const { return x >= grid_.x_min && x <= grid_.x_max; }
  // Bilinear interpolation; throws InvalidInput outside the domain.
  double interpolate(double t, double x) const;
  double interpolate_gradient(double t, double x) const;

  // Set when diffusion or inward transport from a truncated boundary can
  // reach the outer 10% zones of the domain over the horizon.
  bool boundary_influence_flag() const { return boundary_flag_; }

 private:
  template <typename NodeFn>
  double bilinear(double t, double x, NodeFn node) const;

  SpaceTimeGrid grid_;
  double eps_;
  std::vector<double> values_;
  bool boundary_flag_;
};

ValueSurface solve_u(const CoefficientSet& coeffs, double eps, const AmbiguityInterval& band,
                     const SpaceTimeGrid& grid);

struct LimitPair {
  StatePath phi;
  std::vector<double> psi;
  std::vector<double> m_per_scenario;
};

// RK4 for phi forward and psi backward:
// d(psi)/dt = -f(t, phi, psi, 0) - 2 G(g(t, phi, psi, 0)), psi_T = Phi(phi_T).
LimitPair limit_psi(const CoefficientSet& coeffs, double x, const TimeGrid& grid,
                    const AmbiguityInterval& band);

// M_t = int g(r, phi, psi, 0) d<B> - 2 int G(g(r, phi, psi, 0)) dr, cumulative.
std::vector<double> limit_martingale_m(const CoefficientSet& coeffs, const LimitPair& limit,
                                       const SamplePath& path, const AmbiguityInterval& band);

struct SolutionTriple {
  TimeGrid grid;
  std::vector<double> y;
  std::vector<double> z;
  std::vector<double> k;
  int clipped = 0;  // path nodes clamped to the surface domain
};

SolutionTriple reconstruct_triple(const ValueSurface& surface, const StatePath& xpath,
                                  const SamplePath& path, const CoefficientSet& coeffs,
                                  double eps);

// Steps where K increases by more than tol.
int count_k_increases(const SolutionTriple& triple, double tol);

// tol_K = scale (dt + dx^2)^(1/2).
double k_monotonicity_tolerance(const SpaceTimeGrid& grid, double scale = 0.01);

struct PdeMeshSpec {
  int n_x = 2500;
  double radius = 0.0;  // <= 0 selects default_domain_radius
};

struct BackwardStatParams {
  double x = 0.0;
  double eps = 0.1;
  int mc_per_control = 200;
  std::uint64_t seed = 0;
  PdeMeshSpec mesh;
};

struct BackwardStats {
  Estimate err_y;  // Ê sup |Y - psi|^2
  Estimate err_z;  // Ê int |Z|^2 dr
  Estimate err_k;  // Ê sup |K - M|^2
  long scenarios = 0;
  long clipped_nodes = 0;
  long k_increase_steps = 0;
  double k_tolerance = 0.0;
  bool boundary_flag = false;
};

BackwardStats backward_error_stats(const CoefficientSet& coeffs, const TimeGrid& grid,
                                   const AmbiguityInterval& band,
                                   const std::vector<VolatilityControl>& ensemble,
                                   const BackwardStatParams& params);

// t -> u^eps(t, x + tilde(t)) from a surface; tilde lives on the surface's grid.
std::vector<double> f_map(const ValueSurface& surface, double x,
                          const std::vector<double>& tilde_path);

// eps = 0 version: u^0(t, y) = psi^{t, y}_t from the limit system.
std::vector<double> f_map_limit(const CoefficientSet& coeffs, const AmbiguityInterval& band,
                                const TimeGrid& grid, double x,
                                const std::vector<double>& tilde_path);

}  // namespace gdeviate
