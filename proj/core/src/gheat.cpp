#include <algorithm>
#include <cmath>

#include "gdeviate/ambiguity.hpp"
#include "gdeviate/errors.hpp"
#include "gdeviate/gbsde_pde.hpp"

namespace gdeviate {

double HeatSolution::at(double x_query) const {
  if (x.size() < 2 || x_query < x.front() || x_query > x.back()) {
    throw InvalidInput("heat solution queried outside its grid");
  }
  const double dx = x[1] - x[0];
  const int last = static_cast<int>(x.size()) - 2;
  const int i = std::clamp(static_cast<int>(std::floor((x_query - x.front()) / dx)), 0, last);
  const double w = std::clamp((x_query - x[i]) / dx, 0.0, 1.0);
  return w == 0.0 ? u[i] : (1.0 - w) * u[i] + w * u[i + 1];
}

// Forward G-heat equation = backward PDE with b = h = f = g = 0, sigma = 1,
// eps = 1, run over [0, horizon] with time reversed.
HeatSolution gheat_expectation(const std::function<double(double)>& terminal, double horizon,
                               const AmbiguityInterval& band, const HeatSpaceGrid& space) {
  if (!(horizon > 0.0)) throw InvalidInput("horizon must be positive");
  if (space.n_steps < 1) throw InvalidInput("heat grid needs n_steps >= 1");
  CoefficientSet heat;
  heat.b = [](double) { return 0.0; };
  heat.h = [](double) { return 0.0; };
  heat.sigma = [](double) { return 1.0; };
  heat.f = [](double, double, double, double) { return 0.0; };
  heat.g = [](double, double, double, double) { return 0.0; };
  heat.phi = terminal;
  heat.lipschitz_L = 0.0;
  heat.bound_L = 1.0;

  const SpaceTimeGrid grid{TimeGrid(0.0, horizon, 1), space.x_min, space.x_max, space.n_x,
                           space.n_steps};
  const ValueSurface surface = solve_u(heat, 1.0, band, grid);
  HeatSolution out;
  out.x.resize(space.n_x + 1);
  out.u.resize(space.n_x + 1);
  for (int i = 0; i <= space.n_x; ++i) {
    out.x[i] = grid.x(i);
    out.u[i] = surface.value(0, i);
  }
  return out;
}

}  // namespace gdeviate
