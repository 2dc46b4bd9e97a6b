#include "gdeviate/gbsde_pde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "gdeviate/errors.hpp"

namespace gdeviate {

void SpaceTimeGrid::validate() const {
  if (!(x_min < x_max)) throw InvalidInput("space grid requires x_min < x_max");
  if (n_x < 2) throw InvalidInput("space grid requires n_x >= 2");
  if (substeps < 1) throw InvalidInput("space grid requires substeps >= 1");
}

namespace {

struct NodeBounds {
  double b_max = 0.0;
  double h_max = 0.0;
  double sigma_max = 0.0;
};

NodeBounds sample_bounds(const CoefficientSet& coeffs, const SpaceTimeGrid& grid) {
  NodeBounds nb;
  for (int i = 0; i <= grid.n_x; ++i) {
    const double x = grid.x(i);
    nb.b_max = std::max(nb.b_max, std::abs(coeffs.b(x)));
    nb.h_max = std::max(nb.h_max, std::abs(coeffs.h(x)));
    nb.sigma_max = std::max(nb.sigma_max, std::abs(coeffs.sigma(x)));
  }
  return nb;
}

double cfl_limit_from(const NodeBounds& nb, const CoefficientSet& coeffs, double eps,
                      const AmbiguityInterval& band, double dx) {
  const double es = eps * nb.sigma_max;
  const double denom = band.var_high() * es * es +
                       dx * (nb.b_max + eps * nb.h_max * band.var_high() + coeffs.lipschitz_L);
  if (denom <= 0.0) return std::numeric_limits<double>::infinity();
  return dx * dx / denom;
}

}  // namespace

double cfl_step_limit(const CoefficientSet& coeffs, double eps, const AmbiguityInterval& band,
                      const SpaceTimeGrid& grid) {
  grid.validate();
  return cfl_limit_from(sample_bounds(coeffs, grid), coeffs, eps, band, grid.dx());
}

double default_domain_radius(const CoefficientSet& coeffs, const AmbiguityInterval& band,
                             double horizon) {
  return coeffs.bound_L * horizon + 6.0 * band.sigma_high() * (1.0 + coeffs.bound_L);
}

SpaceTimeGrid make_space_time_grid(const CoefficientSet& coeffs, double eps,
                                   const AmbiguityInterval& band, const TimeGrid& time,
                                   double center, double radius, int n_x) {
  if (!(radius > 0.0)) throw InvalidInput("domain radius must be positive");
  SpaceTimeGrid grid{time, center - radius, center + radius, n_x, 1};
  const double limit = cfl_step_limit(coeffs, eps, band, grid);
  if (std::isfinite(limit)) {
    grid.substeps = std::max(1, static_cast<int>(std::ceil(time.dt() / limit)));
    while (grid.scheme_dt() > limit) ++grid.substeps;
  }
  return grid;
}

ValueSurface::ValueSurface(SpaceTimeGrid grid, double eps, std::vector<double> values,
                           bool boundary_flag)
    : grid_(std::move(grid)), eps_(eps), values_(std::move(values)),
      boundary_flag_(boundary_flag) {
  const std::size_t expected =
      static_cast<std::size_t>(grid_.time.n_steps() + 1) * (grid_.n_x + 1);
  if (values_.size() != expected) throw InvalidInput("surface size does not match grid");
}

double ValueSurface::node_gradient(int k, int i) const {
  const double dx = grid_.dx();
  if (i == 0) return (value(k, 1) - value(k, 0)) / dx;
  if (i == grid_.n_x) return (value(k, i) - value(k, i - 1)) / dx;
  return (value(k, i + 1) - value(k, i - 1)) / (2.0 * dx);
}

template <typename NodeFn>
double ValueSurface::bilinear(double t, double x, NodeFn node) const {
  if (!contains(x)) {
    std::ostringstream msg;
    msg << "query x = " << x << " outside surface domain [" << grid_.x_min << ", "
        << grid_.x_max << "]";
    throw InvalidInput(msg.str());
  }
  const TimeGrid& time = grid_.time;
  if (t < time.t_start() || t > time.t_end()) throw InvalidInput("query t outside surface");

  const double ts = (t - time.t_start()) / time.dt();
  int k = std::clamp(static_cast<int>(std::floor(ts)), 0, time.n_steps() - 1);
  double wt = std::clamp(ts - k, 0.0, 1.0);
  const double xs = (x - grid_.x_min) / grid_.dx();
  int i = std::clamp(static_cast<int>(std::floor(xs)), 0, grid_.n_x - 1);
  double wx = std::clamp(xs - i, 0.0, 1.0);

  auto row = [&](int kk) {
    if (wx == 0.0) return node(kk, i);
    return (1.0 - wx) * node(kk, i) + wx * node(kk, i + 1);
  };
  if (wt == 0.0) return row(k);
  if (wt == 1.0) return row(k + 1);
  return (1.0 - wt) * row(k) + wt * row(k + 1);
}

double ValueSurface::interpolate(double t, double x) const {
  return bilinear(t, x, [this](int k, int i) { return value(k, i); });
}

double ValueSurface::interpolate_gradient(double t, double x) const {
  return bilinear(t, x, [this](int k, int i) { return node_gradient(k, i); });
}

ValueSurface solve_u(const CoefficientSet& coeffs, double eps, const AmbiguityInterval& band,
                     const SpaceTimeGrid& grid) {
  grid.validate();
  if (!(eps >= 0.0)) throw InvalidInput("eps must be nonnegative");

  const int nx = grid.n_x;
  const int nodes = nx + 1;
  const double dx = grid.dx();
  const double dt = grid.scheme_dt();

  const NodeBounds nb = sample_bounds(coeffs, grid);
  const double limit = cfl_limit_from(nb, coeffs, eps, band, dx);
  if (dt > limit) {
    std::ostringstream msg;
    msg << "CFL violation: scheme dt = " << dt << " exceeds limit " << limit
        << " for dx = " << dx;
    throw CflViolation(msg.str());
  }

  std::vector<double> xs(nodes), bs(nodes), hs(nodes), ss(nodes);
  for (int i = 0; i < nodes; ++i) {
    xs[i] = grid.x(i);
    bs[i] = coeffs.b(xs[i]);
    hs[i] = coeffs.h(xs[i]);
    ss[i] = eps * coeffs.sigma(xs[i]);
  }

  const int n_out = grid.time.n_steps();
  std::vector<double> values(static_cast<std::size_t>(n_out + 1) * nodes);
  std::vector<double> cur(nodes), next(nodes);
  for (int i = 0; i < nodes; ++i) {
    cur[i] = coeffs.phi(xs[i]);
    if (!std::isfinite(cur[i])) throw NumericalAbort("non-finite terminal value");
  }
  std::copy(cur.begin(), cur.end(), values.begin() + static_cast<std::ptrdiff_t>(n_out) * nodes);

  const double inv_dx = 1.0 / dx;
  const double inv_dx2 = inv_dx * inv_dx;
  for (int k = n_out - 1; k >= 0; --k) {
    const double t_hi = grid.time.time(k + 1);
    for (int s = 0; s < grid.substeps; ++s) {
      const double t = t_hi - s * dt;
      for (int i = 0; i < nodes; ++i) {
        const double u = cur[i];
        double d2 = 0.0, dc, dup;
        if (i == 0) {
          dc = (cur[1] - u) * inv_dx;
          dup = dc;
        } else if (i == nx) {
          dc = (u - cur[nx - 1]) * inv_dx;
          dup = dc;
        } else {
          d2 = (cur[i + 1] - 2.0 * u + cur[i - 1]) * inv_dx2;
          dc = (cur[i + 1] - cur[i - 1]) * (0.5 * inv_dx);
          dup = bs[i] > 0.0 ? (cur[i + 1] - u) * inv_dx : (u - cur[i - 1]) * inv_dx;
        }
        const double z = ss[i] * dc;
        const double hmat = ss[i] * ss[i] * d2 + 2.0 * eps * hs[i] * dc +
                            2.0 * coeffs.g(t, xs[i], u, z);
        const double updated =
            u + dt * (g_function(hmat, band) + bs[i] * dup + coeffs.f(t, xs[i], u, z));
        if (!std::isfinite(updated)) {
          std::ostringstream msg;
          msg << "non-finite update at t = " << t << ", x = " << xs[i];
          throw NumericalAbort(msg.str());
        }
        next[i] = updated;
      }
      cur.swap(next);
    }
    std::copy(cur.begin(), cur.end(), values.begin() + static_cast<std::ptrdiff_t>(k) * nodes);
  }

  const double horizon = grid.time.horizon();
  const double diffusion_reach = 3.0 * std::sqrt(band.var_high()) * eps * nb.sigma_max *
                                 std::sqrt(horizon);
  const double transport = eps * nb.h_max * band.var_high() +
                           coeffs.lipschitz_L * eps * nb.sigma_max;
  const double reach_left = diffusion_reach + (std::max(0.0, -bs[0]) + transport) * horizon;
  const double reach_right = diffusion_reach + (std::max(0.0, bs[nx]) + transport) * horizon;
  const double zone = 0.1 * (grid.x_max - grid.x_min);
  const bool flag = std::max(reach_left, reach_right) > zone;

  return ValueSurface(grid, eps, std::move(values), flag);
}

LimitPair limit_psi(const CoefficientSet& coeffs, double x, const TimeGrid& grid,
                    const AmbiguityInterval& band) {
  LimitPair out{limit_phi(coeffs, x, grid), {}, {}};
  const int n = grid.n_steps();
  const double dt = grid.dt();
  const std::vector<double>& phi = out.phi.values;
  auto rhs = [&](double t, double state, double psi) {
    return -coeffs.f(t, state, psi, 0.0) - 2.0 * g_function(coeffs.g(t, state, psi, 0.0), band);
  };

  std::vector<double>& psi = out.psi;
  psi.assign(n + 1, 0.0);
  psi[n] = coeffs.phi(phi[n]);
  for (int k = n - 1; k >= 0; --k) {
    const double t1 = grid.time(k + 1);
    const double t0 = grid.time(k);
    const double tm = 0.5 * (t0 + t1);
    const double phi_mid = rk4_step(coeffs.b, phi[k], 0.5 * dt);
    const double y = psi[k + 1];
    const double k1 = rhs(t1, phi[k + 1], y);
    const double k2 = rhs(tm, phi_mid, y - 0.5 * dt * k1);
    const double k3 = rhs(tm, phi_mid, y - 0.5 * dt * k2);
    const double k4 = rhs(t0, phi[k], y - dt * k3);
    psi[k] = y - dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!std::isfinite(psi[k])) {
      throw NumericalAbort("non-finite limit psi at step " + std::to_string(k));
    }
  }
  return out;
}

std::vector<double> limit_martingale_m(const CoefficientSet& coeffs, const LimitPair& limit,
                                       const SamplePath& path, const AmbiguityInterval& band) {
  const TimeGrid& grid = path.grid;
  if (!(grid == limit.phi.grid) || limit.psi.size() != limit.phi.values.size()) {
    throw InvalidInput("limit pair and scenario are on different grids");
  }
  const int n = grid.n_steps();
  const double dt = grid.dt();
  std::vector<double> m(n + 1, 0.0);
  for (int k = 0; k < n; ++k) {
    const double gk = coeffs.g(grid.time(k), limit.phi.values[k], limit.psi[k], 0.0);
    m[k + 1] = m[k] + gk * path.dqv[k] - 2.0 * g_function(gk, band) * dt;
  }
  return m;
}

SolutionTriple reconstruct_triple(const ValueSurface& surface, const StatePath& xpath,
                                  const SamplePath& path, const CoefficientSet& coeffs,
                                  double eps) {
  const TimeGrid& grid = path.grid;
  if (!(xpath.grid == grid) || !(surface.grid().time == grid)) {
    throw InvalidInput("surface, state path and scenario must share one time grid");
  }
  const int n = grid.n_steps();
  const double dt = grid.dt();
  const SpaceTimeGrid& sg = surface.grid();
  SolutionTriple triple{grid, std::vector<double>(n + 1), std::vector<double>(n + 1),
                        std::vector<double>(n + 1), 0};
  std::vector<double> xs(n + 1);
  for (int k = 0; k <= n; ++k) {
    double xk = xpath.values[k];
    if (!surface.contains(xk)) {
      xk = std::clamp(xk, sg.x_min, sg.x_max);
      ++triple.clipped;
    }
    xs[k] = xk;
    const double t = grid.time(k);
    // terminal slice is Phi by definition
    triple.y[k] = k == n ? coeffs.phi(xk) : surface.interpolate(t, xk);
    triple.z[k] = eps * coeffs.sigma(xk) * surface.interpolate_gradient(t, xk);
  }

  double drivers = 0.0;
  double stochastic = 0.0;
  triple.k[0] = 0.0;
  for (int k = 0; k < n; ++k) {
    const double t = grid.time(k);
    const double yk = triple.y[k];
    const double zk = triple.z[k];
    drivers += coeffs.f(t, xs[k], yk, zk) * dt + coeffs.g(t, xs[k], yk, zk) * path.dqv[k];
    stochastic += zk * path.db[k];
    triple.k[k + 1] = triple.y[k + 1] - triple.y[0] + drivers - stochastic;
  }
  return triple;
}

int count_k_increases(const SolutionTriple& triple, double tol) {
  int count = 0;
  for (std::size_t k = 0; k + 1 < triple.k.size(); ++k) {
    if (triple.k[k + 1] - triple.k[k] > tol) ++count;
  }
  return count;
}

double k_monotonicity_tolerance(const SpaceTimeGrid& grid, double scale) {
  const double dx = grid.dx();
  return scale * std::sqrt(grid.time.dt() + dx * dx);
}

BackwardStats backward_error_stats(const CoefficientSet& coeffs, const TimeGrid& grid,
                                   const AmbiguityInterval& band,
                                   const std::vector<VolatilityControl>& ensemble,
                                   const BackwardStatParams& params) {
  const double radius = params.mesh.radius > 0.0
                            ? params.mesh.radius
                            : default_domain_radius(coeffs, band, grid.horizon());
  const SpaceTimeGrid sg = make_space_time_grid(coeffs, params.eps, band, grid, params.x,
                                                radius, params.mesh.n_x);
  const ValueSurface surface = solve_u(coeffs, params.eps, band, sg);
  const LimitPair limit = limit_psi(coeffs, params.x, grid, band);

  BackwardStats stats;
  stats.k_tolerance = k_monotonicity_tolerance(sg);
  stats.boundary_flag = surface.boundary_influence_flag();
  const double dt = grid.dt();

  auto functional = [&](const SamplePath& path) {
    const StatePath xs = euler_forward(coeffs, params.x, params.eps, path);
    const SolutionTriple triple = reconstruct_triple(surface, xs, path, coeffs, params.eps);
    const std::vector<double> m = limit_martingale_m(coeffs, limit, path, band);
    double sup_y = 0.0, sup_k = 0.0, int_z = 0.0;
    for (std::size_t k = 0; k < triple.y.size(); ++k) {
      sup_y = std::max(sup_y, std::abs(triple.y[k] - limit.psi[k]));
      sup_k = std::max(sup_k, std::abs(triple.k[k] - m[k]));
    }
    for (std::size_t k = 0; k + 1 < triple.z.size(); ++k) int_z += triple.z[k] * triple.z[k] * dt;
    ++stats.scenarios;
    stats.clipped_nodes += triple.clipped;
    stats.k_increase_steps += count_k_increases(triple, stats.k_tolerance);
    return std::vector<double>{sup_y * sup_y, int_z, sup_k * sup_k};
  };
  const std::vector<Estimate> est = estimate_gexpectation_multi(
      functional, 3, grid, ensemble, params.mc_per_control, params.seed);
  stats.err_y = est[0];
  stats.err_z = est[1];
  stats.err_k = est[2];
  return stats;
}

std::vector<double> f_map(const ValueSurface& surface, double x,
                          const std::vector<double>& tilde_path) {
  const TimeGrid& time = surface.grid().time;
  if (static_cast<int>(tilde_path.size()) != time.n_steps() + 1) {
    throw InvalidInput("tilde path does not match the surface time grid");
  }
  std::vector<double> out(tilde_path.size());
  for (int k = 0; k <= time.n_steps(); ++k) {
    const double y = x + tilde_path[k];
    if (!surface.contains(y)) {
      std::ostringstream msg;
      msg << "path leaves surface domain at step " << k << " (t = " << time.time(k)
          << ", x = " << y << ")";
      throw InvalidInput(msg.str());
    }
    out[k] = surface.interpolate(time.time(k), y);
  }
  return out;
}

std::vector<double> f_map_limit(const CoefficientSet& coeffs, const AmbiguityInterval& band,
                                const TimeGrid& grid, double x,
                                const std::vector<double>& tilde_path) {
  const int n = grid.n_steps();
  if (static_cast<int>(tilde_path.size()) != n + 1) {
    throw InvalidInput("tilde path does not match the time grid");
  }
  std::vector<double> out(n + 1);
  for (int k = 0; k < n; ++k) {
    const TimeGrid tail(grid.time(k), grid.t_end(), n - k);
    out[k] = limit_psi(coeffs, x + tilde_path[k], tail, band).psi[0];
  }
  out[n] = coeffs.phi(x + tilde_path[n]);
  return out;
}

}  // namespace gdeviate
