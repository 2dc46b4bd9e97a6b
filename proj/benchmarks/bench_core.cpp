#include <benchmark/benchmark.h>

#include "gdeviate/ambiguity.hpp"
#include "gdeviate/experiment.hpp"
#include "gdeviate/forward_sde.hpp"
#include "gdeviate/gbsde_pde.hpp"
#include "gdeviate/ldp.hpp"

using namespace gdeviate;

namespace {

const AmbiguityInterval kBand(0.5, 1.0);

void BM_SampleScenario(benchmark::State& state) {
  const TimeGrid grid(0.0, 1.0, static_cast<int>(state.range(0)));
  const auto control = VolatilityControl::constant(grid, 0.6);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sample_scenario(grid, control, ++seed));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SampleScenario)->Arg(1000)->Arg(10000);

void BM_EulerForward(benchmark::State& state) {
  const TimeGrid grid(0.0, 1.0, static_cast<int>(state.range(0)));
  const auto coeffs = make_model("canonical");
  const auto draw = sample_scenario(grid, VolatilityControl::constant(grid, 1.0), 1);
  for (auto _ : state) benchmark::DoNotOptimize(euler_forward(coeffs, 0.3, 0.1, draw.path));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EulerForward)->Arg(1000)->Arg(10000);

void BM_SolveU(benchmark::State& state) {
  const TimeGrid time(0.0, 1.0, 1000);
  const auto coeffs = make_model("canonical");
  const auto grid = make_space_time_grid(coeffs, 0.1, kBand, time, 0.3, 2.5,
                                         static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(solve_u(coeffs, 0.1, kBand, grid));
  state.counters["substeps"] = grid.substeps;
}
BENCHMARK(BM_SolveU)->Arg(500)->Arg(2500)->Unit(benchmark::kMillisecond);

void BM_ForwardErrorStat(benchmark::State& state) {
  const TimeGrid grid(0.0, 1.0, 1000);
  const auto coeffs = make_model("canonical");
  const auto ensemble = make_control_ensemble(grid, kBand, 8, 1);
  const ForwardStatParams params{0.3, 0.1, 2.0, 50, 1};
  for (auto _ : state) benchmark::DoNotOptimize(forward_error_stat(coeffs, grid, ensemble, params));
}
BENCHMARK(BM_ForwardErrorStat)->Unit(benchmark::kMillisecond);

void BM_RateLambda(benchmark::State& state) {
  const TimeGrid grid(0.0, 1.0, static_cast<int>(state.range(0)));
  const auto coeffs = make_model("canonical");
  std::vector<double> target(grid.n_steps() + 1);
  for (int k = 0; k <= grid.n_steps(); ++k) target[k] = 0.3 + 0.5 * grid.time(k);
  for (auto _ : state) benchmark::DoNotOptimize(rate_lambda(target, coeffs, 0.3, kBand, grid));
}
BENCHMARK(BM_RateLambda)->Arg(1000)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
