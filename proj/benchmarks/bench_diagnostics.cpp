#include <benchmark/benchmark.h>

#include "rsplit/diagnostics.hpp"

using namespace rsplit;

namespace {

StateVector gaussian(const ModelSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  StateVector x{kind(spec), std::vector<double>(dimension(spec))};
  for (double& v : x.coords) v = rng.normal();
  return x;
}

void BM_KernelEstimate(benchmark::State& state) {
  const ModelSpec spec = lorenz96::LorenzSpec{};
  const SplittingScheme scheme = build_scheme(spec, {TimeLawKind::exponential, 0.01});
  const StateVector x0 = gaussian(spec, 1);
  const Observable f = [](std::span<const double> x) { return x[0]; };
  const auto samples = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(estimate_kernel_average(scheme, f, x0, 100, samples, 7));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KernelEstimate)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_ReferenceSolution(benchmark::State& state) {
  const ModelSpec spec = euler2d::EulerSpec{};
  const StateVector x0 = gaussian(spec, 2);
  const VectorField rhs = rhs_field(spec);
  for (auto _ : state) benchmark::DoNotOptimize(integrate(rhs, x0, 1.0));
}
BENCHMARK(BM_ReferenceSolution)->Unit(benchmark::kMillisecond);

void BM_RankSuite(benchmark::State& state) {
  euler2d::EulerSpec spec;
  spec.N = static_cast<int>(state.range(0));
  const StateVector x = gaussian(spec, 3);
  for (auto _ : state) benchmark::DoNotOptimize(rank_tests(spec, x.coords));
}
BENCHMARK(BM_RankSuite)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

}  // namespace
