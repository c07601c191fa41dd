#include <benchmark/benchmark.h>

#include "rsplit/euler2d.hpp"
#include "rsplit/lorenz96.hpp"
#include "rsplit/model.hpp"
#include "rsplit/triad_system.hpp"

using namespace rsplit;

namespace {

std::vector<double> gaussian(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(n);
  for (double& v : x) v = rng.normal();
  return x;
}

void BM_LorenzRotation(benchmark::State& state) {
  auto x = gaussian(6, 1);
  for (auto _ : state) {
    lorenz96::rotation_flow(x, 2, 0.1);
    benchmark::DoNotOptimize(x.data());
  }
}
BENCHMARK(BM_LorenzRotation);

void BM_LorenzCycle(benchmark::State& state) {
  lorenz96::LorenzSpec spec;
  spec.n = static_cast<std::size_t>(state.range(0));
  const SplittingScheme scheme = lorenz96::build_scheme(spec, {TimeLawKind::exponential, 0.1});
  CycleSampler sampler(scheme);
  Rng rng(2);
  auto x = gaussian(spec.n, 3);
  for (auto _ : state) {
    sampler.draw(rng);
    sampler.advance(x);
    benchmark::DoNotOptimize(x.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(scheme.size()));
}
BENCHMARK(BM_LorenzCycle)->Arg(6)->Arg(40);

void BM_EulerCycle(benchmark::State& state) {
  euler2d::EulerSpec spec;
  spec.N = static_cast<int>(state.range(0));
  const SplittingScheme scheme = euler2d::build_scheme(spec, {TimeLawKind::exponential, 0.1});
  CycleSampler sampler(scheme);
  Rng rng(4);
  auto x = gaussian(spec.dimension(), 5);
  for (auto _ : state) {
    sampler.draw(rng);
    sampler.advance(x);
    benchmark::DoNotOptimize(x.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(scheme.size()));
}
BENCHMARK(BM_EulerCycle)->Arg(2)->Arg(3)->Unit(benchmark::kMicrosecond);

void BM_TriadTaylorFlow(benchmark::State& state) {
  const euler2d::Lattice lat(2);
  const euler2d::Triad t = euler2d::make_triad(lat, {1, 0}, {1, 1});
  const TriadSystem sys = euler2d::slots(t, euler2d::Variant::aaa).system;
  const double duration = static_cast<double>(state.range(0)) / 100.0;
  Vec3 y{0.7, -0.4, 1.1};
  for (auto _ : state) {
    triad_system_flow(sys, y, duration);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_TriadTaylorFlow)->Arg(1)->Arg(10)->Arg(100);

void BM_EqualNormPairFlow(benchmark::State& state) {
  const euler2d::Lattice lat(2);
  const euler2d::Triad t = euler2d::make_triad(lat, {1, 0}, {0, 1});
  const TriadSystem sys = euler2d::slots(t, euler2d::Variant::aaa).system;
  Vec3 y{0.7, -0.4, 1.1};
  for (auto _ : state) {
    triad_system_flow(sys, y, 0.1);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_EqualNormPairFlow);

}  // namespace
