#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

#include "rsplit/errors.hpp"
#include "rsplit/integrator.hpp"
#include "rsplit/lorenz96.hpp"
#include "rsplit/splitting.hpp"
#include "support.hpp"

using namespace rsplit;
namespace l96 = rsplit::lorenz96;

namespace {

SplittingScheme lorenz_scheme(std::size_t n, double h) {
  l96::LorenzSpec spec;
  spec.n = n;
  return l96::build_scheme(spec, TimeLawSpec{TimeLawKind::exponential, h, 1.0});
}

SplittingScheme forced_lorenz_scheme(std::size_t n, double h, OrderPolicy order = OrderPolicy::fixed) {
  l96::LorenzSpec spec;
  spec.n = n;
  spec.conservative = false;
  spec.nu = 0.5;
  spec.forcing.assign(n, 8.0);
  return l96::build_scheme(spec, TimeLawSpec{TimeLawKind::exponential, h, 1.0}, order);
}

}  // namespace

TEST(ApplyCycle, ZeroTimesAreExactIdentity) {
  auto scheme = lorenz_scheme(6, 0.1);
  Rng rng(1);
  StateVector x{ModelKind::lorenz96, testing_support::random_state(6, rng)};
  const std::vector<double> zeros(scheme.size(), 0.0);
  EXPECT_EQ(apply_cycle(scheme, x, zeros), x);
}

TEST(ApplyCycle, SingleFieldSchemeIsThatFlow) {
  auto full = lorenz_scheme(5, 0.1);
  SplittingScheme one = full;
  one.fields = {full.fields[2]};
  std::vector<double> x{0.3, -1.2, 0.7, 2.0, -0.4};
  StateVector sx{ModelKind::lorenz96, x};
  const double t[] = {0.37};
  l96::rotation_flow(x, 2, 0.37);
  EXPECT_EQ(apply_cycle(one, sx, t).coords, x);
}

TEST(ApplyCycle, QuarterTurnExample) {
  auto scheme = lorenz_scheme(4, 0.1);
  StateVector x{ModelKind::lorenz96, {1, 0, 2, 0}};
  const double times[] = {0.0, std::numbers::pi / 2, 0.0, 0.0};
  const auto y = apply_cycle(scheme, x, times);
  const std::vector<double> want{1, 2, 0, 0};
  EXPECT_LT(testing_support::max_abs_diff(y.coords, want), 1e-15);
}

TEST(ApplyCycle, LengthMismatchIsUsageError) {
  auto scheme = lorenz_scheme(4, 0.1);
  StateVector x{ModelKind::lorenz96, {1, 0, 2, 0}};
  const double times[] = {0.1, 0.2};
  EXPECT_THROW(apply_cycle(scheme, x, times), UsageError);
}

TEST(RunChain, ZeroCyclesRecordsOnlyTheStart) {
  auto scheme = lorenz_scheme(6, 0.1);
  StateVector x{ModelKind::lorenz96, {1, 2, 3, 4, 5, 6}};
  const auto traj = run_chain(scheme, x, ChainRunConfig{0, 7, 1});
  ASSERT_EQ(traj.size(), 1u);
  EXPECT_EQ(traj.states[0], x.coords);
}

TEST(RunChain, StrideAndDeterminism) {
  auto scheme = lorenz_scheme(6, 0.1);
  StateVector x{ModelKind::lorenz96, {1, 2, 3, 4, 5, 6}};
  const auto a = run_chain(scheme, x, ChainRunConfig{100, 7, 10});
  const auto b = run_chain(scheme, x, ChainRunConfig{100, 7, 10});
  ASSERT_EQ(a.size(), 11u);
  EXPECT_EQ(a.cycles.back(), 100u);
  EXPECT_EQ(a.states, b.states);
  const auto c = run_chain(scheme, x, ChainRunConfig{100, 8, 10});
  EXPECT_NE(a.states.back(), c.states.back());
}

TEST(RunChain, ConservativeLorenzKeepsItsNorm) {
  auto scheme = lorenz_scheme(6, 0.1);
  Rng rng(3);
  StateVector x{ModelKind::lorenz96, testing_support::random_state(6, rng)};
  const double r0 = x.norm();
  double worst = 0.0;
  run_chain(scheme, x, ChainRunConfig{10000, 1, 1}, [&](std::size_t, std::span<const double> y, double) {
    const double r = std::sqrt(std::inner_product(y.begin(), y.end(), y.begin(), 0.0));
    worst = std::max(worst, std::abs(r - r0) / r0);
  });
  EXPECT_LT(worst, 1e-10);
}

TEST(RunChain, DivergenceCarriesCycleIndex) {
  SplittingScheme scheme;
  scheme.dimension = 1;
  scheme.time_law = TimeLawSpec{TimeLawKind::exponential, 1.0, 1.0};
  scheme.fields.push_back({"blowup", [](std::span<double> x, double t) { x[0] *= std::exp(300.0 * (1.0 + t)); }, {},
                           false});
  StateVector x{ModelKind::generic, {1.0}};
  try {
    run_chain(scheme, x, ChainRunConfig{100, 1, 1});
    FAIL() << "expected divergence";
  } catch (const NumericalDivergence& e) {
    EXPECT_GE(e.cycle(), 2u);
    EXPECT_LE(e.cycle(), 3u);
  }
}

TEST(RunChain, DimensionMismatchIsUsageError) {
  auto scheme = lorenz_scheme(6, 0.1);
  StateVector x{ModelKind::lorenz96, {1, 2, 3}};
  EXPECT_THROW(run_chain(scheme, x, ChainRunConfig{1, 1, 1}), UsageError);
}

TEST(RunChain, LeadingTimeTracksDissipativeDurations) {
  auto scheme = forced_lorenz_scheme(6, 0.1);
  StateVector x{ModelKind::lorenz96, {1, 2, 3, 4, 5, 6}};
  const auto traj = run_chain(scheme, x, ChainRunConfig{200, 4, 1});
  EXPECT_EQ(traj.leading_time.front(), 0.0);
  // Sum of 200 exponential(0.1) durations: mean 20, sd ~1.4.
  EXPECT_NEAR(traj.leading_time.back(), 20.0, 7.0);
  EXPECT_TRUE(std::is_sorted(traj.leading_time.begin(), traj.leading_time.end()));
}

TEST(CycleSampler, PermutedOrderKeepsDissipativeFirst) {
  auto scheme = forced_lorenz_scheme(6, 0.1, OrderPolicy::permuted);
  CycleSampler sampler(scheme);
  Rng rng(17);
  std::set<std::vector<std::size_t>> seen;
  for (int i = 0; i < 500; ++i) {
    sampler.draw(rng);
    std::vector<std::size_t> order(sampler.order().begin(), sampler.order().end());
    ASSERT_EQ(order.front(), 0u);
    auto sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k = 0; k < sorted.size(); ++k) ASSERT_EQ(sorted[k], k);
    seen.insert(order);
  }
  EXPECT_GT(seen.size(), 300u);
}

TEST(KernelAverage, ConstantObservableIsExact) {
  auto scheme = lorenz_scheme(6, 0.1);
  StateVector x{ModelKind::lorenz96, {1, 2, 3, 4, 5, 6}};
  const auto est = estimate_kernel_average(scheme, [](std::span<const double>) { return 2.5; }, x, 10, 100, 1);
  EXPECT_EQ(est.mean, 2.5);
  EXPECT_EQ(est.standard_error, 0.0);
}

TEST(KernelAverage, SquaredNormIsConserved) {
  auto scheme = lorenz_scheme(6, 0.1);
  StateVector x{ModelKind::lorenz96, {1, 2, 3, 4, 5, 6}};
  const auto est = estimate_kernel_average(
      scheme, [](std::span<const double> y) { return std::inner_product(y.begin(), y.end(), y.begin(), 0.0); }, x, 10,
      200, 1);
  EXPECT_NEAR(est.mean, 91.0, 1e-11);
  EXPECT_LT(est.standard_error, 1e-12);
}

TEST(KernelAverage, OneCycleMatchesGaussLaguerreQuadrature) {
  const double h = 0.01;
  auto scheme = lorenz_scheme(4, h);
  const std::vector<double> x0{1, 0, 2, 0};
  const auto gl = testing_support::gauss_laguerre(14);
  const std::size_t q = gl.nodes.size();
  double oracle = 0.0;
  for (std::size_t i0 = 0; i0 < q; ++i0)
    for (std::size_t i1 = 0; i1 < q; ++i1)
      for (std::size_t i2 = 0; i2 < q; ++i2)
        for (std::size_t i3 = 0; i3 < q; ++i3) {
          std::vector<double> x = x0;
          const std::size_t idx[] = {i0, i1, i2, i3};
          double w = 1.0;
          for (std::size_t k = 0; k < 4; ++k) {
            l96::rotation_flow(x, k, h * gl.nodes[idx[k]]);
            w *= gl.weights[idx[k]];
          }
          oracle += w * x[0];
        }
  const auto est = estimate_kernel_average(
      scheme, [](std::span<const double> y) { return y[0]; }, StateVector{ModelKind::lorenz96, x0}, 1, 200000, 9);
  EXPECT_GT(est.standard_error, 0.0);
  EXPECT_LT(std::abs(est.mean - oracle), 3.0 * est.standard_error);
}

TEST(KernelAverage, ResultIndependentOfThreadCount) {
  auto scheme = lorenz_scheme(6, 0.1);
  StateVector x{ModelKind::lorenz96, {1, 2, 3, 4, 5, 6}};
  auto f = [](std::span<const double> y) { return y[0] * y[1]; };
  setenv("RSPLIT_THREADS", "1", 1);
  const auto a = estimate_kernel_average(scheme, f, x, 5, 3000, 4);
  setenv("RSPLIT_THREADS", "3", 1);
  const auto b = estimate_kernel_average(scheme, f, x, 5, 3000, 4);
  unsetenv("RSPLIT_THREADS");
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.standard_error, b.standard_error);
}

TEST(KernelAverage, NeedsTwoSamples) {
  auto scheme = lorenz_scheme(6, 0.1);
  StateVector x{ModelKind::lorenz96, {1, 2, 3, 4, 5, 6}};
  EXPECT_THROW(estimate_kernel_average(scheme, [](std::span<const double>) { return 0.0; }, x, 1, 1, 1), UsageError);
}

TEST(MarkovProperty, RestartMatchesLongRun) {
  auto scheme = lorenz_scheme(6, 0.1);
  const StateVector x0{ModelKind::lorenz96, {1, -0.5, 0.25, 2, -1, 0.75}};
  auto f = [](std::span<const double> y) { return y[0] * y[0]; };
  const std::size_t m = 20, samples = 40000;
  const auto whole = estimate_kernel_average(scheme, f, x0, 2 * m, samples, 101);

  CycleSampler sampler(scheme);
  double s = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    std::vector<double> x = x0.coords;
    Rng first = Rng::substream(202, i), second = Rng::substream(303, i);
    for (std::size_t c = 0; c < m; ++c) {
      sampler.draw(first);
      sampler.advance(x);
    }
    for (std::size_t c = 0; c < m; ++c) {
      sampler.draw(second);
      sampler.advance(x);
    }
    const double v = f(x);
    s += v;
    s2 += v * v;
  }
  const double mean = s / samples;
  const double se = std::sqrt((s2 / samples - mean * mean) / samples);
  EXPECT_LT(std::abs(mean - whole.mean), 4.0 * std::hypot(se, whole.standard_error));
}

TEST(Pathwise, OneCycleUsesScaledStream) {
  auto scheme = lorenz_scheme(6, 0.1);
  const StateVector x0{ModelKind::lorenz96, {1, -0.5, 0.25, 2, -1, 0.75}};
  const std::vector<double> stream{0.3, 1.2, 0.1, 2.2, 0.9, 0.5};
  const auto got = pathwise_rescaled_run(scheme, x0, 0.7, 1, stream);
  std::vector<double> times(6);
  for (int i = 0; i < 6; ++i) times[i] = 0.7 * stream[i];
  EXPECT_EQ(got, apply_cycle(scheme, x0, times));
}

TEST(Pathwise, ShortStreamIsUsageError) {
  auto scheme = lorenz_scheme(6, 0.1);
  const StateVector x0{ModelKind::lorenz96, {1, -0.5, 0.25, 2, -1, 0.75}};
  const std::vector<double> stream(6 * 3, 1.0);
  EXPECT_THROW(pathwise_rescaled_run(scheme, x0, 1.0, 2, stream), UsageError);
}

TEST(Pathwise, UnitStreamIsLieTrotterWithFirstOrderError) {
  l96::LorenzSpec spec;
  spec.n = 6;
  auto scheme = l96::build_scheme(spec);
  const StateVector x0{ModelKind::lorenz96, {1, -0.5, 0.25, 2, -1, 0.75}};
  const auto exact = integrate(l96::rhs_field(spec), x0, 1.0, IntegratorConfig{1e-12, 1e-14, 20'000'000});
  std::vector<double> err;
  for (std::size_t m : {8u, 16u, 32u}) {
    const std::vector<double> ones(m * m * 6, 1.0);
    const auto got = pathwise_rescaled_run(scheme, x0, 1.0, m, ones);
    std::vector<double> x = x0.coords;
    const std::vector<double> step(6, 1.0 / (m * m));
    for (std::size_t c = 0; c < m * m; ++c) apply_cycle(scheme, x, step);
    EXPECT_EQ(got.coords, x);
    err.push_back(testing_support::max_abs_diff(got.coords, exact.coords));
  }
  EXPECT_NEAR(err[0] / err[1], 4.0, 0.6);
  EXPECT_NEAR(err[1] / err[2], 4.0, 0.6);
}
