#include "rsplit/splitting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "rsplit/errors.hpp"
#include "rsplit/parallel.hpp"

namespace rsplit {

namespace {

bool all_finite(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

void check_finite(std::span<const double> x, std::size_t cycle) {
  if (all_finite(x)) return;
  const auto it = std::find_if(x.begin(), x.end(), [](double v) { return !std::isfinite(v); });
  throw NumericalDivergence(cycle, "coordinate " + std::to_string(it - x.begin()) + " = " + std::to_string(*it));
}

constexpr std::size_t kSamplesPerChunk = 1024;

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::lorenz96: return "lorenz96";
    case ModelKind::euler2d: return "euler2d";
    case ModelKind::generic: break;
  }
  return "generic";
}

std::string to_string(TimeLawKind kind) {
  switch (kind) {
    case TimeLawKind::gamma: return "gamma";
    case TimeLawKind::uniform_positive: return "uniform-positive";
    case TimeLawKind::exponential: break;
  }
  return "exponential";
}

std::string to_string(OrderPolicy policy) { return policy == OrderPolicy::permuted ? "permuted" : "fixed"; }

double StateVector::norm_squared() const noexcept {
  return std::inner_product(coords.begin(), coords.end(), coords.begin(), 0.0);
}

double StateVector::norm() const noexcept { return std::sqrt(norm_squared()); }

void TimeLawSpec::validate() const {
  if (!(std::isfinite(mean) && mean > 0.0)) {
    throw ConfigurationError("time law mean must be positive and finite, got " + std::to_string(mean));
  }
  if (kind == TimeLawKind::gamma && !(std::isfinite(shape) && shape > 0.0)) {
    throw ConfigurationError("gamma time law shape must be positive and finite, got " + std::to_string(shape));
  }
}

double TimeLawSpec::sample(Rng& rng) const {
  switch (kind) {
    case TimeLawKind::exponential:
      return -mean * std::log(rng.uniform_open0());
    case TimeLawKind::gamma: {
      std::gamma_distribution<double> dist(shape, mean / shape);
      return dist(rng);
    }
    case TimeLawKind::uniform_positive:
      return 2.0 * mean * rng.uniform_open0();
  }
  return 0.0;
}

void SplittingScheme::validate() const {
  time_law.validate();
  if (fields.empty()) throw ConfigurationError("splitting scheme has no fields");
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (!fields[i].flow) throw ConfigurationError("field '" + fields[i].id + "' has no flow");
    if (fields[i].dissipative && i != 0) {
      throw ConfigurationError("dissipative field '" + fields[i].id + "' must be first in the cycle");
    }
  }
}

std::vector<double> SplittingScheme::field_sum(std::span<const double> x) const {
  std::vector<double> out(x.size(), 0.0);
  for (const auto& f : fields) {
    if (!f.field) throw UsageError("field '" + f.id + "' has no vector-field evaluator");
    f.field(x, out);
  }
  return out;
}

void ChainRunConfig::validate() const {
  if (record_every < 1) throw ConfigurationError("record_every must be at least 1");
}

std::vector<double> sample_cycle_times(const TimeLawSpec& law, std::size_t count, Rng& rng) {
  law.validate();
  if (count < 1) throw UsageError("sample_cycle_times: count must be at least 1");
  std::vector<double> out(count);
  for (auto& t : out) t = law.sample(rng);
  return out;
}

void apply_cycle(const SplittingScheme& scheme, std::span<double> x, std::span<const double> times,
                 std::span<const std::size_t> order) {
  const std::size_t n = scheme.fields.size();
  if (times.size() != n) {
    throw UsageError("apply_cycle: " + std::to_string(times.size()) + " durations for " + std::to_string(n) +
                     " fields");
  }
  if (!order.empty() && order.size() != n) throw UsageError("apply_cycle: order length mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    const auto& prim = order.empty() ? scheme.fields[i] : scheme.fields[order[i]];
    if (times[i] != 0.0) prim.flow(x, times[i]);
  }
}

StateVector apply_cycle(const SplittingScheme& scheme, const StateVector& x, std::span<const double> times) {
  StateVector out = x;
  apply_cycle(scheme, out.coords, times);
  return out;
}

CycleSampler::CycleSampler(const SplittingScheme& scheme) : scheme_(&scheme), times_(scheme.size()) {
  if (scheme.order == OrderPolicy::permuted) {
    order_.resize(scheme.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
  }
}

void CycleSampler::draw(Rng& rng) {
  if (!order_.empty()) {
    const std::size_t first = scheme_->has_dissipative_lead() ? 1 : 0;
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    // Fisher-Yates on positions [first, n).
    for (std::size_t i = order_.size(); i > first + 1; --i) {
      const std::size_t j = first + rng.below(i - first);
      std::swap(order_[i - 1], order_[j]);
    }
  }
  for (auto& t : times_) t = scheme_->time_law.sample(rng);
}

void CycleSampler::advance(std::span<double> x) const { apply_cycle(*scheme_, x, times_, order_); }

double CycleSampler::leading_time() const noexcept {
  if (times_.empty()) return 0.0;
  if (order_.empty()) return times_[0];
  const auto it = std::find(order_.begin(), order_.end(), std::size_t{0});
  return times_[static_cast<std::size_t>(it - order_.begin())];
}

void run_chain(const SplittingScheme& scheme, const StateVector& x0, const ChainRunConfig& cfg,
               const ChainObserver& observer) {
  scheme.validate();
  cfg.validate();
  if (scheme.dimension != 0 && x0.size() != scheme.dimension) {
    throw UsageError("run_chain: state dimension " + std::to_string(x0.size()) + " does not match scheme dimension " +
                     std::to_string(scheme.dimension));
  }
  std::vector<double> x = x0.coords;
  check_finite(x, 0);
  Rng rng(cfg.seed);
  CycleSampler sampler(scheme);
  double leading = 0.0;
  observer(0, x, leading);
  for (std::size_t m = 1; m <= cfg.cycles; ++m) {
    sampler.draw(rng);
    sampler.advance(x);
    leading += sampler.leading_time();
    check_finite(x, m);
    observer(m, x, leading);
  }
}

Trajectory run_chain(const SplittingScheme& scheme, const StateVector& x0, const ChainRunConfig& cfg) {
  Trajectory traj;
  traj.model = x0.model;
  const std::size_t stride = cfg.record_every;
  run_chain(scheme, x0, cfg, [&](std::size_t m, std::span<const double> x, double leading) {
    if (m % stride != 0) return;
    traj.cycles.push_back(m);
    traj.states.emplace_back(x.begin(), x.end());
    traj.leading_time.push_back(leading);
  });
  return traj;
}

std::vector<KernelEstimate> estimate_kernel_averages(const SplittingScheme& scheme,
                                                     std::span<const Observable> observables,
                                                     const StateVector& x0, std::size_t cycles,
                                                     std::size_t samples, std::uint64_t seed) {
  scheme.validate();
  if (samples < 2) throw UsageError("estimate_kernel_average: need at least 2 samples");
  const std::size_t nobs = observables.size();
  if (nobs == 0) return {};

  auto run_sample = [&](std::size_t index, std::vector<double>& x, CycleSampler& sampler, std::span<double> values) {
    std::copy(x0.coords.begin(), x0.coords.end(), x.begin());
    Rng rng = Rng::substream(seed, index);
    for (std::size_t m = 1; m <= cycles; ++m) {
      sampler.draw(rng);
      sampler.advance(x);
      check_finite(x, m);
    }
    for (std::size_t k = 0; k < nobs; ++k) values[k] = observables[k](x);
  };

  // Accumulate deviations from sample 0 so that constant observables give
  // an exact mean and a zero standard error.
  std::vector<double> shift(nobs);
  {
    std::vector<double> x(x0.size());
    CycleSampler sampler(scheme);
    run_sample(0, x, sampler, shift);
  }

  const std::size_t chunks = (samples + kSamplesPerChunk - 1) / kSamplesPerChunk;
  std::vector<double> sums(chunks * nobs, 0.0), squares(chunks * nobs, 0.0);
  parallel_chunks(chunks, [&](std::size_t c) {
    std::vector<double> x(x0.size()), values(nobs);
    CycleSampler sampler(scheme);
    const std::size_t begin = c * kSamplesPerChunk;
    const std::size_t end = std::min(samples, begin + kSamplesPerChunk);
    for (std::size_t i = begin; i < end; ++i) {
      run_sample(i, x, sampler, values);
      for (std::size_t k = 0; k < nobs; ++k) {
        const double d = values[k] - shift[k];
        sums[c * nobs + k] += d;
        squares[c * nobs + k] += d * d;
      }
    }
  });

  std::vector<KernelEstimate> out(nobs);
  const auto count = static_cast<double>(samples);
  for (std::size_t k = 0; k < nobs; ++k) {
    double s = 0.0, s2 = 0.0;
    for (std::size_t c = 0; c < chunks; ++c) {
      s += sums[c * nobs + k];
      s2 += squares[c * nobs + k];
    }
    const double mean_dev = s / count;
    const double var = std::max(0.0, (s2 - s * mean_dev) / (count - 1.0));
    out[k].mean = shift[k] + mean_dev;
    out[k].standard_error = std::sqrt(var / count);
  }
  return out;
}

KernelEstimate estimate_kernel_average(const SplittingScheme& scheme, const Observable& f, const StateVector& x0,
                                       std::size_t cycles, std::size_t samples, std::uint64_t seed) {
  const Observable fs[] = {f};
  return estimate_kernel_averages(scheme, fs, x0, cycles, samples, seed).front();
}

StateVector pathwise_rescaled_run(const SplittingScheme& scheme, const StateVector& x0, double t, std::size_t m,
                                  std::span<const double> time_stream) {
  scheme.validate();
  if (m < 1) throw UsageError("pathwise_rescaled_run: m must be at least 1");
  const std::size_t n = scheme.size();
  const std::size_t cycles = m * m;
  if (time_stream.size() < cycles * n) {
    throw UsageError("pathwise_rescaled_run: stream has " + std::to_string(time_stream.size()) + " entries, need " +
                     std::to_string(cycles * n));
  }
  const double scale = t / static_cast<double>(cycles);
  StateVector x = x0;
  std::vector<double> times(n);
  for (std::size_t c = 0; c < cycles; ++c) {
    for (std::size_t i = 0; i < n; ++i) times[i] = scale * time_stream[c * n + i];
    apply_cycle(scheme, x.coords, times);
    check_finite(x.coords, c + 1);
  }
  return x;
}

}  // namespace rsplit
