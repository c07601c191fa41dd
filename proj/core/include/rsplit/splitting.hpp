#pragma once

// Random-splitting chain engine: composes the flows of splitting vector
// fields for independent random durations, one cycle at a time.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rsplit/rng.hpp"

namespace rsplit {

enum class ModelKind { generic, lorenz96, euler2d };

std::string to_string(ModelKind kind);

/// Flat coordinate vector tagged with the model it belongs to.
struct StateVector {
  ModelKind model = ModelKind::generic;
  std::vector<double> coords;

  std::size_t size() const noexcept { return coords.size(); }
  double norm() const noexcept;
  double norm_squared() const noexcept;
  bool operator==(const StateVector&) const = default;
};

/// Advances a state in place by a (possibly negative) duration.
using FlowFn = std::function<void(std::span<double> x, double duration)>;

/// Adds the value of a vector field at x into out (out += V(x)).
using FieldFn = std::function<void(std::span<const double> x, std::span<double> out)>;

/// Full right-hand side: writes V(x) into out (out = V(x)).
using VectorField = std::function<void(std::span<const double> x, std::span<double> out)>;

/// One splitting vector field together with its exact (or
/// integrator-accurate) flow.
struct FlowPrimitive {
  std::string id;
  FlowFn flow;
  FieldFn field;
  bool dissipative = false;
};

enum class TimeLawKind { exponential, gamma, uniform_positive };

std::string to_string(TimeLawKind kind);

/// Distribution of one flow duration. The default is exponential with the
/// given mean h; gamma uses `shape` with scale mean/shape; uniform_positive
/// is uniform on (0, 2 mean).
struct TimeLawSpec {
  TimeLawKind kind = TimeLawKind::exponential;
  double mean = 0.1;
  double shape = 1.0;

  /// Throws ConfigurationError for non-positive or non-finite parameters.
  void validate() const;
  double sample(Rng& rng) const;
  bool operator==(const TimeLawSpec&) const = default;
};

enum class OrderPolicy { fixed, permuted };

std::string to_string(OrderPolicy policy);

/// Ordered family of flow primitives. The first listed primitive is applied
/// first; a dissipative primitive, if present, sits at position 0 and stays
/// there under the permuted policy.
struct SplittingScheme {
  ModelKind model = ModelKind::generic;
  std::size_t dimension = 0;
  std::vector<FlowPrimitive> fields;
  TimeLawSpec time_law;
  OrderPolicy order = OrderPolicy::fixed;

  std::size_t size() const noexcept { return fields.size(); }
  bool has_dissipative_lead() const noexcept { return !fields.empty() && fields.front().dissipative; }

  /// Throws ConfigurationError when the law is invalid, a flow is missing,
  /// or a dissipative primitive appears anywhere but position 0.
  void validate() const;

  /// Pointwise sum of all splitting fields at x.
  std::vector<double> field_sum(std::span<const double> x) const;
};

struct ChainRunConfig {
  std::size_t cycles = 0;
  std::uint64_t seed = 0;
  std::size_t record_every = 1;

  void validate() const;
};

/// Recorded states of one chain. leading_time[i] is the total duration
/// spent in primitive 0 up to record i (the dissipative time for forced
/// schemes).
struct Trajectory {
  ModelKind model = ModelKind::generic;
  std::vector<std::size_t> cycles;
  std::vector<std::vector<double>> states;
  std::vector<double> leading_time;

  std::size_t size() const noexcept { return states.size(); }
};

std::vector<double> sample_cycle_times(const TimeLawSpec& law, std::size_t count, Rng& rng);

/// Composes the scheme's flows in place. times[i] is the duration of the
/// i-th applied flow; when `order` is non-empty the i-th applied flow is
/// fields[order[i]].
void apply_cycle(const SplittingScheme& scheme, std::span<double> x, std::span<const double> times,
                 std::span<const std::size_t> order = {});

StateVector apply_cycle(const SplittingScheme& scheme, const StateVector& x, std::span<const double> times);

/// Per-cycle randomness: an application order (drawn first, only for the
/// permuted policy) followed by one duration per primitive, all from the
/// same stream.
class CycleSampler {
 public:
  explicit CycleSampler(const SplittingScheme& scheme);

  void draw(Rng& rng);
  void advance(std::span<double> x) const;

  std::span<const double> times() const noexcept { return times_; }
  std::span<const std::size_t> order() const noexcept { return order_; }
  /// Duration given to primitive 0 in the last draw.
  double leading_time() const noexcept;

 private:
  const SplittingScheme* scheme_;
  std::vector<double> times_;
  std::vector<std::size_t> order_;
};

/// Called for every cycle index m = 0..cycles with the state after m cycles.
using ChainObserver = std::function<void(std::size_t cycle, std::span<const double> x, double leading_time)>;

/// Streams the chain through an observer instead of storing it.
void run_chain(const SplittingScheme& scheme, const StateVector& x0, const ChainRunConfig& cfg,
               const ChainObserver& observer);

/// Records x0 and every record_every-th cycle. Throws NumericalDivergence
/// (with the cycle index) on the first non-finite coordinate.
Trajectory run_chain(const SplittingScheme& scheme, const StateVector& x0, const ChainRunConfig& cfg);

using Observable = std::function<double(std::span<const double> x)>;

struct KernelEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
};

/// Monte Carlo estimate of E f(Phi^m(x0)). Sample i uses the substream
/// Rng::substream(seed, i), so results are independent of thread count.
std::vector<KernelEstimate> estimate_kernel_averages(const SplittingScheme& scheme,
                                                     std::span<const Observable> observables,
                                                     const StateVector& x0, std::size_t cycles,
                                                     std::size_t samples, std::uint64_t seed);

KernelEstimate estimate_kernel_average(const SplittingScheme& scheme, const Observable& f, const StateVector& x0,
                                       std::size_t cycles, std::size_t samples, std::uint64_t seed);

/// m*m cycles in fixed order with durations t * time_stream[i] / m^2,
/// consuming the first m*m*size() stream entries.
StateVector pathwise_rescaled_run(const SplittingScheme& scheme, const StateVector& x0, double t, std::size_t m,
                                  std::span<const double> time_stream);

}  // namespace rsplit
