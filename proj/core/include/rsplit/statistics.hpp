#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace rsplit {

struct MeanEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
};

/// Batch-means estimate: the series is cut into `batches` equal batches
/// (a remainder at the front is dropped) and the standard error comes from
/// the spread of the batch averages. Needs at least 2 batches and as many
/// samples as batches.
MeanEstimate batch_means(std::span<const double> series, std::size_t batches);

/// Online accumulator of batch sums for a stream whose length is known in
/// advance, so long chains need not be stored.
class BatchAccumulator {
 public:
  BatchAccumulator(std::size_t total, std::size_t batches);
  void add(double value);
  MeanEstimate result() const;

 private:
  std::size_t skip_;
  std::size_t per_batch_;
  std::size_t seen_ = 0;
  std::vector<double> sums_;
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Least squares fit of log(y) against log(x).
LineFit fit_loglog(std::span<const double> x, std::span<const double> y);

/// Moments of one coordinate of the uniform distribution on the sphere of
/// radius R in R^n, estimated by normalizing standard normal vectors.
struct SphereMoments {
  MeanEstimate second;
  MeanEstimate fourth;
};

SphereMoments sphere_moments_by_sampling(std::size_t n, double radius, std::size_t samples, std::uint64_t seed);

}  // namespace rsplit
