#include "rsplit/statistics.hpp"

#include <cmath>
#include <string>

#include "rsplit/errors.hpp"
#include "rsplit/rng.hpp"

namespace rsplit {

namespace {

MeanEstimate from_batches(std::span<const double> sums, double per_batch) {
  const auto k = static_cast<double>(sums.size());
  double mean = 0.0;
  for (double s : sums) mean += s / per_batch;
  mean /= k;
  double var = 0.0;
  for (double s : sums) {
    const double d = s / per_batch - mean;
    var += d * d;
  }
  var /= (k - 1.0);
  return {mean, std::sqrt(var / k)};
}

}  // namespace

MeanEstimate batch_means(std::span<const double> series, std::size_t batches) {
  BatchAccumulator acc(series.size(), batches);
  for (double v : series) acc.add(v);
  return acc.result();
}

BatchAccumulator::BatchAccumulator(std::size_t total, std::size_t batches) {
  if (batches < 2) throw UsageError("batch means need at least 2 batches");
  if (total < batches) {
    throw UsageError("batch means: " + std::to_string(total) + " samples for " + std::to_string(batches) +
                     " batches");
  }
  per_batch_ = total / batches;
  skip_ = total - per_batch_ * batches;
  sums_.assign(batches, 0.0);
}

void BatchAccumulator::add(double value) {
  const std::size_t i = seen_++;
  if (i < skip_) return;
  const std::size_t b = (i - skip_) / per_batch_;
  if (b < sums_.size()) sums_[b] += value;
}

MeanEstimate BatchAccumulator::result() const {
  return from_batches(sums_, static_cast<double>(per_batch_));
}

LineFit fit_loglog(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw UsageError("fit_loglog: need at least two paired points");
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw UsageError("fit_loglog: values must be positive");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw UsageError("fit_loglog: abscissae are all equal");
  LineFit fit;
  fit.slope = (n * sxy - sx * sy) / den;
  fit.intercept = (sy - fit.slope * sx) / n;
  return fit;
}

SphereMoments sphere_moments_by_sampling(std::size_t n, double radius, std::size_t samples, std::uint64_t seed) {
  if (n < 1 || samples < 2) throw UsageError("sphere_moments_by_sampling: need n >= 1 and samples >= 2");
  Rng rng(seed);
  std::vector<double> z(n);
  // Every coordinate of a draw is exchangeable, so all n are averaged per
  // draw and the draw-level averages are treated as iid.
  double s2 = 0, s2s = 0, s4 = 0, s4s = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    double r2 = 0.0;
    for (auto& v : z) {
      v = rng.normal();
      r2 += v * v;
    }
    const double scale2 = radius * radius / r2;
    double m2 = 0.0, m4 = 0.0;
    for (double v : z) {
      const double x2 = v * v * scale2;
      m2 += x2;
      m4 += x2 * x2;
    }
    m2 /= static_cast<double>(n);
    m4 /= static_cast<double>(n);
    s2 += m2;
    s2s += m2 * m2;
    s4 += m4;
    s4s += m4 * m4;
  }
  const auto N = static_cast<double>(samples);
  auto est = [N](double s, double ss) {
    const double mean = s / N;
    const double var = std::max(0.0, (ss - s * mean) / (N - 1.0));
    return MeanEstimate{mean, std::sqrt(var / N)};
  };
  return {est(s2, s2s), est(s4, s4s)};
}

}  // namespace rsplit
