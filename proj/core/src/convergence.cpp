#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "rsplit/diagnostics.hpp"
#include "rsplit/errors.hpp"
#include "rsplit/rng.hpp"

namespace rsplit {

namespace {

std::vector<std::string> split_colon(const std::string& s) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(':', start);
    parts.push_back(s.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::size_t parse_index(const std::string& text, std::size_t dimension, const std::string& id) {
  std::size_t value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || text.empty()) throw UsageError("observable '" + id + "': bad index");
  if (value >= dimension) {
    throw UsageError("observable '" + id + "': index " + text + " out of range for dimension " +
                     std::to_string(dimension));
  }
  return value;
}

std::size_t cycles_for(double t, double h) {
  if (!(h > 0.0 && std::isfinite(h))) throw UsageError("weak_error_study: h must be positive");
  const double m = std::round(t / h);
  if (m < 1.0 || std::abs(m * h - t) > 1e-9 * t) {
    throw UsageError("weak_error_study: h = " + std::to_string(h) + " does not divide t = " + std::to_string(t));
  }
  return static_cast<std::size_t>(m);
}

IntegratorConfig tightened(const IntegratorConfig& cfg) {
  IntegratorConfig t = cfg;
  t.rel_tol = cfg.rel_tol / 100.0;
  t.abs_tol = cfg.abs_tol / 100.0;
  return t;
}

}  // namespace

NamedObservable parse_observable(const std::string& id, std::size_t dimension) {
  const auto parts = split_colon(id);
  const std::string& name = parts.front();
  if (name == "product" && parts.size() == 3) {
    const std::size_t i = parse_index(parts[1], dimension, id), j = parse_index(parts[2], dimension, id);
    return {id, [i, j](std::span<const double> x) { return x[i] * x[j]; }};
  }
  if (parts.size() == 2) {
    const std::size_t i = parse_index(parts[1], dimension, id);
    if (name == "coord") return {id, [i](std::span<const double> x) { return x[i]; }};
    if (name == "square") return {id, [i](std::span<const double> x) { return x[i] * x[i]; }};
    if (name == "cos") return {id, [i](std::span<const double> x) { return std::cos(x[i]); }};
  }
  throw UsageError("unknown observable '" + id + "' (expected coord:i, square:i, product:i:j or cos:i)");
}

ConvergenceReport weak_error_study(const SchemeFactory& factory, const VectorField& rhs,
                                   std::span<const NamedObservable> observables, const StateVector& x0,
                                   const WeakStudyConfig& cfg) {
  if (!(cfg.t > 0.0)) throw UsageError("weak_error_study: t must be positive");
  if (cfg.h_grid.empty()) throw UsageError("weak_error_study: empty h grid");
  if (observables.empty()) throw UsageError("weak_error_study: no observables");
  cfg.integrator.validate();
  std::vector<std::size_t> cycles;
  for (double h : cfg.h_grid) cycles.push_back(cycles_for(cfg.t, h));

  ConvergenceReport report;
  report.kind = "weak";

  const auto ref = integrate(rhs, x0.coords, cfg.t, tightened(cfg.integrator));
  const auto loose = integrate(rhs, x0.coords, cfg.t, cfg.integrator);
  std::vector<double> ref_values;
  for (const auto& o : observables) {
    const double f = o.fn(ref);
    ref_values.push_back(f);
    report.reference_error = std::max(report.reference_error, std::abs(f - o.fn(loose)));
  }
  report.reference_error = std::max(report.reference_error, std::numeric_limits<double>::epsilon());

  std::vector<Observable> fns;
  for (const auto& o : observables) fns.push_back(o.fn);
  for (std::size_t i = 0; i < cfg.h_grid.size(); ++i) {
    const SplittingScheme scheme = factory(cfg.h_grid[i]);
    const auto est = estimate_kernel_averages(scheme, fns, x0, cycles[i], cfg.samples, derive_seed(cfg.seed, i));
    for (std::size_t k = 0; k < observables.size(); ++k) {
      ConvergencePoint p;
      p.param = cfg.h_grid[i];
      p.observable = observables[k].id;
      p.estimate = est[k].mean;
      p.reference = ref_values[k];
      p.error = std::abs(p.estimate - p.reference);
      p.standard_error = est[k].standard_error;
      p.included = p.standard_error <= 0.25 * p.error;
      report.inconclusive = report.inconclusive || p.standard_error > 0.5 * p.error;
      report.points.push_back(p);
    }
  }

  double smallest = std::numeric_limits<double>::infinity();
  for (const auto& p : report.points)
    if (p.included) smallest = std::min(smallest, p.error);
  report.reference_dominant = !(100.0 * report.reference_error > smallest);

  if (!report.reference_dominant) {
    report.notes.push_back("reference error not 100x below the smallest measured error, slope fit skipped");
  }

  for (const auto& o : observables) {
    ObservableFit fit;
    fit.observable = o.id;
    std::vector<std::pair<double, double>> pts;
    for (const auto& p : report.points)
      if (p.observable == o.id && p.included) pts.emplace_back(p.param, p.error);
    std::sort(pts.begin(), pts.end(), std::greater<>());
    for (std::size_t i = 1; i < pts.size(); ++i) fit.monotone = fit.monotone && pts[i].second < pts[i - 1].second;
    fit.points_used = pts.size();
    if (report.reference_dominant && pts.size() >= 2) {
      std::vector<double> xs, ys;
      for (const auto& [h, e] : pts) {
        xs.push_back(h);
        ys.push_back(e);
      }
      fit.slope = fit_loglog(xs, ys).slope;
    }
    report.fits.push_back(fit);
  }
  if (report.inconclusive) report.notes.push_back("Monte Carlo error above half the bias at some point; raise samples");
  return report;
}

ConvergenceReport weak_error_study(const ModelSpec& spec, const TimeLawSpec& law, OrderPolicy order,
                                   std::span<const NamedObservable> observables, const StateVector& x0,
                                   const WeakStudyConfig& cfg) {
  validate(spec);
  const SchemeFactory factory = [&](double h) {
    TimeLawSpec l = law;
    l.mean = h;
    return build_scheme(spec, l, order);
  };
  return weak_error_study(factory, rhs_field(spec), observables, x0, cfg);
}

std::vector<double> pathwise_time_stream(std::size_t length, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> s(length);
  for (auto& v : s) v = -std::log(rng.uniform_open0());
  return s;
}

ConvergenceReport pathwise_study(const SplittingScheme& scheme, const VectorField& rhs, const StateVector& x0,
                                 const PathwiseStudyConfig& cfg, std::span<const double> time_stream) {
  if (!(cfg.t > 0.0)) throw UsageError("pathwise_study: t must be positive");
  if (cfg.m_list.empty()) throw UsageError("pathwise_study: empty m list");
  for (std::size_t i = 0; i < cfg.m_list.size(); ++i) {
    if (cfg.m_list[i] < 1 || (i > 0 && cfg.m_list[i] <= cfg.m_list[i - 1])) {
      throw UsageError("pathwise_study: m list must be positive and strictly increasing");
    }
  }
  cfg.integrator.validate();
  const auto ref = integrate(rhs, x0.coords, cfg.t, cfg.integrator);

  ConvergenceReport report;
  report.kind = "pathwise";
  for (std::size_t m : cfg.m_list) {
    const StateVector x = pathwise_rescaled_run(scheme, x0, cfg.t, m, time_stream);
    double d2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) d2 += (x.coords[i] - ref[i]) * (x.coords[i] - ref[i]);
    ConvergencePoint p;
    p.param = static_cast<double>(m);
    p.observable = "distance";
    p.error = std::sqrt(d2);
    p.estimate = p.error;
    report.points.push_back(p);
  }
  for (std::size_t i = 1; i < report.points.size(); ++i) {
    report.strictly_decreasing = report.strictly_decreasing && report.points[i].error < report.points[i - 1].error;
  }
  const double last = report.points.back().error;
  report.reduction = last > 0.0 ? report.points.front().error / last : std::numeric_limits<double>::infinity();

  ObservableFit fit;
  fit.observable = "distance";
  fit.monotone = report.strictly_decreasing;
  fit.points_used = report.points.size();
  bool positive = true;
  for (const auto& p : report.points) positive = positive && p.error > 0.0;
  if (positive && report.points.size() >= 2) {
    std::vector<double> xs, ys;
    for (const auto& p : report.points) {
      xs.push_back(p.param);
      ys.push_back(p.error);
    }
    fit.slope = fit_loglog(xs, ys).slope;
  }
  report.fits.push_back(fit);
  report.notes.push_back("no rate is known for pathwise convergence; the reduction target is empirical");
  return report;
}

ConvergenceReport pathwise_study(const SplittingScheme& scheme, const VectorField& rhs, const StateVector& x0,
                                 const PathwiseStudyConfig& cfg) {
  if (cfg.m_list.empty()) throw UsageError("pathwise_study: empty m list");
  const std::size_t mmax = *std::max_element(cfg.m_list.begin(), cfg.m_list.end());
  const auto stream = pathwise_time_stream(mmax * mmax * scheme.size(), cfg.seed);
  return pathwise_study(scheme, rhs, x0, cfg, stream);
}

ConvergenceReport pathwise_study(const ModelSpec& spec, const StateVector& x0, const PathwiseStudyConfig& cfg) {
  validate(spec);
  return pathwise_study(build_scheme(spec), rhs_field(spec), x0, cfg);
}

}  // namespace rsplit
