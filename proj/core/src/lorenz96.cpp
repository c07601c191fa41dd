#include "rsplit/lorenz96.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "rsplit/errors.hpp"

namespace rsplit::lorenz96 {

namespace {

void check_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw UsageError(std::string(what) + ": expected " + std::to_string(want) + " coordinates, got " +
                     std::to_string(got));
  }
}

}  // namespace

void LorenzSpec::validate() const {
  if (n < 4) throw ConfigurationError("lorenz96: n must be at least 4, got " + std::to_string(n));
  if (conservative) return;
  if (!(std::isfinite(nu) && nu > 0.0)) throw ConfigurationError("lorenz96: forced model needs nu > 0");
  if (forcing.size() != n) {
    throw ConfigurationError("lorenz96: forcing has " + std::to_string(forcing.size()) + " entries, expected " +
                             std::to_string(n));
  }
  bool nonzero = false;
  for (double f : forcing) {
    if (!(std::isfinite(f) && f >= 0.0)) throw ConfigurationError("lorenz96: forcing entries must be nonnegative");
    nonzero = nonzero || f > 0.0;
  }
  if (!nonzero) throw ConfigurationError("lorenz96: forced model needs a nonzero forcing vector");
}

void full_rhs(const LorenzSpec& spec, std::span<const double> x, std::span<double> out) {
  const std::size_t n = spec.n;
  check_size(x.size(), n, "lorenz96::full_rhs");
  check_size(out.size(), n, "lorenz96::full_rhs");
  for (std::size_t k = 0; k < n; ++k) {
    const double next = x[(k + 1) % n];
    const double prev = x[(k + n - 1) % n];
    const double prev2 = x[(k + n - 2) % n];
    out[k] = (next - prev2) * prev;
  }
  if (!spec.conservative) {
    for (std::size_t k = 0; k < n; ++k) out[k] += -spec.nu * x[k] + spec.forcing[k];
  }
}

std::vector<double> full_rhs(const LorenzSpec& spec, std::span<const double> x) {
  std::vector<double> out(x.size());
  full_rhs(spec, x, out);
  return out;
}

void rotation_field(std::span<const double> x, std::size_t k, std::span<double> out) {
  const std::size_t n = x.size();
  const std::size_t k1 = (k + 1) % n;
  const double w = x[(k + n - 1) % n];
  out[k] += x[k1] * w;
  out[k1] -= x[k] * w;
}

void rotation_flow(std::span<double> x, std::size_t k, double t) {
  const std::size_t n = x.size();
  const std::size_t k1 = (k + 1) % n;
  const double angle = x[(k + n - 1) % n] * t;
  if (angle == 0.0) return;
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const double a = x[k];
  const double b = x[k1];
  x[k] = a * c + b * s;
  x[k1] = -a * s + b * c;
}

void dissipative_flow(std::span<double> x, double t, double nu, std::span<const double> forcing) {
  if (t == 0.0) return;
  // x(t) = e^{-nu t} x + (1 - e^{-nu t}) F / nu, written with expm1 so that
  // small nu t keeps full relative accuracy.
  const double g = -std::expm1(-nu * t);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += g * (forcing[i] / nu - x[i]);
}

double fixed_point_residual(std::span<const double> x) {
  const std::size_t n = x.size();
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double a = x[k];
    const double b = x[(k + 1) % n];
    const double w = x[(k + n - 1) % n];
    acc += (a * a + b * b) * w * w;
  }
  return acc;
}

SplittingScheme build_scheme(const LorenzSpec& spec, const TimeLawSpec& law, OrderPolicy order) {
  spec.validate();
  law.validate();
  SplittingScheme scheme;
  scheme.model = ModelKind::lorenz96;
  scheme.dimension = spec.n;
  scheme.time_law = law;
  scheme.order = order;
  if (!spec.conservative) {
    auto forcing = std::make_shared<const std::vector<double>>(spec.forcing);
    const double nu = spec.nu;
    FlowPrimitive v0;
    v0.id = "V0";
    v0.dissipative = true;
    v0.flow = [forcing, nu](std::span<double> x, double t) { dissipative_flow(x, t, nu, *forcing); };
    v0.field = [forcing, nu](std::span<const double> x, std::span<double> out) {
      for (std::size_t i = 0; i < x.size(); ++i) out[i] += -nu * x[i] + (*forcing)[i];
    };
    scheme.fields.push_back(std::move(v0));
  }
  for (std::size_t k = 0; k < spec.n; ++k) {
    FlowPrimitive p;
    p.id = "V" + std::to_string(k + 1);
    p.flow = [k](std::span<double> x, double t) { rotation_flow(x, k, t); };
    p.field = [k](std::span<const double> x, std::span<double> out) { rotation_field(x, k, out); };
    scheme.fields.push_back(std::move(p));
  }
  return scheme;
}

VectorField rhs_field(const LorenzSpec& spec) {
  spec.validate();
  return [spec](std::span<const double> x, std::span<double> out) { full_rhs(spec, x, out); };
}

}  // namespace rsplit::lorenz96
