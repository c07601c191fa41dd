#include "rsplit/integrator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "rsplit/errors.hpp"

namespace rsplit {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// b - b_hat (fifth minus fourth order weights).
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

double error_norm(std::span<const double> err, std::span<const double> y0, std::span<const double> y1,
                  const IntegratorConfig& cfg) {
  double acc = 0.0;
  for (std::size_t i = 0; i < err.size(); ++i) {
    const double scale = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double r = err[i] / scale;
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(err.size()));
}

}  // namespace

void IntegratorConfig::validate() const {
  auto ok = [](double tol) { return std::isfinite(tol) && tol > 0.0 && tol <= 1e-3; };
  if (!ok(rel_tol)) throw ConfigurationError("rel_tol must lie in (0, 1e-3], got " + std::to_string(rel_tol));
  if (!ok(abs_tol)) throw ConfigurationError("abs_tol must lie in (0, 1e-3], got " + std::to_string(abs_tol));
  if (max_steps < 1) throw ConfigurationError("max_steps must be at least 1");
}

std::vector<double> integrate(const VectorField& rhs, std::span<const double> x0, double t,
                              const IntegratorConfig& cfg, IntegrationStats* stats) {
  cfg.validate();
  const std::size_t n = x0.size();
  std::vector<double> y(x0.begin(), x0.end());
  if (t == 0.0 || n == 0) return y;

  const double dir = t > 0.0 ? 1.0 : -1.0;
  const double span = std::abs(t);
  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), ynew(n), err(n);

  rhs(y, k1);

  // Initial step from the Hairer-Norsett-Wanner heuristic.
  double h = 0.0;
  {
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double sc = cfg.abs_tol + cfg.rel_tol * std::abs(y[i]);
      d0 += (y[i] / sc) * (y[i] / sc);
      d1 += (k1[i] / sc) * (k1[i] / sc);
    }
    d0 = std::sqrt(d0 / n);
    d1 = std::sqrt(d1 / n);
    h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h = std::min(h, span);
  }

  double done = 0.0;
  std::size_t steps = 0;
  IntegrationStats local;
  while (done < span) {
    if (++steps > cfg.max_steps) {
      throw IntegrationError("integrate: step budget of " + std::to_string(cfg.max_steps) + " exhausted at t=" +
                             std::to_string(dir * done));
    }
    bool last = false;
    if (done + h >= span) {
      h = span - done;
      last = true;
    }
    const double hs = dir * h;

    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + hs * a21 * k1[i];
    rhs(tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + hs * (a31 * k1[i] + a32 * k2[i]);
    rhs(tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + hs * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    rhs(tmp, k4);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + hs * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    rhs(tmp, k5);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + hs * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    rhs(tmp, k6);
    for (std::size_t i = 0; i < n; ++i)
      ynew[i] = y[i] + hs * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    rhs(ynew, k7);
    for (std::size_t i = 0; i < n; ++i)
      err[i] = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);

    const double en = error_norm(err, y, ynew, cfg);
    if (!std::isfinite(en)) {
      throw IntegrationError("integrate: non-finite state at t=" + std::to_string(dir * done));
    }
    if (en <= 1.0) {
      done = last ? span : done + h;
      y.swap(ynew);
      k1.swap(k7);
      ++local.accepted;
      const double factor = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
      h *= factor;
    } else {
      ++local.rejected;
      h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
    }
    if (h <= span * 1e-16) throw IntegrationError("integrate: step size underflow at t=" + std::to_string(dir * done));
  }
  if (stats) *stats = local;
  return y;
}

StateVector integrate(const VectorField& rhs, const StateVector& x0, double t, const IntegratorConfig& cfg) {
  return {x0.model, integrate(rhs, x0.coords, t, cfg)};
}

}  // namespace rsplit
