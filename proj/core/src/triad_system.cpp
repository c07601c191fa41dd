#include "rsplit/triad_system.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rsplit/errors.hpp"

namespace rsplit {

namespace {

constexpr int kOrder = 24;
constexpr double kDriftTolerance = 1e-12;
constexpr std::size_t kMaxSteps = 50'000'000;

// Taylor coefficients of the solution through y at order kOrder.
void taylor_coefficients(const Vec3& c, const Vec3& y, double (&X)[kOrder + 1], double (&Y)[kOrder + 1],
                         double (&Z)[kOrder + 1]) {
  X[0] = y[0];
  Y[0] = y[1];
  Z[0] = y[2];
  for (int n = 0; n < kOrder; ++n) {
    double yz = 0.0, xz = 0.0, xy = 0.0;
    for (int i = 0; i <= n; ++i) {
      yz += Y[i] * Z[n - i];
      xz += X[i] * Z[n - i];
      xy += X[i] * Y[n - i];
    }
    const double inv = 1.0 / (n + 1);
    X[n + 1] = c[0] * yz * inv;
    Y[n + 1] = c[1] * xz * inv;
    Z[n + 1] = c[2] * xy * inv;
  }
}

double horner(const double (&a)[kOrder + 1], double h) {
  double acc = a[kOrder];
  for (int n = kOrder - 1; n >= 0; --n) acc = acc * h + a[n];
  return acc;
}

}  // namespace

std::array<std::size_t, 2> TriadSystem::equal_pair() const noexcept {
  if (weight[0] == weight[1]) return {0, 1};
  if (weight[0] == weight[2]) return {0, 2};
  if (weight[1] == weight[2]) return {1, 2};
  return {3, 3};
}

void triad_system_flow(const TriadSystem& sys, Vec3& y, double t, TriadFlowStats* stats) {
  if (t == 0.0) return;
  const auto pair = sys.equal_pair();
  if (pair[0] != 3) {
    // Equal norms force the third coefficient to vanish and c_q = -c_p, so
    // (y_p, y_q) turns at constant rate c_p y_r while y_r stays put.
    const std::size_t p = pair[0], q = pair[1], r = 3 - p - q;
    const double angle = sys.c[p] * y[r] * t;
    if (angle == 0.0) return;
    const double cs = std::cos(angle), sn = std::sin(angle);
    const double a = y[p], b = y[q];
    y[p] = a * cs + b * sn;
    y[q] = -a * sn + b * cs;
    return;
  }

  if (sys.unweighted(y) == 0.0) return;
  const double dir = t > 0.0 ? 1.0 : -1.0;
  const double span = std::abs(t);
  double done = 0.0;
  double X[kOrder + 1], Y[kOrder + 1], Z[kOrder + 1];
  TriadFlowStats local;
  const double scale = std::sqrt(sys.unweighted(y));
  while (done < span) {
    const double e0 = sys.unweighted(y);
    const double w0 = sys.weighted(y);
    if (++local.steps > kMaxSteps) throw IntegrationError("triad flow: step budget exhausted");
    taylor_coefficients(sys.c, y, X, Y, Z);
    // Radius-of-convergence estimate from the two highest coefficients.
    const double top1 = std::sqrt(X[kOrder - 1] * X[kOrder - 1] + Y[kOrder - 1] * Y[kOrder - 1] +
                                  Z[kOrder - 1] * Z[kOrder - 1]);
    const double top2 = std::sqrt(X[kOrder] * X[kOrder] + Y[kOrder] * Y[kOrder] + Z[kOrder] * Z[kOrder]);
    double rho = std::numeric_limits<double>::infinity();
    if (top1 > 0.0) rho = std::min(rho, std::pow(scale / top1, 1.0 / (kOrder - 1)));
    if (top2 > 0.0) rho = std::min(rho, std::pow(scale / top2, 1.0 / kOrder));
    double h = std::min(span - done, rho * std::exp(-2.0));
    for (;;) {
      const double hs = dir * h;
      const Vec3 next{horner(X, hs), horner(Y, hs), horner(Z, hs)};
      const double de = std::abs(sys.unweighted(next) - e0) / e0;
      const double dw = std::abs(sys.weighted(next) - w0) / w0;
      if (!(std::isfinite(de) && std::isfinite(dw))) throw IntegrationError("triad flow: non-finite state");
      if (de <= kDriftTolerance && dw <= kDriftTolerance) {
        y = next;
        done = (h == span - done) ? span : done + h;
        break;
      }
      ++local.halvings;
      h *= 0.5;
      if (h <= span * 1e-15) throw IntegrationError("triad flow: step size collapsed");
    }
  }
  if (stats) *stats = local;
}

}  // namespace rsplit
