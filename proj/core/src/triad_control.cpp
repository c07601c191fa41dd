#include "rsplit/triad_control.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "rsplit/errors.hpp"

namespace rsplit::triad_control {

namespace {

constexpr double kZeroTolerance = 1e-9;
constexpr double kActiveTolerance = 1e-6;
constexpr std::size_t kScanSamples = 2000;
constexpr std::size_t kPeriodStepCap = 400000;

int sign_of(double x) { return x >= 0.0 ? 1 : -1; }

double dist(const Vec3& a, const Vec3& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3 flowed(const TriadSystem& sys, Vec3 y, double t) {
  triad_system_flow(sys, y, t);
  return y;
}

double rate_scale(const TriadSystem& sys, const Vec3& y) {
  const double cmax = std::max({std::abs(sys.c[0]), std::abs(sys.c[1]), std::abs(sys.c[2])});
  return cmax * std::sqrt(sys.unweighted(y));
}

// Root of g on [0, width] given g(0) and g(width) of opposite sign:
// bisection down to 1e-12 relative width, then one secant step kept
// inside the final bracket.
template <class G>
double refine_root(const G& g, double width, double g0, double g1) {
  double lo = 0.0, hi = width, glo = g0, ghi = g1;
  const double tol = 1e-12 * std::max(1.0, width);
  for (int it = 0; it < 200 && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if (gm == 0.0) return mid;
    if ((gm < 0.0) == (glo < 0.0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
      ghi = gm;
    }
  }
  if (ghi != glo) {
    const double s = lo - glo * (hi - lo) / (ghi - glo);
    if (s >= lo && s <= hi) return s;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TriadOrbitQuery::TriadOrbitQuery(const euler2d::Triad& t, euler2d::Variant v)
    : triad(t), variant(v), slots(euler2d::slots(t, v)) {
  by_norm = {0, 1, 2};
  const auto& w = slots.system.weight;
  std::stable_sort(by_norm.begin(), by_norm.end(), [&](std::size_t a, std::size_t b) { return w[a] < w[b]; });
  distinct_norms = w[by_norm[0]] < w[by_norm[1]] && w[by_norm[1]] < w[by_norm[2]];
}

Vec3 TriadOrbitQuery::designated(std::span<const double> q) const {
  return {q[slots.coord[0]], q[slots.coord[1]], q[slots.coord[2]]};
}

void TriadOrbitQuery::store(std::span<double> q, const Vec3& y) const {
  for (int i = 0; i < 3; ++i) q[slots.coord[i]] = y[i];
}

PartialInvariants partial_invariants(std::span<const double> q, const euler2d::Triad& t, euler2d::Variant v) {
  const TriadOrbitQuery query(t, v);
  const Vec3 y = query.designated(q);
  return {query.slots.system.unweighted(y), query.slots.system.weighted(y)};
}

bool satisfies_degcond(std::span<const double> q, const TriadOrbitQuery& query) {
  const Vec3 y = query.designated(q);
  const double E = query.slots.system.unweighted(y);
  const double calE = query.slots.system.weighted(y);
  const double mid = query.slots.system.weight[query.by_norm[1]];
  return std::abs(E - mid * calE) > 1e-12 * E;
}

double orbit_period(std::span<const double> q, const TriadOrbitQuery& query) {
  const TriadSystem& sys = query.slots.system;
  const Vec3 y0 = query.designated(q);
  const Vec3 v0 = sys.velocity(y0);
  const double scale = std::sqrt(sys.unweighted(y0));
  const double lambda = rate_scale(sys, y0);
  if (scale == 0.0 || lambda == 0.0 || std::sqrt(dot(v0, v0)) <= 1e-14 * lambda * scale) {
    throw DegenerateOrbitError("orbit_period: start is a fixed point of the triad system");
  }
  // Poincare section through y0 normal to the initial velocity; the period is
  // the first upward crossing that lands back on y0.
  auto g = [&](const Vec3& y) { return dot({y[0] - y0[0], y[1] - y0[1], y[2] - y0[2]}, v0); };
  const double dt = 0.02 / lambda;
  Vec3 y = y0;
  double t = 0.0, gprev = 0.0;
  for (std::size_t step = 0; step < kPeriodStepCap; ++step) {
    const Vec3 prev = y;
    triad_system_flow(sys, y, dt);
    const double gnext = g(y);
    if (gprev < 0.0 && gnext >= 0.0 && dist(y, y0) < 0.1 * scale) {
      const double s = refine_root([&](double u) { return g(flowed(sys, prev, u)); }, dt, gprev, gnext);
      const double period = t + s;
      if (dist(flowed(sys, y0, period), y0) < 1e-8 * scale) return period;
    }
    gprev = gnext;
    t += dt;
  }
  throw DegenerateOrbitError("orbit_period: no return within " + std::to_string(kPeriodStepCap) +
                             " steps; the orbit is at or near a pole");
}

double zeroing_time(std::span<const double> q, const euler2d::Triad& t, euler2d::Variant v, Target target) {
  const TriadOrbitQuery query(t, v);
  if (!query.distinct_norms) throw UsageError("zeroing_time: the triad's mode norms are not distinct");
  const TriadSystem& sys = query.slots.system;
  const Vec3 y0 = query.designated(q);
  const double E = sys.unweighted(y0), calE = sys.weighted(y0);
  const double scale = std::sqrt(E);
  const std::size_t small = query.by_norm[0], mid = query.by_norm[1], large = query.by_norm[2];
  const std::size_t tgt = target == Target::middle ? mid : large;

  if (std::abs(y0[tgt]) < kZeroTolerance * scale || scale == 0.0) return 0.0;
  const int zeros = (std::abs(y0[0]) <= 1e-12 * scale) + (std::abs(y0[1]) <= 1e-12 * scale) +
                    (std::abs(y0[2]) <= 1e-12 * scale);
  if (zeros >= 2) throw DegenerateOrbitError("zeroing_time: two designated coordinates vanish (fixed point)");
  if (!satisfies_degcond(q, query)) {
    throw DegenerateOrbitError("zeroing_time: E_i = |mid|^2 calE_i, the orbit runs into the pole");
  }
  if (target == Target::largest) {
    const double ws = sys.weight[small], wm = sys.weight[mid];
    if (!(ws * calE < E && E < wm * calE)) {
      throw DegenerateOrbitError("zeroing_time: largest mode cannot vanish unless |small|^2 calE_i < E_i < |mid|^2 calE_i");
    }
  }

  std::array<std::size_t, 2> survivors{};
  for (std::size_t i = 0, n = 0; i < 3; ++i)
    if (i != tgt) survivors[n++] = i;
  const int want0 = sign_of(y0[survivors[0]]), want1 = sign_of(y0[survivors[1]]);

  const double period = orbit_period(q, query);
  const double dt = period / kScanSamples;
  Vec3 y = y0;
  for (std::size_t i = 0; i < kScanSamples + 2; ++i) {
    const Vec3 prev = y;
    triad_system_flow(sys, y, dt);
    if ((prev[tgt] < 0.0) == (y[tgt] < 0.0)) continue;
    const double s = refine_root([&](double u) { return flowed(sys, prev, u)[tgt]; }, dt, prev[tgt], y[tgt]);
    const double tau = i * dt + s;
    const Vec3 end = flowed(sys, y0, tau);
    if (sign_of(end[survivors[0]]) == want0 && sign_of(end[survivors[1]]) == want1 &&
        std::abs(end[tgt]) < kZeroTolerance * scale) {
      return tau;
    }
  }
  throw DegenerateOrbitError("zeroing_time: no admissible zero found within one period");
}

double activation_time(std::span<const double> q, const euler2d::Triad& t, euler2d::Variant v) {
  const TriadOrbitQuery query(t, v);
  const TriadSystem& sys = query.slots.system;
  const Vec3 y0 = query.designated(q);
  const double scale = std::sqrt(sys.unweighted(y0));
  const double floor = kActiveTolerance * scale;
  int zeros = 0;
  std::size_t zero_slot = 3;
  for (std::size_t i = 0; i < 3; ++i) {
    if (std::abs(y0[i]) <= 1e-12 * std::max(scale, 1e-300)) {
      ++zeros;
      zero_slot = i;
    }
  }
  if (scale == 0.0 || zeros >= 2) {
    throw InsufficientActivityError("activation_time: at least two designated coordinates vanish");
  }
  auto active = [&](const Vec3& y) {
    for (std::size_t i = 0; i < 3; ++i) {
      if (std::abs(y[i]) <= floor) return false;
      if (i != zero_slot && sign_of(y[i]) != sign_of(y0[i])) return false;
    }
    return true;
  };
  if (active(y0)) return 0.0;
  // Growth rate of the weakest coordinate at the start fixes the first trial.
  const Vec3 v0 = sys.velocity(y0);
  std::size_t weak = zero_slot;
  if (weak == 3) {
    weak = 0;
    for (std::size_t i = 1; i < 3; ++i)
      if (std::abs(y0[i]) < std::abs(y0[weak])) weak = i;
  }
  if (v0[weak] == 0.0) {
    throw InsufficientActivityError("activation_time: the coupling that would activate the weak coordinate vanishes");
  }
  double tau = 2.0 * floor / std::abs(v0[weak]);
  for (int it = 0; it < 200; ++it) {
    if (active(flowed(sys, y0, tau))) return tau;
    tau *= 1.5;
  }
  throw InsufficientActivityError("activation_time: no activating time found");
}

double pair_rotation_time(std::span<const double> q, const euler2d::Triad& t, euler2d::Variant v, double theta) {
  const TriadOrbitQuery query(t, v);
  const TriadSystem& sys = query.slots.system;
  const auto pair = sys.equal_pair();
  if (pair[0] == 3) throw UsageError("pair_rotation_time: no two mode norms coincide");
  const std::size_t p = pair[0], r = 3 - pair[0] - pair[1];
  const Vec3 y = query.designated(q);
  const double omega = sys.c[p] * y[r];
  if (omega == 0.0) throw ZeroRateError("pair_rotation_time: the fixed coordinate is zero, the pair does not turn");
  // Phase decreases at rate omega: (y_p, y_q) = r (cos(phi - omega t), sin(phi - omega t)).
  const double phi = std::atan2(y[pair[1]], y[p]);
  const double two_pi = 2.0 * std::numbers::pi;
  double d = omega > 0.0 ? phi - theta : theta - phi;
  d = std::fmod(d, two_pi);
  if (d < 0.0) d += two_pi;
  if (d >= two_pi) d = 0.0;
  return d / std::abs(omega);
}

}  // namespace rsplit::triad_control
