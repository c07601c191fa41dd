#pragma once

// Root finding on single-triad orbits: times that zero a mode, activate all
// three modes, or turn an equal-norm pair to a requested angle.

#include <array>
#include <span>

#include "rsplit/euler2d.hpp"
#include "rsplit/triad_system.hpp"

namespace rsplit::triad_control {

enum class Target { middle, largest };

struct TriadOrbitQuery {
  euler2d::Triad triad;
  euler2d::Variant variant = euler2d::Variant::aaa;
  euler2d::VariantSlots slots;
  /// Slot positions sorted by mode norm (smallest first).
  std::array<std::size_t, 3> by_norm{};
  bool distinct_norms = false;

  TriadOrbitQuery(const euler2d::Triad& t, euler2d::Variant v);

  Vec3 designated(std::span<const double> q) const;
  void store(std::span<double> q, const Vec3& y) const;
};

/// E_i = sum y^2 (unweighted) and calE_i = sum y^2 / |mode|^2 over the
/// three designated coordinates.
struct PartialInvariants {
  double E = 0.0;
  double calE = 0.0;
};

PartialInvariants partial_invariants(std::span<const double> q, const euler2d::Triad& t, euler2d::Variant v);

/// E_i != |mid|^2 calE_i, judged with a 1e-12 relative margin.
bool satisfies_degcond(std::span<const double> q, const TriadOrbitQuery& query);

/// Period of the orbit through the designated coordinates of q. Throws
/// DegenerateOrbitError at fixed points or when no return is found within
/// the search cap.
double orbit_period(std::span<const double> q, const TriadOrbitQuery& query);

/// tau >= 0 after which the target coordinate vanishes while the other two
/// keep their signs (sign(0) = +1). Returns 0 when the target is already
/// below 1e-9 sqrt(E_i). Throws DegenerateOrbitError when the orbit cannot
/// reach such a point, UsageError when two mode norms coincide.
double zeroing_time(std::span<const double> q, const euler2d::Triad& t, euler2d::Variant v, Target target);

/// Small tau >= 0 after which all three designated coordinates exceed
/// 1e-6 sqrt(E_i) in magnitude with initially nonzero signs kept. Throws
/// InsufficientActivityError when two or more coordinates vanish.
double activation_time(std::span<const double> q, const euler2d::Triad& t, euler2d::Variant v);

/// t >= 0 after which the equal-norm pair (lower slot first) sits at angle
/// theta. Throws ZeroRateError when the fixed coordinate is zero and
/// UsageError when no two norms coincide.
double pair_rotation_time(std::span<const double> q, const euler2d::Triad& t, euler2d::Variant v, double theta);

}  // namespace rsplit::triad_control
