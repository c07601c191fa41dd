#pragma once

// The three-coordinate quadratic system behind every Euler splitting field:
//   y0' = c0 y1 y2,  y1' = c1 y0 y2,  y2' = c2 y0 y1.
// Both sum y_i^2 and sum y_i^2 / w_i are conserved when the coefficients
// satisfy the triad identities for weights w = (|j|^2, |k|^2, |l|^2).

#include <array>
#include <cstddef>

namespace rsplit {

using Vec3 = std::array<double, 3>;

struct TriadSystem {
  Vec3 c{};
  std::array<int, 3> weight{};  // squared mode norms

  /// Index pair (p, q) with equal weights, or {3, 3} when all differ.
  std::array<std::size_t, 2> equal_pair() const noexcept;

  Vec3 velocity(const Vec3& y) const noexcept {
    return {c[0] * y[1] * y[2], c[1] * y[0] * y[2], c[2] * y[0] * y[1]};
  }

  double unweighted(const Vec3& y) const noexcept { return y[0] * y[0] + y[1] * y[1] + y[2] * y[2]; }
  double weighted(const Vec3& y) const noexcept {
    return y[0] * y[0] / weight[0] + y[1] * y[1] / weight[1] + y[2] * y[2] / weight[2];
  }
};

struct TriadFlowStats {
  std::size_t steps = 0;
  std::size_t halvings = 0;
};

/// Advances y by duration t (any sign). Equal-weight pairs use the exact
/// rotation; otherwise an adaptive Taylor series method whose steps are
/// rejected and halved whenever either invariant drifts by more than
/// 1e-12 relative. Throws IntegrationError if the step size collapses.
void triad_system_flow(const TriadSystem& sys, Vec3& y, double t, TriadFlowStats* stats = nullptr);

}  // namespace rsplit
