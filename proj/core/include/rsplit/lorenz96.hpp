#pragma once

// Lorenz-96 on R^n with cyclic indexing. Field indices are 0-based: field k
// rotates the plane (x_k, x_{k+1}) at angular velocity x_{k-1}.

#include <cstddef>
#include <span>
#include <vector>

#include "rsplit/splitting.hpp"

namespace rsplit::lorenz96 {

struct LorenzSpec {
  std::size_t n = 6;
  bool conservative = true;
  double nu = 0.0;
  std::vector<double> forcing;

  /// n >= 4; a forced spec needs nu > 0 and a nonnegative, nonzero forcing
  /// vector of length n.
  void validate() const;
  bool operator==(const LorenzSpec&) const = default;
};

/// out = V(x); the forced variant adds -nu x + F.
void full_rhs(const LorenzSpec& spec, std::span<const double> x, std::span<double> out);
std::vector<double> full_rhs(const LorenzSpec& spec, std::span<const double> x);

/// out += V_k(x).
void rotation_field(std::span<const double> x, std::size_t k, std::span<double> out);

/// Exact rotation of (x_k, x_{k+1}) by angle x_{k-1} t.
void rotation_flow(std::span<double> x, std::size_t k, double t);

/// Exact solution of x' = -nu x + F over duration t.
void dissipative_flow(std::span<double> x, double t, double nu, std::span<const double> forcing);

/// sum_k (x_k^2 + x_{k+1}^2) x_{k-1}^2, zero exactly on the fixed points.
double fixed_point_residual(std::span<const double> x);

/// Residuals below this count as fixed points in diagnostics.
inline constexpr double kFixedPointTolerance = 1e-24;

SplittingScheme build_scheme(const LorenzSpec& spec, const TimeLawSpec& law = {},
                             OrderPolicy order = OrderPolicy::fixed);

VectorField rhs_field(const LorenzSpec& spec);

}  // namespace rsplit::lorenz96
