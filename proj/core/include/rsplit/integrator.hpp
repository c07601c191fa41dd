#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rsplit/splitting.hpp"

namespace rsplit {

/// Tolerances for the reference integrator. Defaults are tight enough for
/// the integrator to dominate every splitting error the diagnostics measure.
struct IntegratorConfig {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  std::size_t max_steps = 20'000'000;

  /// Throws ConfigurationError unless both tolerances lie in (0, 1e-3] and
  /// max_steps >= 1.
  void validate() const;
  bool operator==(const IntegratorConfig&) const = default;
};

struct IntegrationStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
};

/// Adaptive Dormand-Prince 5(4) solution of x' = rhs(x) over [0, t].
/// Negative t integrates backwards. Throws IntegrationError when the step
/// budget runs out or the state becomes non-finite.
std::vector<double> integrate(const VectorField& rhs, std::span<const double> x0, double t,
                              const IntegratorConfig& cfg = {}, IntegrationStats* stats = nullptr);

StateVector integrate(const VectorField& rhs, const StateVector& x0, double t, const IntegratorConfig& cfg = {});

}  // namespace rsplit
