#pragma once

// Experiment procedures: convergence studies, ergodic moments, spanning
// ranks, dissipative brackets and Lyapunov bounds.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rsplit/integrator.hpp"
#include "rsplit/model.hpp"
#include "rsplit/statistics.hpp"

namespace rsplit {

struct NamedObservable {
  std::string id;
  Observable fn;
};

/// Parses "coord:i", "square:i", "product:i:j" or "cos:i" (0-based
/// coordinates below `dimension`). Throws UsageError otherwise.
NamedObservable parse_observable(const std::string& id, std::size_t dimension);

// ---- convergence -----------------------------------------------------------

struct ConvergencePoint {
  double param = 0.0;  // h for weak studies, m for pathwise studies
  std::string observable;
  double estimate = 0.0;
  double reference = 0.0;
  double error = 0.0;
  double standard_error = 0.0;
  bool included = true;  // false when Monte Carlo noise dominates
};

struct ObservableFit {
  std::string observable;
  std::optional<double> slope;
  std::size_t points_used = 0;
  bool monotone = true;  // error decreases with h across the included points
};

struct ConvergenceReport {
  std::string kind;
  std::vector<ConvergencePoint> points;
  std::vector<ObservableFit> fits;
  bool inconclusive = false;        // some point has SE above half its error
  bool reference_dominant = true;   // oracle error below 1% of every included error
  double reference_error = 0.0;
  // pathwise only
  bool strictly_decreasing = true;
  double reduction = 0.0;  // error(first m) / error(last m)
  std::vector<std::string> notes;
};

/// Builds the scheme for one mean duration h.
using SchemeFactory = std::function<SplittingScheme(double h)>;

struct WeakStudyConfig {
  double t = 1.0;
  std::vector<double> h_grid;
  std::size_t samples = 10'000;
  std::uint64_t seed = 0;
  IntegratorConfig integrator;
};

/// error(h) = |E f(Phi^m(x0)) - f(Psi_t(x0))| with m = t / h. Grid point i
/// draws its samples from derive_seed(seed, i). Points with SE > 25% of the
/// error are left out of the log-log fit. A single-field scheme is not
/// exact here: its total duration is random, which costs O(h) in the mean.
ConvergenceReport weak_error_study(const SchemeFactory& factory, const VectorField& rhs,
                                   std::span<const NamedObservable> observables, const StateVector& x0,
                                   const WeakStudyConfig& cfg);

/// The time law's mean is replaced by each h of the grid.
ConvergenceReport weak_error_study(const ModelSpec& spec, const TimeLawSpec& law, OrderPolicy order,
                                   std::span<const NamedObservable> observables, const StateVector& x0,
                                   const WeakStudyConfig& cfg);

struct PathwiseStudyConfig {
  double t = 1.0;
  std::vector<std::size_t> m_list{4, 8, 16, 32};
  std::uint64_t seed = 0;
  IntegratorConfig integrator;
};

/// One Exp(1) stream of length max(m)^2 * fields, shared by every m.
std::vector<double> pathwise_time_stream(std::size_t length, std::uint64_t seed);

/// error(m) = |pathwise_rescaled_run(m) - Psi_t(x0)|.
ConvergenceReport pathwise_study(const SplittingScheme& scheme, const VectorField& rhs, const StateVector& x0,
                                 const PathwiseStudyConfig& cfg, std::span<const double> time_stream);
ConvergenceReport pathwise_study(const SplittingScheme& scheme, const VectorField& rhs, const StateVector& x0,
                                 const PathwiseStudyConfig& cfg);
ConvergenceReport pathwise_study(const ModelSpec& spec, const StateVector& x0, const PathwiseStudyConfig& cfg);

// ---- ergodic averages -----------------------------------------------------

struct MomentComparison {
  std::size_t coordinate = 0;
  int order = 2;
  MeanEstimate estimate;
  MeanEstimate reference;
  double z = 0.0;  // |difference| / combined SE
  bool agrees = false;
};

struct ErgodicReport {
  std::string kind;
  std::size_t cycles = 0;
  std::size_t burn_in = 0;
  std::size_t batches = 0;
  double threshold = 4.0;
  std::vector<MomentComparison> moments;
  bool pass = false;
  std::vector<std::string> notes;
};

struct ErgodicConfig {
  std::size_t cycles = 1'000'000;
  std::optional<std::size_t> burn_in;  // defaults to 20% of cycles
  std::size_t batches = 50;
  std::uint64_t seed = 0;
  double threshold = 4.0;
  std::size_t oracle_samples = 200'000;

  std::size_t resolved_burn_in() const;
  void validate() const;
};

/// Conservative Lorenz-96: per-coordinate second and fourth moments against
/// the uniform measure on the sphere of radius |x0|. Throws
/// PreconditionError when x0 is a fixed point.
ErgodicReport ergodic_moment_test(const lorenz96::LorenzSpec& spec, const StateVector& x0, const TimeLawSpec& law,
                                  const ErgodicConfig& cfg);

/// Conservative Euler: second moments of every coordinate from two chains
/// started at x0 and x1 (seeds derived from cfg.seed). Throws
/// PreconditionError when either start is degenerate or their (E, calE)
/// differ.
ErgodicReport two_run_agreement(const euler2d::EulerSpec& spec, const StateVector& x0, const StateVector& x1,
                                const TimeLawSpec& law, const ErgodicConfig& cfg);

/// Rescales the |j| = 1 modes and the remaining modes of `shape` separately
/// so that its energy and enstrophy match those of `target`. Throws
/// PreconditionError when no positive scaling exists.
StateVector match_invariants(const euler2d::Lattice& lat, const StateVector& target, const StateVector& shape);

// ---- spanning ranks and brackets ------------------------------------------

struct RankReport {
  std::string id;
  std::vector<double> point;
  std::size_t rows = 0, cols = 0;
  std::vector<double> singular_values;
  std::size_t rank = 0;
  std::optional<std::size_t> expected_rank;
  double gap = 0.0;  // sigma_r / max(sigma_{r+1}, threshold)
  std::optional<double> determinant;
  std::optional<double> determinant_formula;
};

inline constexpr double kRankThreshold = 1e-10;

/// Singular values, rank at kRankThreshold * sigma_max and gap of a dense
/// row-major matrix.
RankReport rank_report(std::string id, std::size_t rows, std::size_t cols, std::span<const double> row_major);

/// Lorenz: [V_1..V_n] (expected n - 1) and, when forced, [V_0, V_1..V_{n-1}]
/// with its determinant. Euler: M, M', M'' for every triad whose three
/// coefficients are nonzero, and when forced the 6x6 matrix with [V_0, aaa].
std::vector<RankReport> rank_tests(const ModelSpec& spec, std::span<const double> point);

std::vector<RankReport> euler_triad_rank_tests(const euler2d::EulerSpec& spec, const euler2d::Triad& triad,
                                               std::span<const double> point);

/// x_1 x_{n-1} x_n prod_{k=2}^{n-2} x_k^2 (nu |x|^2 - <F, x>) in 1-based
/// indices, times (-1)^n so that it equals det [V_0, V_1..V_{n-1}].
double forced_lorenz_determinant_formula(const lorenz96::LorenzSpec& spec, std::span<const double> x);

/// Closed-form [V_0, W](q) for W the (triad, variant) field.
std::vector<double> dissipative_bracket(const euler2d::EulerSpec& spec, const euler2d::Lattice& lat,
                                        const euler2d::Triad& triad, euler2d::Variant v, std::span<const double> q);

/// DW V_0 - DV_0 W assembled from explicit Jacobians.
std::vector<double> commutator_bracket(const euler2d::EulerSpec& spec, const euler2d::Lattice& lat,
                                       const euler2d::Triad& triad, euler2d::Variant v, std::span<const double> q);

/// Largest componentwise difference between the two bracket computations.
double bracket_check(const euler2d::EulerSpec& spec, const euler2d::Triad& triad, euler2d::Variant v,
                     std::span<const double> q);

// ---- Lyapunov bounds --------------------------------------------------------

/// Lower bound alpha of the dissipation operator; 1 for every supported model.
double dissipation_floor(const ModelSpec& spec);

struct DriftPoint {
  double radius = 0.0;
  MeanEstimate norm_after;  // E |Phi(x)| over one cycle
  double bound = 0.0;       // gamma radius + K
  bool holds = false;
};

struct LyapunovReport {
  std::size_t cycles_checked = 0;
  bool pathwise_holds = true;
  double min_slack = 0.0;  // min over cycles of (bound - |x_m|^2) / bound
  std::size_t worst_cycle = 0;
  double gamma = 0.0;
  double K = 0.0;
  std::vector<DriftPoint> drift;
  bool drift_holds = true;
};

/// |x_m|^2 <= |x_0|^2 e^{-nu alpha S} + (|F| / (nu alpha))^2 (1 - e^{-nu alpha S})
/// at every record, S being the recorded leading (dissipative) time.
LyapunovReport lyapunov_pathwise(const ModelSpec& spec, const Trajectory& trajectory);

struct DriftConfig {
  std::vector<double> radii{1.0, 10.0, 100.0};
  std::size_t samples = 10'000;
  std::uint64_t seed = 0;
  double sigmas = 3.0;
};

/// E |Phi(x)| <= gamma |x| + K at a random direction per radius, with
/// gamma = (1 + nu alpha h / 2)^{-1} and K = |F| / (nu alpha).
std::vector<DriftPoint> lyapunov_drift(const ModelSpec& spec, const TimeLawSpec& law, const DriftConfig& cfg);

struct LyapunovConfig {
  std::size_t cycles = 10'000;
  std::uint64_t seed = 0;
  DriftConfig drift;
};

LyapunovReport lyapunov_check(const ModelSpec& spec, const TimeLawSpec& law, const StateVector& x0,
                              const LyapunovConfig& cfg);

// ---- invariants ---------------------------------------------------------------

struct ConservationDrift {
  double norm = 0.0;       // max relative change of |x|
  double energy = 0.0;     // Euler only
  double enstrophy = 0.0;  // Euler only
};

ConservationDrift conservation_drift(const ModelSpec& spec, const Trajectory& trajectory);

}  // namespace rsplit
