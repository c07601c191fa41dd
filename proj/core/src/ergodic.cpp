#include <cmath>
#include <limits>
#include <string>

#include "rsplit/diagnostics.hpp"
#include "rsplit/errors.hpp"
#include "rsplit/rng.hpp"

namespace rsplit {

namespace {

MomentComparison compare(std::size_t coordinate, int order, MeanEstimate est, MeanEstimate ref, double threshold) {
  MomentComparison c;
  c.coordinate = coordinate;
  c.order = order;
  c.estimate = est;
  c.reference = ref;
  const double diff = std::abs(est.mean - ref.mean);
  const double se = std::hypot(est.standard_error, ref.standard_error);
  c.z = se > 0.0 ? diff / se : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
  c.agrees = c.z <= threshold;
  return c;
}

/// Batch-means estimates of E x_i^p over the post-burn-in part of one chain,
/// for each requested power p.
std::vector<std::vector<MeanEstimate>> chain_moments(const SplittingScheme& scheme, const StateVector& x0,
                                                     const ErgodicConfig& cfg, std::uint64_t seed,
                                                     const std::vector<int>& powers) {
  const std::size_t burn = cfg.resolved_burn_in();
  const std::size_t kept = cfg.cycles - burn;
  const std::size_t d = x0.size();
  std::vector<BatchAccumulator> acc;
  acc.reserve(powers.size() * d);
  for (std::size_t k = 0; k < powers.size() * d; ++k) acc.emplace_back(kept, cfg.batches);

  ChainRunConfig run;
  run.cycles = cfg.cycles;
  run.seed = seed;
  run_chain(scheme, x0, run, [&](std::size_t cycle, std::span<const double> x, double) {
    if (cycle <= burn) return;
    for (std::size_t p = 0; p < powers.size(); ++p) {
      for (std::size_t i = 0; i < d; ++i) acc[p * d + i].add(std::pow(x[i], powers[p]));
    }
  });

  std::vector<std::vector<MeanEstimate>> out(powers.size(), std::vector<MeanEstimate>(d));
  for (std::size_t p = 0; p < powers.size(); ++p)
    for (std::size_t i = 0; i < d; ++i) out[p][i] = acc[p * d + i].result();
  return out;
}

void finish(ErgodicReport& r) {
  r.pass = !r.moments.empty();
  for (const auto& m : r.moments) r.pass = r.pass && m.agrees;
}

}  // namespace

std::size_t ErgodicConfig::resolved_burn_in() const { return burn_in ? *burn_in : cycles / 5; }

void ErgodicConfig::validate() const {
  const std::size_t burn = resolved_burn_in();
  if (batches < 2) throw UsageError("ergodic: need at least 2 batches");
  if (burn >= cycles || cycles - burn < batches) {
    throw UsageError("ergodic: " + std::to_string(cycles) + " cycles leave too few samples after burn-in " +
                     std::to_string(burn));
  }
  if (!(threshold > 0.0)) throw UsageError("ergodic: threshold must be positive");
  if (oracle_samples < 2) throw UsageError("ergodic: need at least 2 oracle samples");
}

ErgodicReport ergodic_moment_test(const lorenz96::LorenzSpec& spec, const StateVector& x0, const TimeLawSpec& law,
                                  const ErgodicConfig& cfg) {
  spec.validate();
  cfg.validate();
  if (!spec.conservative) throw UsageError("ergodic_moment_test: the sphere targets hold for conservative Lorenz-96");
  if (x0.size() != spec.n) throw UsageError("ergodic_moment_test: x0 has the wrong dimension");
  if (lorenz96::fixed_point_residual(x0.coords) < lorenz96::kFixedPointTolerance) {
    throw PreconditionError("ergodic_moment_test: x0 is a fixed point, the chain cannot mix");
  }
  const double R = x0.norm();
  const std::size_t n = spec.n;

  ErgodicReport r;
  r.kind = "lorenz-sphere";
  r.cycles = cfg.cycles;
  r.burn_in = cfg.resolved_burn_in();
  r.batches = cfg.batches;
  r.threshold = cfg.threshold;

  const auto moments = chain_moments(lorenz96::build_scheme(spec, law), x0, cfg, derive_seed(cfg.seed, 0), {2, 4});
  const SphereMoments oracle = sphere_moments_by_sampling(n, R, cfg.oracle_samples, derive_seed(cfg.seed, 1));
  const MeanEstimate second{R * R / static_cast<double>(n), 0.0};
  for (std::size_t i = 0; i < n; ++i) r.moments.push_back(compare(i, 2, moments[0][i], second, cfg.threshold));
  for (std::size_t i = 0; i < n; ++i) r.moments.push_back(compare(i, 4, moments[1][i], oracle.fourth, cfg.threshold));
  finish(r);
  return r;
}

ErgodicReport two_run_agreement(const euler2d::EulerSpec& spec, const StateVector& x0, const StateVector& x1,
                                const TimeLawSpec& law, const ErgodicConfig& cfg) {
  spec.validate();
  cfg.validate();
  if (!spec.conservative) throw UsageError("two_run_agreement: needs the conservative model");
  const euler2d::Lattice lat(spec.N);
  if (x0.size() != lat.dimension() || x1.size() != lat.dimension()) {
    throw UsageError("two_run_agreement: start has the wrong dimension");
  }
  if (!euler2d::is_nondegenerate(lat, x0.coords) || !euler2d::is_nondegenerate(lat, x1.coords)) {
    throw PreconditionError("two_run_agreement: both starts must be nondegenerate");
  }
  const double e0 = euler2d::energy(lat, x0.coords), e1 = euler2d::energy(lat, x1.coords);
  const double z0 = euler2d::enstrophy(x0.coords), z1 = euler2d::enstrophy(x1.coords);
  if (std::abs(e0 - e1) > 1e-9 * e0 || std::abs(z0 - z1) > 1e-9 * z0) {
    throw PreconditionError("two_run_agreement: starts lie on different (E, calE) levels");
  }

  ErgodicReport r;
  r.kind = "euler-two-run";
  r.cycles = cfg.cycles;
  r.burn_in = cfg.resolved_burn_in();
  r.batches = cfg.batches;
  r.threshold = cfg.threshold;

  const SplittingScheme scheme = euler2d::build_scheme(spec, law);
  const auto a = chain_moments(scheme, x0, cfg, derive_seed(cfg.seed, 0), {2});
  const auto b = chain_moments(scheme, x1, cfg, derive_seed(cfg.seed, 1), {2});
  for (std::size_t i = 0; i < lat.dimension(); ++i) r.moments.push_back(compare(i, 2, a[0][i], b[0][i], cfg.threshold));
  finish(r);
  return r;
}

StateVector match_invariants(const euler2d::Lattice& lat, const StateVector& target, const StateVector& shape) {
  if (target.size() != lat.dimension() || shape.size() != lat.dimension()) {
    throw UsageError("match_invariants: state has the wrong dimension");
  }
  const double E = euler2d::energy(lat, target.coords);
  const double Z = euler2d::enstrophy(target.coords);
  // Unit modes contribute equally to both invariants; the rest carry the
  // weight 1/|j|^2 in the energy only.
  double low = 0.0, high_e = 0.0, high_z = 0.0;
  for (std::size_t m = 0; m < lat.modes(); ++m) {
    const double w = lat.mode(m).norm2();
    const double s = shape.coords[euler2d::Lattice::a(m)] * shape.coords[euler2d::Lattice::a(m)] +
                     shape.coords[euler2d::Lattice::b(m)] * shape.coords[euler2d::Lattice::b(m)];
    if (w == 1.0) {
      low += s;
    } else {
      high_e += s / w;
      high_z += s;
    }
  }
  if (!(low > 0.0) || !(high_z - high_e > 0.0)) {
    throw PreconditionError("match_invariants: shape needs energy in both unit and higher modes");
  }
  const double sh2 = (Z - E) / (high_z - high_e);
  const double sl2 = (E - sh2 * high_e) / low;
  if (!(sh2 > 0.0) || !(sl2 > 0.0)) throw PreconditionError("match_invariants: no positive rescaling exists");
  const double sl = std::sqrt(sl2), sh = std::sqrt(sh2);
  StateVector out = shape;
  for (std::size_t m = 0; m < lat.modes(); ++m) {
    const double s = lat.mode(m).norm2() == 1 ? sl : sh;
    out.coords[euler2d::Lattice::a(m)] *= s;
    out.coords[euler2d::Lattice::b(m)] *= s;
  }
  return out;
}

}  // namespace rsplit
