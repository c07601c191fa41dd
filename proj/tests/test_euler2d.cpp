#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <map>
#include <numbers>

#include "rsplit/errors.hpp"
#include "rsplit/euler2d.hpp"
#include "rsplit/integrator.hpp"
#include "support.hpp"

using namespace rsplit;
using namespace rsplit::euler2d;

namespace {

EulerSpec conservative(int N) {
  EulerSpec s;
  s.N = N;
  return s;
}

EulerSpec forced(int N, Dissipation d, Rng& rng) {
  EulerSpec s;
  s.N = N;
  s.conservative = false;
  s.nu = 0.3;
  s.dissipation = d;
  s.forcing.resize(s.dimension());
  for (auto& f : s.forcing) f = std::abs(rng.normal());
  return s;
}

// Complex-mode right-hand side over the full box with q_{-j} = conj(q_j):
// dq_j/dt = -sum_{k + l = j} C_kl q_k q_l.
std::vector<double> complex_rhs(const Lattice& lat, std::span<const double> q) {
  const int N = lat.N();
  std::map<std::pair<int, int>, std::complex<double>> z;
  for (std::size_t m = 0; m < lat.modes(); ++m) {
    const ModeIndex j = lat.mode(m);
    const std::complex<double> v(q[Lattice::a(m)], q[Lattice::b(m)]);
    z[{j.j1, j.j2}] = v;
    z[{-j.j1, -j.j2}] = std::conj(v);
  }
  std::vector<double> out(lat.dimension());
  for (std::size_t m = 0; m < lat.modes(); ++m) {
    const ModeIndex j = lat.mode(m);
    std::complex<double> acc = 0.0;
    for (int k1 = -N; k1 <= N; ++k1)
      for (int k2 = -N; k2 <= N; ++k2) {
        const ModeIndex k{k1, k2}, l = j - k;
        if (k.norm2() == 0 || l.norm2() == 0 || std::abs(l.j1) > N || std::abs(l.j2) > N) continue;
        acc -= coeff(k, l) * z[{k.j1, k.j2}] * z[{l.j1, l.j2}];
      }
    out[Lattice::a(m)] = acc.real();
    out[Lattice::b(m)] = acc.imag();
  }
  return out;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST(Lattice, Cardinality) {
  EXPECT_EQ(lattice(2).size(), 12u);
  EXPECT_EQ(lattice(3).size(), 24u);
  EXPECT_EQ(lattice(4).size(), 40u);
  EXPECT_THROW(lattice(1), ConfigurationError);
}

TEST(Lattice, MembershipAndLookup) {
  const Lattice lat(3);
  std::set<ModeIndex> seen;
  for (std::size_t m = 0; m < lat.modes(); ++m) {
    const ModeIndex j = lat.mode(m);
    EXPECT_TRUE(in_lattice(j, 3));
    EXPECT_TRUE(j.j2 > 0 || (j.j2 == 0 && j.j1 > 0));
    EXPECT_EQ(lat.index(j), m);
    seen.insert(j);
  }
  EXPECT_EQ(seen.size(), lat.modes());
  EXPECT_FALSE(lat.find({-1, 0}));
  EXPECT_FALSE(lat.find({0, 0}));
  EXPECT_FALSE(lat.find({4, 1}));
  EXPECT_EQ(lat.mode(0), (ModeIndex{1, 0}));
}

TEST(Coefficients, Examples) {
  EXPECT_EQ(coeff({1, 0}, {0, 1}), 0.0);
  EXPECT_NEAR(coeff({1, 0}, {1, 1}), 1.0 / (8.0 * std::numbers::pi), 1e-17);
  EXPECT_THROW(coeff({0, 0}, {1, 1}), UsageError);
}

TEST(Coefficients, Antisymmetries) {
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    ModeIndex k{static_cast<int>(rng.below(7)) - 3, static_cast<int>(rng.below(7)) - 3};
    ModeIndex l{static_cast<int>(rng.below(7)) - 3, static_cast<int>(rng.below(7)) - 3};
    if (k.norm2() == 0 || l.norm2() == 0) continue;
    const ModeIndex mk{-k.j1, -k.j2}, ml{-l.j1, -l.j2};
    EXPECT_DOUBLE_EQ(coeff(k, l), coeff(mk, ml));
    EXPECT_DOUBLE_EQ(coeff(k, l), -coeff(mk, l));
    EXPECT_DOUBLE_EQ(coeff(k, l), -coeff(k, ml));
    EXPECT_DOUBLE_EQ(coeff(k, l), coeff(l, k));
  }
}

TEST(Triads, IdentitiesAndShape) {
  for (int N : {2, 3, 4}) {
    const Lattice lat(N);
    const auto triads = enumerate_triads(lat);
    EXPECT_FALSE(triads.empty());
    std::set<std::pair<ModeIndex, ModeIndex>> pairs;
    for (const auto& t : triads) {
      EXPECT_EQ(t.j + t.k, t.l);
      EXPECT_TRUE(t.c_jk != 0.0 || t.c_jl != 0.0 || t.c_kl != 0.0);
      EXPECT_LT(std::abs(t.c_kl + t.c_jl - t.c_jk), 1e-14);
      EXPECT_LT(std::abs(t.c_kl / t.j.norm2() + t.c_jl / t.k.norm2() - t.c_jk / t.l.norm2()), 1e-14);
      EXPECT_TRUE(pairs.insert({std::min(t.j, t.k), std::max(t.j, t.k)}).second);
    }
  }
}

TEST(EulerRhs, ZeroAndSingleMode) {
  const Lattice lat(2);
  const auto spec = conservative(2);
  std::vector<double> q(lat.dimension(), 0.0);
  EXPECT_EQ(full_rhs(spec, q), q);
  q[Lattice::a(lat.index({1, 1}))] = 1.3;
  q[Lattice::b(lat.index({1, 1}))] = -0.4;
  EXPECT_EQ(testing_support::max_abs(full_rhs(spec, q)), 0.0);
}

TEST(EulerRhs, ConservesEnergyAndEnstrophy) {
  Rng rng(2);
  for (int N : {2, 3}) {
    const Lattice lat(N);
    const auto spec = conservative(N);
    for (int i = 0; i < 100; ++i) {
      const auto q = testing_support::random_state(lat.dimension(), rng);
      const auto v = full_rhs(spec, q);
      double dE = 0.0, dZ = 0.0, scale = 0.0;
      for (std::size_t m = 0; m < lat.modes(); ++m) {
        for (std::size_t c : {Lattice::a(m), Lattice::b(m)}) {
          dE += q[c] * v[c] / lat.mode(m).norm2();
          dZ += q[c] * v[c];
          scale += std::abs(q[c] * v[c]);
        }
      }
      EXPECT_LT(std::abs(dE), 1e-12 * scale);
      EXPECT_LT(std::abs(dZ), 1e-12 * scale);
    }
  }
}

TEST(EulerRhs, IsHalfTheComplexModeForm) {
  Rng rng(3);
  for (int N : {2, 3}) {
    const Lattice lat(N);
    const auto spec = conservative(N);
    for (int i = 0; i < 20; ++i) {
      const auto q = testing_support::random_state(lat.dimension(), rng);
      const auto v = full_rhs(spec, q);
      auto w = complex_rhs(lat, q);
      for (auto& x : w) x *= 0.5;
      EXPECT_LT(testing_support::max_abs_diff(v, w), 1e-13 * testing_support::max_abs(w));
    }
  }
}

TEST(EulerRhs, FieldSumMatchesRhs) {
  Rng rng(4);
  for (int N : {2, 3}) {
    const Lattice lat(N);
    for (bool cons : {true, false}) {
      const EulerSpec spec = cons ? conservative(N) : forced(N, Dissipation::laplacian, rng);
      const auto scheme = build_scheme(spec);
      for (int i = 0; i < 100; ++i) {
        const auto q = testing_support::random_state(lat.dimension(), rng);
        const auto a = scheme.field_sum(q);
        const auto b = full_rhs(spec, q);
        EXPECT_LE(testing_support::max_abs_diff(a, b), 1e-12 * testing_support::max_abs(b));
      }
    }
  }
}

TEST(EulerScheme, Shapes) {
  const Lattice lat(2);
  const auto triads = enumerate_triads(lat);
  EXPECT_EQ(build_scheme(conservative(2)).size(), 4 * triads.size());
  Rng rng(1);
  const auto f = build_scheme(forced(2, Dissipation::ekman, rng));
  EXPECT_EQ(f.size(), 4 * triads.size() + 1);
  EXPECT_TRUE(f.fields.front().dissipative);
}

TEST(Functionals, Examples) {
  const Lattice lat(2);
  std::vector<double> q(lat.dimension(), 0.0);
  EXPECT_EQ(energy(lat, q), 0.0);
  EXPECT_EQ(enstrophy(q), 0.0);
  q[Lattice::a(lat.index({1, 0}))] = 3.0;
  EXPECT_DOUBLE_EQ(energy(lat, q), 9.0);
  EXPECT_DOUBLE_EQ(enstrophy(q), 9.0);
  std::fill(q.begin(), q.end(), 0.0);
  q[Lattice::a(lat.index({2, 0}))] = 3.0;
  EXPECT_DOUBLE_EQ(energy(lat, q), 9.0 / 4.0);
  EXPECT_DOUBLE_EQ(enstrophy(q), 9.0);
}

TEST(TriadFlow, ZeroCoordinatesAreFixed) {
  const Lattice lat(2);
  const auto triads = enumerate_triads(lat);
  Rng rng(5);
  auto q = testing_support::random_state(lat.dimension(), rng);
  for (const auto& t : triads) {
    for (Variant v : kVariants) {
      auto p = q;
      for (std::size_t c : slots(t, v).coord) p[c] = 0.0;
      const auto before = p;
      triad_flow(p, t, v, 3.3);
      EXPECT_EQ(p, before);
    }
  }
}

TEST(TriadFlow, OnlyDesignatedCoordinatesMove) {
  const Lattice lat(2);
  const auto triads = enumerate_triads(lat);
  Rng rng(6);
  const auto q = testing_support::random_state(lat.dimension(), rng);
  for (const auto& t : triads) {
    for (Variant v : kVariants) {
      auto p = q;
      triad_flow(p, t, v, 1.1);
      const auto s = slots(t, v);
      for (std::size_t i = 0; i < q.size(); ++i) {
        if (i == s.coord[0] || i == s.coord[1] || i == s.coord[2]) continue;
        EXPECT_EQ(p[i], q[i]);
      }
    }
  }
}

TEST(TriadFlow, MatchesReferenceIntegrator) {
  Rng rng(7);
  for (int N : {2, 3}) {
    const Lattice lat(N);
    const auto triads = enumerate_triads(lat);
    for (const auto& t : triads) {
      for (Variant v : kVariants) {
        const auto q = testing_support::random_state(lat.dimension(), rng);
        const VectorField f = [&](std::span<const double> y, std::span<double> out) {
          std::fill(out.begin(), out.end(), 0.0);
          triad_field(y, t, v, out);
        };
        const double dur = 1.0 + 4.0 * rng.uniform();
        const auto ref = integrate(f, q, dur, IntegratorConfig{1e-12, 1e-14, 10'000'000});
        auto p = q;
        triad_flow(p, t, v, dur);
        EXPECT_LT(testing_support::max_abs_diff(p, ref), 1e-9) << to_string(v) << to_string(t.j) << to_string(t.k);
        EXPECT_LT(rel(energy(lat, p), energy(lat, q)), 1e-12);
        EXPECT_LT(rel(enstrophy(p), enstrophy(q)), 1e-12);
      }
    }
  }
}

TEST(TriadFlow, NegativeTimeInverts) {
  const Lattice lat(3);
  const auto triads = enumerate_triads(lat);
  Rng rng(8);
  for (const auto& t : triads) {
    const auto q = testing_support::random_state(lat.dimension(), rng);
    auto p = q;
    triad_flow(p, t, Variant::bab, 2.5);
    triad_flow(p, t, Variant::bab, -2.5);
    EXPECT_LT(testing_support::max_abs_diff(p, q), 1e-12);
  }
}

TEST(TriadFlow, EqualNormRotationClosedForm) {
  const Lattice lat(2);
  // |(1,0)| = |(0,1)|, l = (1,1).
  const Triad t = make_triad(lat, {1, 0}, {0, 1});
  EXPECT_EQ(t.c_jk, 0.0);
  Rng rng(9);
  for (Variant v : kVariants) {
    const auto q = testing_support::random_state(lat.dimension(), rng);
    const auto s = slots(t, v);
    const double w = s.system.c[0] * q[s.coord[2]];
    const double dur = 1.7;
    auto p = q;
    triad_flow(p, t, v, dur);
    EXPECT_EQ(p[s.coord[2]], q[s.coord[2]]);
    const double x = q[s.coord[0]], y = q[s.coord[1]];
    EXPECT_NEAR(p[s.coord[0]], x * std::cos(w * dur) + y * std::sin(w * dur), 1e-12);
    EXPECT_NEAR(p[s.coord[1]], -x * std::sin(w * dur) + y * std::cos(w * dur), 1e-12);
    // Rate agrees with C_jl q_l up to the variant's sign convention.
    EXPECT_NEAR(std::abs(w), std::abs(t.c_jl * q[s.coord[2]]), 1e-15);
  }
}

TEST(EulerChain, ConservativeChainKeepsInvariants) {
  const Lattice lat(2);
  const auto scheme = build_scheme(conservative(2), TimeLawSpec{TimeLawKind::exponential, 0.1, 1.0});
  Rng rng(10);
  const StateVector q0{ModelKind::euler2d, testing_support::random_state(lat.dimension(), rng)};
  const double E0 = energy(lat, q0.coords), Z0 = enstrophy(q0.coords);
  double worst = 0.0;
  run_chain(scheme, q0, ChainRunConfig{10000, 3, 1}, [&](std::size_t, std::span<const double> q, double) {
    worst = std::max({worst, rel(energy(lat, q), E0), rel(enstrophy(q), Z0)});
  });
  EXPECT_LT(worst, 1e-8);
}

TEST(EulerChain, PurelyRealStatesStayReal) {
  const Lattice lat(2);
  const auto scheme = build_scheme(conservative(2), TimeLawSpec{TimeLawKind::exponential, 0.2, 1.0});
  Rng rng(11);
  auto q = testing_support::random_state(lat.dimension(), rng);
  for (std::size_t m = 0; m < lat.modes(); ++m) q[Lattice::b(m)] = 0.0;
  bool real = true;
  run_chain(scheme, StateVector{ModelKind::euler2d, q}, ChainRunConfig{1000, 5, 1},
            [&](std::size_t, std::span<const double> y, double) {
              for (std::size_t m = 0; m < lat.modes(); ++m) real = real && y[Lattice::b(m)] == 0.0;
            });
  EXPECT_TRUE(real);
}

TEST(Dissipation, FlowMatchesIntegratorAndFixesEquilibrium) {
  Rng rng(12);
  const Lattice lat(2);
  for (Dissipation d : {Dissipation::laplacian, Dissipation::ekman}) {
    const auto spec = forced(2, d, rng);
    std::vector<double> eq(lat.dimension());
    for (std::size_t m = 0; m < lat.modes(); ++m)
      for (std::size_t c : {Lattice::a(m), Lattice::b(m)})
        eq[c] = spec.forcing[c] / (spec.nu * damping_weight(spec, lat.mode(m)));
    auto p = eq;
    dissipative_flow(p, 5.0, spec, lat);
    EXPECT_LT(testing_support::max_abs_diff(p, eq), 1e-13 * testing_support::max_abs(eq));

    auto q = testing_support::random_state(lat.dimension(), rng);
    const VectorField f = [&](std::span<const double> y, std::span<double> out) {
      for (std::size_t m = 0; m < lat.modes(); ++m)
        for (std::size_t c : {Lattice::a(m), Lattice::b(m)})
          out[c] = -spec.nu * damping_weight(spec, lat.mode(m)) * y[c] + spec.forcing[c];
    };
    const auto ref = integrate(f, q, 0.9);
    auto same = q;
    dissipative_flow(same, 0.0, spec, lat);
    EXPECT_EQ(same, q);
    dissipative_flow(q, 0.9, spec, lat);
    EXPECT_LT(testing_support::max_abs_diff(q, ref), 1e-10);
  }
}

TEST(ActiveSet, SingleModeIsDegenerate) {
  const Lattice lat(2);
  std::vector<double> q(lat.dimension(), 0.0);
  q[Lattice::a(lat.index({1, 0}))] = 1.0;
  const auto A = active_set(lat, q);
  ASSERT_EQ(A.size(), 1u);
  EXPECT_EQ(oplus_closure(lat, A), A);
  EXPECT_FALSE(is_nondegenerate(lat, q));
}

TEST(ActiveSet, PurelyRealIsDegenerate) {
  const Lattice lat(3);
  Rng rng(13);
  for (int i = 0; i < 20; ++i) {
    auto q = testing_support::random_state(lat.dimension(), rng);
    for (std::size_t m = 0; m < lat.modes(); ++m) q[Lattice::b(m)] = 0.0;
    const auto closure = oplus_closure(lat, active_set(lat, q));
    for (const auto& e : closure) EXPECT_TRUE(e.plus);
    EXPECT_FALSE(is_nondegenerate(lat, q));
  }
}

TEST(ActiveSet, GenericIsNondegenerate) {
  Rng rng(14);
  for (int N : {2, 3}) {
    const Lattice lat(N);
    for (int i = 0; i < 100; ++i) {
      const auto q = testing_support::random_state(lat.dimension(), rng);
      ASSERT_TRUE(is_generic(q));
      EXPECT_TRUE(is_nondegenerate(lat, q));
    }
  }
}

TEST(ActiveSet, ClosureIsMonotoneAndIdempotent) {
  const Lattice lat(3);
  Rng rng(15);
  for (int i = 0; i < 30; ++i) {
    std::vector<double> q(lat.dimension(), 0.0);
    for (int k = 0; k < 3; ++k) q[rng.below(q.size())] = rng.normal();
    const auto A = active_set(lat, q);
    const auto C = oplus_closure(lat, A);
    for (const auto& e : A) EXPECT_TRUE(C.contains(e));
    EXPECT_EQ(oplus_closure(lat, C), C);
  }
}

TEST(ActiveSet, SparseNondegenerateExample) {
  const Lattice lat(2);
  std::vector<double> q(lat.dimension(), 0.0);
  // (1,0,+) and (1,1,-) interact (C != 0) to produce (0,1,-) and (2,1,-).
  q[Lattice::a(lat.index({1, 0}))] = 1.0;
  q[Lattice::a(lat.index({0, 1}))] = 1.0;
  q[Lattice::b(lat.index({1, 1}))] = 1.0;
  EXPECT_TRUE(is_nondegenerate(lat, q));
  EXPECT_FALSE(is_generic(q));
  const auto C = oplus_closure(lat, active_set(lat, q));
  EXPECT_TRUE(C.contains(ExtIndex{{2, 1}, false}));
}

TEST(ActiveSet, ToleranceIsScaleAware) {
  const Lattice lat(2);
  std::vector<double> q(lat.dimension(), 0.0);
  q[0] = 1e6;
  q[1] = 1e-7;  // below 1e-12 * 1e6
  q[2] = 1e-5;
  const auto A = active_set(lat, q);
  EXPECT_EQ(A.size(), 2u);
  EXPECT_FALSE(A.contains(ExtIndex{{1, 0}, false}));
}

TEST(EulerSpecValidation, Rejects) {
  EulerSpec s;
  s.N = 1;
  EXPECT_THROW(s.validate(), ConfigurationError);
  s.N = 2;
  s.conservative = false;
  s.nu = 0.1;
  s.forcing.assign(s.dimension(), 0.0);
  EXPECT_THROW(s.validate(), ConfigurationError);
  s.forcing[3] = 1.0;
  EXPECT_NO_THROW(s.validate());
  s.forcing.pop_back();
  EXPECT_THROW(s.validate(), ConfigurationError);
}
