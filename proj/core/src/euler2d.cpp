#include "rsplit/euler2d.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "rsplit/errors.hpp"

namespace rsplit::euler2d {

std::string to_string(ModeIndex j) { return "(" + std::to_string(j.j1) + "," + std::to_string(j.j2) + ")"; }

bool in_lattice(ModeIndex j, int N) noexcept {
  if (std::abs(j.j1) > N || std::abs(j.j2) > N) return false;
  return j.j2 > 0 || (j.j2 == 0 && j.j1 > 0);
}

std::vector<ModeIndex> lattice(int N) {
  if (N < 2) throw ConfigurationError("euler2d: N must be at least 2, got " + std::to_string(N));
  std::vector<ModeIndex> out;
  out.reserve(static_cast<std::size_t>(2 * N * (N + 1)));
  for (int j1 = 1; j1 <= N; ++j1) out.push_back({j1, 0});
  for (int j2 = 1; j2 <= N; ++j2) {
    for (int j1 = -N; j1 <= N; ++j1) out.push_back({j1, j2});
  }
  return out;
}

Lattice::Lattice(int N) : N_(N), modes_(lattice(N)) {
  const int side = 2 * N + 1;
  lookup_.assign(static_cast<std::size_t>(side * side), -1);
  for (std::size_t m = 0; m < modes_.size(); ++m) {
    lookup_[static_cast<std::size_t>((modes_[m].j1 + N) * side + (modes_[m].j2 + N))] = static_cast<int>(m);
  }
}

std::optional<std::size_t> Lattice::find(ModeIndex j) const noexcept {
  if (std::abs(j.j1) > N_ || std::abs(j.j2) > N_) return std::nullopt;
  const int side = 2 * N_ + 1;
  const int m = lookup_[static_cast<std::size_t>((j.j1 + N_) * side + (j.j2 + N_))];
  if (m < 0) return std::nullopt;
  return static_cast<std::size_t>(m);
}

std::size_t Lattice::index(ModeIndex j) const {
  if (auto m = find(j)) return *m;
  throw UsageError("euler2d: mode " + to_string(j) + " is not in Z^2_" + std::to_string(N_));
}

double coeff(ModeIndex k, ModeIndex l) {
  if (k.norm2() == 0 || l.norm2() == 0) throw UsageError("euler2d::coeff: zero wave vector");
  const int cross = k.j1 * l.j2 - k.j2 * l.j1;
  if (cross == 0 || k.norm2() == l.norm2()) return 0.0;
  return cross / (4.0 * std::numbers::pi) * (1.0 / k.norm2() - 1.0 / l.norm2());
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::abb: return "abb";
    case Variant::bab: return "bab";
    case Variant::bba: return "bba";
    case Variant::aaa: break;
  }
  return "aaa";
}

std::optional<Variant> parse_variant(const std::string& s) {
  for (Variant v : kVariants) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

VariantSlots slots(const Triad& t, Variant v) {
  VariantSlots s;
  s.system.weight = {t.j.norm2(), t.k.norm2(), t.l.norm2()};
  s.system.c = {t.c_kl, t.c_jl, -t.c_jk};
  switch (v) {
    case Variant::aaa:
      s.coord = {Lattice::a(t.mj), Lattice::a(t.mk), Lattice::a(t.ml)};
      break;
    case Variant::abb:
      s.coord = {Lattice::a(t.mj), Lattice::b(t.mk), Lattice::b(t.ml)};
      break;
    case Variant::bab:
      s.coord = {Lattice::b(t.mj), Lattice::a(t.mk), Lattice::b(t.ml)};
      break;
    case Variant::bba:
      s.coord = {Lattice::b(t.mj), Lattice::b(t.mk), Lattice::a(t.ml)};
      s.system.c = {-t.c_kl, -t.c_jl, t.c_jk};
      break;
  }
  return s;
}

Triad make_triad(const Lattice& lat, ModeIndex j, ModeIndex k) {
  Triad t;
  t.j = j;
  t.k = k;
  t.l = j + k;
  t.mj = lat.index(j);
  t.mk = lat.index(k);
  t.ml = lat.index(t.l);
  t.c_jk = coeff(j, k);
  t.c_jl = coeff(j, t.l);
  t.c_kl = coeff(k, t.l);
  return t;
}

std::vector<Triad> enumerate_triads(const Lattice& lat) {
  std::vector<Triad> out;
  const auto& modes = lat.all();
  for (std::size_t a = 0; a < modes.size(); ++a) {
    for (std::size_t b = a; b < modes.size(); ++b) {
      const ModeIndex l = modes[a] + modes[b];
      if (!lat.find(l)) continue;
      Triad t = make_triad(lat, modes[a], modes[b]);
      if (t.c_jk == 0.0 && t.c_jl == 0.0 && t.c_kl == 0.0) continue;
      out.push_back(t);
    }
  }
  return out;
}

std::string to_string(Dissipation d) { return d == Dissipation::ekman ? "ekman" : "laplacian"; }

void EulerSpec::validate() const {
  if (N < 2) throw ConfigurationError("euler2d: N must be at least 2, got " + std::to_string(N));
  if (conservative) return;
  if (!(std::isfinite(nu) && nu > 0.0)) throw ConfigurationError("euler2d: forced model needs nu > 0");
  if (forcing.size() != dimension()) {
    throw ConfigurationError("euler2d: forcing has " + std::to_string(forcing.size()) + " entries, expected " +
                             std::to_string(dimension()));
  }
  bool nonzero = false;
  for (double f : forcing) {
    if (!(std::isfinite(f) && f >= 0.0)) throw ConfigurationError("euler2d: forcing entries must be nonnegative");
    nonzero = nonzero || f > 0.0;
  }
  if (!nonzero) throw ConfigurationError("euler2d: forced model needs a nonzero forcing vector");
}

double damping_weight(const EulerSpec& spec, ModeIndex j) noexcept {
  return spec.dissipation == Dissipation::laplacian ? static_cast<double>(j.norm2()) : 1.0;
}

void full_rhs(const EulerSpec& spec, const Lattice& lat, std::span<const double> q, std::span<double> out) {
  const std::size_t dim = lat.dimension();
  if (q.size() != dim || out.size() != dim) {
    throw UsageError("euler2d::full_rhs: state has " + std::to_string(q.size()) + " coordinates, expected " +
                     std::to_string(dim));
  }
  const auto& modes = lat.all();
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const ModeIndex j = modes[m];
    double da = 0.0, db = 0.0;
    // Pairs with j + k = l.
    for (std::size_t mk = 0; mk < modes.size(); ++mk) {
      const ModeIndex k = modes[mk];
      const auto ml = lat.find(j + k);
      if (!ml) continue;
      const double c = coeff(k, modes[*ml]);
      const double ak = q[Lattice::a(mk)], bk = q[Lattice::b(mk)];
      const double al = q[Lattice::a(*ml)], bl = q[Lattice::b(*ml)];
      da += c * (ak * al + bk * bl);
      db += c * (ak * bl - bk * al);
    }
    // Unordered pairs {k, l} with k + l = j: half the ordered sum.
    for (std::size_t mk = 0; mk < modes.size(); ++mk) {
      const ModeIndex k = modes[mk];
      const auto ml = lat.find(j - k);
      if (!ml) continue;
      const double c = 0.5 * coeff(k, modes[*ml]);
      const double ak = q[Lattice::a(mk)], bk = q[Lattice::b(mk)];
      const double al = q[Lattice::a(*ml)], bl = q[Lattice::b(*ml)];
      da += c * (bk * bl - ak * al);
      db -= c * (ak * bl + bk * al);
    }
    out[Lattice::a(m)] = da;
    out[Lattice::b(m)] = db;
  }
  if (!spec.conservative) {
    for (std::size_t m = 0; m < modes.size(); ++m) {
      const double rate = spec.nu * damping_weight(spec, modes[m]);
      for (std::size_t i : {Lattice::a(m), Lattice::b(m)}) out[i] += -rate * q[i] + spec.forcing[i];
    }
  }
}

std::vector<double> full_rhs(const EulerSpec& spec, std::span<const double> q) {
  spec.validate();
  const Lattice lat(spec.N);
  std::vector<double> out(lat.dimension());
  full_rhs(spec, lat, q, out);
  return out;
}

namespace {

void add_field(std::span<const double> q, const VariantSlots& s, std::span<double> out) {
  const double y0 = q[s.coord[0]], y1 = q[s.coord[1]], y2 = q[s.coord[2]];
  out[s.coord[0]] += s.system.c[0] * y1 * y2;
  out[s.coord[1]] += s.system.c[1] * y0 * y2;
  out[s.coord[2]] += s.system.c[2] * y0 * y1;
}

void run_flow(std::span<double> q, const VariantSlots& s, double t, const std::string& id) {
  Vec3 y{q[s.coord[0]], q[s.coord[1]], q[s.coord[2]]};
  try {
    triad_system_flow(s.system, y, t);
  } catch (const IntegrationError& e) {
    throw IntegrationError("triad " + id + ": " + e.what());
  }
  q[s.coord[0]] = y[0];
  q[s.coord[1]] = y[1];
  q[s.coord[2]] = y[2];
}

std::string field_id(const Triad& t, Variant v) {
  return to_string(v) + to_string(t.j) + to_string(t.k) + to_string(t.l);
}

}  // namespace

void triad_field(std::span<const double> q, const Triad& t, Variant v, std::span<double> out) {
  add_field(q, slots(t, v), out);
}

void triad_flow(std::span<double> q, const Triad& t, Variant v, double duration) {
  if (duration == 0.0) return;
  run_flow(q, slots(t, v), duration, field_id(t, v));
}

double energy(const Lattice& lat, std::span<const double> q) {
  double acc = 0.0;
  for (std::size_t m = 0; m < lat.modes(); ++m) {
    const double a = q[Lattice::a(m)], b = q[Lattice::b(m)];
    acc += (a * a + b * b) / lat.mode(m).norm2();
  }
  return acc;
}

double enstrophy(std::span<const double> q) { return std::inner_product(q.begin(), q.end(), q.begin(), 0.0); }

void dissipative_flow(std::span<double> q, double t, const EulerSpec& spec, const Lattice& lat) {
  if (t == 0.0) return;
  for (std::size_t m = 0; m < lat.modes(); ++m) {
    const double rate = spec.nu * damping_weight(spec, lat.mode(m));
    const double g = -std::expm1(-rate * t);
    for (std::size_t i : {Lattice::a(m), Lattice::b(m)}) q[i] += g * (spec.forcing[i] / rate - q[i]);
  }
}

std::string to_string(const ExtIndex& e) {
  return "(" + std::to_string(e.j.j1) + "," + std::to_string(e.j.j2) + (e.plus ? ",+)" : ",-)");
}

double default_activity_tolerance(std::span<const double> q) {
  return 1e-12 * std::max(1.0, std::sqrt(enstrophy(q)));
}

ActiveSet active_set(const Lattice& lat, std::span<const double> q, double tol) {
  if (tol < 0.0) tol = default_activity_tolerance(q);
  ActiveSet out;
  for (std::size_t m = 0; m < lat.modes(); ++m) {
    if (std::abs(q[Lattice::a(m)]) > tol) out.insert({lat.mode(m), true});
    if (std::abs(q[Lattice::b(m)]) > tol) out.insert({lat.mode(m), false});
  }
  return out;
}

ActiveSet oplus_closure(const Lattice& lat, const ActiveSet& A) {
  ActiveSet closure = A;
  for (bool grew = true; grew;) {
    grew = false;
    const std::vector<ExtIndex> members(closure.begin(), closure.end());
    for (const auto& x : members) {
      for (const auto& y : members) {
        if (coeff(x.j, y.j) == 0.0) continue;
        const bool type = x.plus == y.plus;
        for (ModeIndex l : {x.j + y.j, x.j - y.j}) {
          if (lat.find(l) && closure.insert({l, type}).second) grew = true;
        }
      }
    }
  }
  return closure;
}

bool is_nondegenerate(const Lattice& lat, std::span<const double> q, double tol) {
  const ActiveSet closure = oplus_closure(lat, active_set(lat, q, tol));
  if (!closure.contains({{1, 0}, true}) || !closure.contains({{0, 1}, true})) return false;
  return std::any_of(closure.begin(), closure.end(), [](const ExtIndex& e) { return !e.plus && e.j.norm2() > 1; });
}

bool is_generic(std::span<const double> q) noexcept {
  return std::all_of(q.begin(), q.end(), [](double v) { return v != 0.0; });
}

SplittingScheme build_scheme(const EulerSpec& spec, const TimeLawSpec& law, OrderPolicy order) {
  spec.validate();
  law.validate();
  auto lat = std::make_shared<const Lattice>(spec.N);
  SplittingScheme scheme;
  scheme.model = ModelKind::euler2d;
  scheme.dimension = lat->dimension();
  scheme.time_law = law;
  scheme.order = order;
  if (!spec.conservative) {
    auto sp = std::make_shared<const EulerSpec>(spec);
    FlowPrimitive v0;
    v0.id = "V0";
    v0.dissipative = true;
    v0.flow = [sp, lat](std::span<double> q, double t) { dissipative_flow(q, t, *sp, *lat); };
    v0.field = [sp, lat](std::span<const double> q, std::span<double> out) {
      for (std::size_t m = 0; m < lat->modes(); ++m) {
        const double rate = sp->nu * damping_weight(*sp, lat->mode(m));
        for (std::size_t i : {Lattice::a(m), Lattice::b(m)}) out[i] += -rate * q[i] + sp->forcing[i];
      }
    };
    scheme.fields.push_back(std::move(v0));
  }
  for (const Triad& t : enumerate_triads(*lat)) {
    for (Variant v : kVariants) {
      FlowPrimitive p;
      p.id = field_id(t, v);
      const VariantSlots s = slots(t, v);
      p.flow = [s, id = p.id](std::span<double> q, double dt) { run_flow(q, s, dt, id); };
      p.field = [s](std::span<const double> q, std::span<double> out) { add_field(q, s, out); };
      scheme.fields.push_back(std::move(p));
    }
  }
  return scheme;
}

VectorField rhs_field(const EulerSpec& spec) {
  spec.validate();
  auto lat = std::make_shared<const Lattice>(spec.N);
  return [spec, lat](std::span<const double> q, std::span<double> out) { full_rhs(spec, *lat, q, out); };
}

}  // namespace rsplit::euler2d
