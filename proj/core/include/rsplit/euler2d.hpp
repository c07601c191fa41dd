#pragma once

// Galerkin-truncated 2D Euler / Navier-Stokes in real Fourier coordinates.
// Mode m of the lattice owns coordinates a = 2m and b = 2m + 1.

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "rsplit/splitting.hpp"
#include "rsplit/triad_system.hpp"

namespace rsplit::euler2d {

struct ModeIndex {
  int j1 = 0;
  int j2 = 0;

  int norm2() const noexcept { return j1 * j1 + j2 * j2; }
  ModeIndex operator+(ModeIndex o) const noexcept { return {j1 + o.j1, j2 + o.j2}; }
  ModeIndex operator-(ModeIndex o) const noexcept { return {j1 - o.j1, j2 - o.j2}; }
  auto operator<=>(const ModeIndex&) const = default;
};

std::string to_string(ModeIndex j);

/// Membership in Z^2_N: box |j1|, |j2| <= N and (j2 > 0 or (j2 = 0, j1 > 0)).
bool in_lattice(ModeIndex j, int N) noexcept;

/// Z^2_N in order: (1,0)..(N,0), then rows j2 = 1..N with j1 = -N..N.
std::vector<ModeIndex> lattice(int N);

class Lattice {
 public:
  explicit Lattice(int N);

  int N() const noexcept { return N_; }
  std::size_t modes() const noexcept { return modes_.size(); }
  std::size_t dimension() const noexcept { return 2 * modes_.size(); }
  ModeIndex mode(std::size_t m) const { return modes_.at(m); }
  const std::vector<ModeIndex>& all() const noexcept { return modes_; }
  std::optional<std::size_t> find(ModeIndex j) const noexcept;
  std::size_t index(ModeIndex j) const;  // throws UsageError when absent

  static std::size_t a(std::size_t m) noexcept { return 2 * m; }
  static std::size_t b(std::size_t m) noexcept { return 2 * m + 1; }

 private:
  int N_;
  std::vector<ModeIndex> modes_;
  std::vector<int> lookup_;  // (2N+1)^2 box, -1 when outside Z^2_N
};

/// <k, l_perp> / (4 pi) (1/|k|^2 - 1/|l|^2) with l_perp = (l2, -l1).
double coeff(ModeIndex k, ModeIndex l);

enum class Variant { aaa, abb, bab, bba };

inline constexpr std::array<Variant, 4> kVariants{Variant::aaa, Variant::abb, Variant::bab, Variant::bba};

std::string to_string(Variant v);
std::optional<Variant> parse_variant(const std::string& s);

/// Interacting triple j + k = l with positions in the lattice.
struct Triad {
  ModeIndex j, k, l;
  std::size_t mj = 0, mk = 0, ml = 0;
  double c_jk = 0.0, c_jl = 0.0, c_kl = 0.0;
};

/// The three coordinates a variant moves (slot order j, k, l) and the signed
/// coefficients of its quadratic system.
struct VariantSlots {
  std::array<std::size_t, 3> coord{};
  TriadSystem system;
};

VariantSlots slots(const Triad& t, Variant v);

/// Triad with coefficients filled in; throws UsageError unless all three
/// modes lie in the lattice and j + k = l.
Triad make_triad(const Lattice& lat, ModeIndex j, ModeIndex k);

/// Unordered pairs {j, k} with j + k in the lattice, minus the pairs whose
/// three coefficients all vanish (parallel j and k).
std::vector<Triad> enumerate_triads(const Lattice& lat);

enum class Dissipation { laplacian, ekman };

std::string to_string(Dissipation d);

struct EulerSpec {
  int N = 2;
  bool conservative = true;
  double nu = 0.0;
  Dissipation dissipation = Dissipation::laplacian;
  std::vector<double> forcing;  // over (a_j, b_j) coordinates

  std::size_t dimension() const noexcept { return static_cast<std::size_t>(4 * N * (N + 1)); }
  void validate() const;
  bool operator==(const EulerSpec&) const = default;
};

/// Damping rate weight of mode m: |j|^2 (laplacian) or 1 (ekman).
double damping_weight(const EulerSpec& spec, ModeIndex j) noexcept;

/// out = V(q), evaluated straight from the mode sums (no triad table).
void full_rhs(const EulerSpec& spec, const Lattice& lat, std::span<const double> q, std::span<double> out);
std::vector<double> full_rhs(const EulerSpec& spec, std::span<const double> q);

/// out += V_{triad, variant}(q).
void triad_field(std::span<const double> q, const Triad& t, Variant v, std::span<double> out);

/// Flow of one splitting field for duration t (any sign).
void triad_flow(std::span<double> q, const Triad& t, Variant v, double duration);

double energy(const Lattice& lat, std::span<const double> q);
double enstrophy(std::span<const double> q);

/// Exact flow of q' = -nu Lambda q + F.
void dissipative_flow(std::span<double> q, double t, const EulerSpec& spec, const Lattice& lat);

/// Extended index (j, chi): chi = true is the real (+) part a_j.
struct ExtIndex {
  ModeIndex j;
  bool plus = true;
  auto operator<=>(const ExtIndex&) const = default;
};

std::string to_string(const ExtIndex& e);

using ActiveSet = std::set<ExtIndex>;

/// Default activity threshold: 1e-12 max(1, |q|).
double default_activity_tolerance(std::span<const double> q);

/// Coordinates with |q_i| > tol; a negative tol selects the default.
ActiveSet active_set(const Lattice& lat, std::span<const double> q, double tol = -1.0);

/// Saturation of A under the expansion rule: for active j, k with
/// C_jk != 0, add (l, chi_j chi_k) for l in {j + k, j - k} within the
/// lattice.
ActiveSet oplus_closure(const Lattice& lat, const ActiveSet& A);

bool is_nondegenerate(const Lattice& lat, std::span<const double> q, double tol = -1.0);
bool is_generic(std::span<const double> q) noexcept;

/// One primitive per (triad, variant) in enumeration order; a forced spec
/// prepends the dissipative flow.
SplittingScheme build_scheme(const EulerSpec& spec, const TimeLawSpec& law = {},
                             OrderPolicy order = OrderPolicy::fixed);

VectorField rhs_field(const EulerSpec& spec);

}  // namespace rsplit::euler2d
