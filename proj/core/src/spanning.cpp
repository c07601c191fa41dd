#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "rsplit/diagnostics.hpp"
#include "rsplit/errors.hpp"

namespace rsplit {

namespace {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::vector<double> damping_per_coordinate(const euler2d::EulerSpec& spec, const euler2d::Lattice& lat) {
  std::vector<double> lambda(lat.dimension());
  for (std::size_t m = 0; m < lat.modes(); ++m) {
    const double w = euler2d::damping_weight(spec, lat.mode(m));
    lambda[euler2d::Lattice::a(m)] = w;
    lambda[euler2d::Lattice::b(m)] = w;
  }
  return lambda;
}

double forcing_at(const euler2d::EulerSpec& spec, std::size_t i) {
  return spec.forcing.empty() ? 0.0 : spec.forcing.at(i);
}

void check_point(std::size_t have, std::size_t want, const char* who) {
  if (have != want) {
    throw UsageError(std::string(who) + ": point has " + std::to_string(have) + " coordinates, expected " +
                     std::to_string(want));
  }
}

std::vector<double> euler_v0(const euler2d::EulerSpec& spec, const euler2d::Lattice& lat, std::span<const double> q) {
  const auto lambda = damping_per_coordinate(spec, lat);
  std::vector<double> v(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) v[i] = -spec.nu * lambda[i] * q[i] + forcing_at(spec, i);
  return v;
}

std::array<std::size_t, 6> triad_rows(const euler2d::Triad& t) {
  using L = euler2d::Lattice;
  return {L::a(t.mj), L::b(t.mj), L::a(t.mk), L::b(t.mk), L::a(t.ml), L::b(t.ml)};
}

bool admissible(const euler2d::Triad& t) { return t.c_jk != 0.0 && t.c_jl != 0.0 && t.c_kl != 0.0; }

std::string triad_label(const euler2d::Triad& t) {
  return euler2d::to_string(t.j) + euler2d::to_string(t.k) + euler2d::to_string(t.l);
}

}  // namespace

RankReport rank_report(std::string id, std::size_t rows, std::size_t cols, std::span<const double> row_major) {
  if (row_major.size() != rows * cols || rows == 0 || cols == 0) throw UsageError("rank_report: bad matrix shape");
  const Eigen::Map<const Matrix> A(row_major.data(), static_cast<Eigen::Index>(rows),
                                   static_cast<Eigen::Index>(cols));
  Eigen::JacobiSVD<Matrix> svd(A);
  const auto& s = svd.singularValues();

  RankReport r;
  r.id = std::move(id);
  r.rows = rows;
  r.cols = cols;
  r.singular_values.assign(s.data(), s.data() + s.size());
  const double threshold = kRankThreshold * (s.size() > 0 ? s(0) : 0.0);
  std::size_t rank = 0;
  while (rank < r.singular_values.size() && r.singular_values[rank] > threshold) ++rank;
  r.rank = rank;
  if (rank == 0) {
    r.gap = 0.0;
  } else {
    const double below = rank < r.singular_values.size() ? r.singular_values[rank] : 0.0;
    r.gap = r.singular_values[rank - 1] / std::max(below, threshold);
  }
  return r;
}

double forced_lorenz_determinant_formula(const lorenz96::LorenzSpec& spec, std::span<const double> x) {
  const std::size_t n = spec.n;
  check_point(x.size(), n, "forced_lorenz_determinant_formula");
  if (spec.forcing.size() != n) throw UsageError("forced_lorenz_determinant_formula: forcing has the wrong length");
  double prod = x[0] * x[n - 2] * x[n - 1];
  for (std::size_t k = 1; k + 2 < n; ++k) prod *= x[k] * x[k];
  double norm2 = 0.0, fx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    norm2 += x[i] * x[i];
    fx += spec.forcing[i] * x[i];
  }
  const double sign = n % 2 == 0 ? 1.0 : -1.0;
  return sign * prod * (spec.nu * norm2 - fx);
}

std::vector<double> dissipative_bracket(const euler2d::EulerSpec& spec, const euler2d::Lattice& lat,
                                        const euler2d::Triad& triad, euler2d::Variant v, std::span<const double> q) {
  check_point(q.size(), lat.dimension(), "dissipative_bracket");
  const auto vs = euler2d::slots(triad, v);
  const std::array<euler2d::ModeIndex, 3> modes{triad.j, triad.k, triad.l};
  std::array<double, 3> lambda{};
  for (std::size_t s = 0; s < 3; ++s) lambda[s] = euler2d::damping_weight(spec, modes[s]);

  std::vector<double> out(q.size(), 0.0);
  for (std::size_t s = 0; s < 3; ++s) {
    const std::size_t o1 = (s + 1) % 3, o2 = (s + 2) % 3;
    const std::size_t i1 = vs.coord[o1], i2 = vs.coord[o2];
    out[vs.coord[s]] = vs.system.c[s] * (forcing_at(spec, i1) * q[i2] + forcing_at(spec, i2) * q[i1] +
                                         spec.nu * (lambda[s] - lambda[o1] - lambda[o2]) * q[i1] * q[i2]);
  }
  return out;
}

std::vector<double> commutator_bracket(const euler2d::EulerSpec& spec, const euler2d::Lattice& lat,
                                       const euler2d::Triad& triad, euler2d::Variant v, std::span<const double> q) {
  const std::size_t d = lat.dimension();
  check_point(q.size(), d, "commutator_bracket");
  const auto vs = euler2d::slots(triad, v);
  const auto di = static_cast<Eigen::Index>(d);

  Eigen::MatrixXd DW = Eigen::MatrixXd::Zero(di, di);
  for (std::size_t s = 0; s < 3; ++s) {
    const auto row = static_cast<Eigen::Index>(vs.coord[s]);
    const std::size_t i1 = vs.coord[(s + 1) % 3], i2 = vs.coord[(s + 2) % 3];
    DW(row, static_cast<Eigen::Index>(i1)) += vs.system.c[s] * q[i2];
    DW(row, static_cast<Eigen::Index>(i2)) += vs.system.c[s] * q[i1];
  }
  const auto lambda = damping_per_coordinate(spec, lat);
  Eigen::VectorXd DV0diag(di);
  for (std::size_t i = 0; i < d; ++i) DV0diag(static_cast<Eigen::Index>(i)) = -spec.nu * lambda[i];

  const auto v0 = euler_v0(spec, lat, q);
  std::vector<double> w(d, 0.0);
  euler2d::triad_field(q, triad, v, w);

  const Eigen::VectorXd V0 = Eigen::Map<const Eigen::VectorXd>(v0.data(), di);
  const Eigen::VectorXd W = Eigen::Map<const Eigen::VectorXd>(w.data(), di);
  const Eigen::VectorXd br = DW * V0 - DV0diag.cwiseProduct(W);
  return {br.data(), br.data() + br.size()};
}

double bracket_check(const euler2d::EulerSpec& spec, const euler2d::Triad& triad, euler2d::Variant v,
                     std::span<const double> q) {
  const euler2d::Lattice lat(spec.N);
  const auto a = dissipative_bracket(spec, lat, triad, v, q);
  const auto b = commutator_bracket(spec, lat, triad, v, q);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

std::vector<RankReport> euler_triad_rank_tests(const euler2d::EulerSpec& spec, const euler2d::Triad& triad,
                                               std::span<const double> point) {
  const euler2d::Lattice lat(spec.N);
  check_point(point.size(), lat.dimension(), "euler_triad_rank_tests");
  const auto rows = triad_rows(triad);
  const std::string label = triad_label(triad);

  // Column c of M is variant c restricted to the six triad coordinates.
  std::array<std::vector<double>, 4> fields;
  for (std::size_t c = 0; c < 4; ++c) {
    fields[c].assign(point.size(), 0.0);
    euler2d::triad_field(point, triad, euler2d::kVariants[c], fields[c]);
  }
  auto block = [&](std::size_t first_row) {
    std::vector<double> m;
    for (std::size_t r = first_row; r < 6; ++r)
      for (std::size_t c = 0; c < 4; ++c) m.push_back(fields[c][rows[r]]);
    return m;
  };

  std::vector<RankReport> out;
  const std::vector<double> pt(point.begin(), point.end());
  auto add = [&](const std::string& id, std::size_t nrows, std::size_t ncols, const std::vector<double>& m,
                 std::size_t expected) {
    RankReport r = rank_report(id + label, nrows, ncols, m);
    r.point = pt;
    r.expected_rank = expected;
    out.push_back(std::move(r));
  };
  add("M", 6, 4, block(0), 4);
  add("M'", 4, 4, block(2), 3);
  add("M''", 2, 4, block(4), 2);

  if (!spec.conservative) {
    const auto v0 = euler_v0(spec, lat, point);
    const auto br = dissipative_bracket(spec, lat, triad, euler2d::Variant::aaa, point);
    std::vector<double> m;
    for (std::size_t r = 0; r < 6; ++r) {
      m.push_back(v0[rows[r]]);
      for (std::size_t c = 0; c < 4; ++c) m.push_back(fields[c][rows[r]]);
      m.push_back(br[rows[r]]);
    }
    add("forced", 6, 6, m, 6);
  }
  return out;
}

std::vector<RankReport> rank_tests(const ModelSpec& spec, std::span<const double> point) {
  validate(spec);
  check_point(point.size(), dimension(spec), "rank_tests");
  const std::vector<double> pt(point.begin(), point.end());

  if (const auto* ls = std::get_if<lorenz96::LorenzSpec>(&spec)) {
    const std::size_t n = ls->n;
    std::vector<RankReport> out;
    // Column k holds V_k; the matrix is stored row-major.
    std::vector<double> m(n * n, 0.0), col(n);
    for (std::size_t k = 0; k < n; ++k) {
      std::fill(col.begin(), col.end(), 0.0);
      lorenz96::rotation_field(point, k, col);
      for (std::size_t i = 0; i < n; ++i) m[i * n + k] = col[i];
    }
    RankReport r = rank_report("lorenz", n, n, m);
    r.point = pt;
    r.expected_rank = n - 1;
    out.push_back(std::move(r));

    if (!ls->conservative) {
      for (std::size_t i = 0; i < n; ++i) m[i * n] = -ls->nu * point[i] + ls->forcing[i];
      for (std::size_t k = 0; k + 1 < n; ++k) {
        std::fill(col.begin(), col.end(), 0.0);
        lorenz96::rotation_field(point, k, col);
        for (std::size_t i = 0; i < n; ++i) m[i * n + k + 1] = col[i];
      }
      RankReport f = rank_report("forced-lorenz", n, n, m);
      f.point = pt;
      f.expected_rank = n;
      f.determinant = Eigen::Map<const Matrix>(m.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n))
                          .fullPivLu()
                          .determinant();
      f.determinant_formula = forced_lorenz_determinant_formula(*ls, point);
      out.push_back(std::move(f));
    }
    return out;
  }

  const auto& es = std::get<euler2d::EulerSpec>(spec);
  const euler2d::Lattice lat(es.N);
  std::vector<RankReport> out;
  for (const auto& t : euler2d::enumerate_triads(lat)) {
    if (!admissible(t)) continue;
    auto part = euler_triad_rank_tests(es, t, point);
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return out;
}

}  // namespace rsplit
