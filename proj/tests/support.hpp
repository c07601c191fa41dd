#pragma once

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rsplit/rng.hpp"

namespace testing_support {

inline std::vector<double> random_state(std::size_t n, rsplit::Rng& rng, double scale = 1.0) {
  std::vector<double> x(n);
  for (auto& v : x) v = scale * rng.normal();
  return x;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

// Gauss-Laguerre nodes and weights for weight e^{-t} on [0, inf), from the
// eigen-decomposition of the Jacobi matrix.
struct Quadrature {
  std::vector<double> nodes, weights;
};

inline Quadrature gauss_laguerre(int n) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    J(i, i) = 2.0 * i + 1.0;
    if (i + 1 < n) J(i, i + 1) = J(i + 1, i) = i + 1.0;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  Quadrature q;
  for (int i = 0; i < n; ++i) {
    q.nodes.push_back(es.eigenvalues()(i));
    const double v0 = es.eigenvectors()(0, i);
    q.weights.push_back(v0 * v0);
  }
  return q;
}

}  // namespace testing_support
