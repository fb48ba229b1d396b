// Copyright 2025 The PDMM Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pdmm/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace pdmm {

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v = rng();
  while (v >= limit) v = rng();
  return static_cast<std::size_t>(v % n);
}

double standard_normal(std::mt19937_64& rng) {
  // Box-Muller; u1 is kept away from zero so the log is finite.
  double u1 = uniform_unit(rng);
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  const double u2 = uniform_unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

bool is_symmetric(const Eigen::MatrixXd& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol;
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& m, double clip) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  Eigen::VectorXd d = es.eigenvalues();
  for (Eigen::Index k = 0; k < d.size(); ++k) {
    d[k] = d[k] > clip ? std::sqrt(d[k]) : 0.0;
  }
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::MatrixXd symmetric_inverse(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw std::invalid_argument("symmetric_inverse: matrix is not positive definite");
  }
  return es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose();
}

Eigen::MatrixXd symmetric_inverse_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw std::invalid_argument("symmetric_inverse_sqrt: matrix is not positive definite");
  }
  return es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose();
}

Eigen::VectorXd solve_incidence_flow(int node_count,
                                     const std::vector<std::pair<int, int>>& edges,
                                     const Eigen::VectorXd& r) {
  if (r.size() != node_count) {
    throw std::invalid_argument("solve_incidence_flow: rhs size mismatch");
  }
  if (edges.empty()) return Eigen::VectorXd(0);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(node_count, static_cast<Eigen::Index>(edges.size()));
  for (std::size_t e = 0; e < edges.size(); ++e) {
    b(edges[e].first, static_cast<Eigen::Index>(e)) = 1.0;
    b(edges[e].second, static_cast<Eigen::Index>(e)) = -1.0;
  }
  return b.completeOrthogonalDecomposition().solve(r);
}

}  // namespace pdmm
