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

#ifndef PDMM_LINALG_HPP_
#define PDMM_LINALG_HPP_

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace pdmm {

// --- Deterministic RNG helpers -------------------------------------------
//
// std::uniform_int_distribution and friends are implementation-defined.
// Simulation outputs are part of the CLI contract (byte-identical reruns),
// so index/Bernoulli draws are derived from the raw mt19937_64 stream in a
// fixed way.

// Unbiased integer in [0, n) by rejection sampling. n must be positive.
std::size_t uniform_index(std::mt19937_64& rng, std::size_t n);

// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// True with probability p (p in [0, 1]; p = 1 is always true).
inline bool bernoulli(std::mt19937_64& rng, double p) {
  return uniform_unit(rng) < p;
}

// Standard normal via Box-Muller on the portable uniform above.
double standard_normal(std::mt19937_64& rng);

// --- Symmetric-matrix utilities -------------------------------------------

bool is_symmetric(const Eigen::MatrixXd& m, double tol);

// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Eigen::MatrixXd& m);

// Principal square root of a PSD matrix via symmetric eigendecomposition.
// Eigenvalues below `clip` are treated as zero.
Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& m, double clip = 0.0);

// Inverse and inverse square root of an SPD matrix.
Eigen::MatrixXd symmetric_inverse(const Eigen::MatrixXd& m);
Eigen::MatrixXd symmetric_inverse_sqrt(const Eigen::MatrixXd& m);

// Minimum-norm least-squares solution of the node/edge incidence system
//
//   sum_{e incident to i} s(i,e) * phi_e = r_i,  s(i,e) = +1 if i is the
//   lower endpoint of e, -1 otherwise,
//
// for scalar edge flows phi. Edges are (lo, hi) pairs of 0-based node ids.
Eigen::VectorXd solve_incidence_flow(int node_count,
                                     const std::vector<std::pair<int, int>>& edges,
                                     const Eigen::VectorXd& r);

}  // namespace pdmm

#endif  // PDMM_LINALG_HPP_
