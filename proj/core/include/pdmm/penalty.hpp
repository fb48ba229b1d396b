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

#ifndef PDMM_PENALTY_HPP_
#define PDMM_PENALTY_HPP_

#include <vector>

#include <Eigen/Dense>

#include "pdmm/graph.hpp"

namespace pdmm {

// Symmetry tolerance for penalty matrices and tolerance under which the
// per-edge gap P_d - P_p^{-1} counts as exactly zero (single-minimization
// regime).
inline constexpr double kSymmetryTol = 1e-12;
inline constexpr double kDeltaZeroTol = 1e-12;
// PSD check tolerance on the smallest eigenvalue.
inline constexpr double kPsdTol = -1e-10;

// Per-edge primal/dual penalty pair with everything derived from it that the
// iterations and the inequality diagnostics need: inverses, symmetric square
// roots, and the gap dp = P_d - P_p^{-1}. All are precomputed once at
// configuration time.
struct EdgePenalty {
  Eigen::MatrixXd pp;
  Eigen::MatrixXd pd;
  Eigen::MatrixXd pp_inv;
  Eigen::MatrixXd pd_inv;
  Eigen::MatrixXd pp_sqrt;
  Eigen::MatrixXd pp_inv_sqrt;
  Eigen::MatrixXd dp;        // pd - pp_inv
  Eigen::MatrixXd dp_sqrt;   // valid only when dp_psd
  double dp_min_eigenvalue = 0.0;
  bool dp_psd = false;
  bool dp_zero = false;
};

struct PenaltyConfig {
  std::vector<EdgePenalty> edges;  // aligned with the problem's edge order
};

struct ConditionReport {
  bool pass = true;        // P_d - P_p^{-1} PSD on every edge
  bool delta_zero = true;  // gap zero on every edge: single-minimization regime
  std::vector<double> min_eigenvalues;  // of the per-edge gap
};

// Validates the raw pairs (symmetric within 1e-12, SPD) and precomputes the
// derived matrices. Throws std::invalid_argument on a malformed pair.
PenaltyConfig make_penalty_config(const GraphProblem& problem,
                                  std::vector<Eigen::MatrixXd> pp,
                                  std::vector<Eigen::MatrixXd> pd);

// Scalar setup: P_p = gamma_p * I, P_d = gamma_d * I on every edge. Both
// parameters must be positive.
PenaltyConfig scalar_penalty(double gamma_p, double gamma_d, const GraphProblem& problem);

// Exact single-minimization pair: P_d set to the precomputed inverse of P_p.
PenaltyConfig inverse_pair_penalty(const GraphProblem& problem,
                                   std::vector<Eigen::MatrixXd> pp);

// PSD status of P_d - P_p^{-1} per edge plus the overall verdict.
ConditionReport check_condition(const PenaltyConfig& config);

}  // namespace pdmm

#endif  // PDMM_PENALTY_HPP_
