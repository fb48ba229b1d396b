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

#ifndef PDMM_UPDATES_HPP_
#define PDMM_UPDATES_HPP_

#include <Eigen/Dense>

#include "pdmm/graph.hpp"
#include "pdmm/penalty.hpp"

namespace pdmm {

// Per-edge dual mappings. These are shared between the sender-side node
// update and the receiver-side broadcast reconstruction so that both compute
// bit-identical values on a lossless channel.

// lambda_{i|j}^{k+1} = lambda_{j|i}^k + P_d^{-1} (c - A_j x_j^k - A_i w_i)
inline Eigen::VectorXd dual_map_via_w(const EdgeConstraint& con, const EdgePenalty& pen,
                                      bool owner_is_lower,
                                      const Eigen::VectorXd& lambda_from_neighbor,
                                      const Eigen::VectorXd& x_neighbor,
                                      const Eigen::VectorXd& w_owner) {
  const Eigen::MatrixXd& a_own = owner_is_lower ? con.A_lo : con.A_hi;
  const Eigen::MatrixXd& a_nbr = owner_is_lower ? con.A_hi : con.A_lo;
  return lambda_from_neighbor + pen.pd_inv * (con.c - a_nbr * x_neighbor - a_own * w_owner);
}

// Single-minimization regime (P_d = P_p^{-1}):
// lambda_{i|j}^{k+1} = lambda_{j|i}^k + P_p (c - A_j x_j^k - A_i x_i^{k+1})
inline Eigen::VectorXd dual_map_simplified(const EdgeConstraint& con, const EdgePenalty& pen,
                                           bool owner_is_lower,
                                           const Eigen::VectorXd& lambda_from_neighbor,
                                           const Eigen::VectorXd& x_neighbor,
                                           const Eigen::VectorXd& x_owner_new) {
  const Eigen::MatrixXd& a_own = owner_is_lower ? con.A_lo : con.A_hi;
  const Eigen::MatrixXd& a_nbr = owner_is_lower ? con.A_hi : con.A_lo;
  return lambda_from_neighbor +
         pen.pp * (con.c - a_nbr * x_neighbor - a_own * x_owner_new);
}

}  // namespace pdmm

#endif  // PDMM_UPDATES_HPP_
