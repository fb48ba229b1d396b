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
//
// Scalar distributed-averaging recursions: the closed-form PDMM updates
// (the cross-validation oracle for the general engine) and the comparison
// baselines (edge-splitting consensus ADMM, randomized gossip, broadcast
// gossip). Edge orientation uses A_ij = +1 for the lower endpoint and -1 for
// the higher one, with zero constraint offset.

#ifndef PDMM_BASELINES_HPP_
#define PDMM_BASELINES_HPP_

#include <vector>

#include <Eigen/Dense>

#include "pdmm/graph.hpp"

namespace pdmm {

// State shared by the scalar methods. lambda and u are indexed by directed
// edge id ([lo|hi] = 2e, [hi|lo] = 2e+1); z by undirected edge id. Unused
// blocks are simply ignored by methods that do not touch them.
struct ScalarAveragingState {
  Eigen::VectorXd x;       // m
  Eigen::VectorXd lambda;  // 2|E| (PDMM duals)
  Eigen::VectorXd z;       // |E|  (ADMM edge variable)
  Eigen::VectorXd u;       // 2|E| (ADMM scaled multipliers)
};

// x = x0, lambda = 0, u = 0, z = per-edge midpoint of x0.
ScalarAveragingState scalar_averaging_init(const GraphTopology& topology,
                                           const Eigen::VectorXd& x0);

// Sign of the constraint block acting on `node` within edge e.
double edge_sign(const GraphTopology& topology, int edge, int node);

// --- Closed-form PDMM recursions -------------------------------------------

// x_i = (t_i + sum_j (gamma_p x_j + A_ij lambda_{j|i})) / (1 + |N_i| gamma_p)
double pdmm_avg_x(int node, const ScalarAveragingState& state, const Eigen::VectorXd& t,
                  double gamma_p, const GraphTopology& topology);

// w_i = (sum_j (x_j + gamma_d A_ij lambda_{j|i}) + gamma_d t_i) / (|N_i| + gamma_d)
double pdmm_avg_w(int node, const ScalarAveragingState& state, const Eigen::VectorXd& t,
                  double gamma_d, const GraphTopology& topology);

// lambda_{i|j} = lambda_{j|i} - (A_ji x_j + A_ij w_i) / gamma_d for the
// directed edge [i|j].
double pdmm_avg_lambda(int directed, const ScalarAveragingState& state, double w_owner,
                       double gamma_d, const GraphTopology& topology);

// Full node activation (x, then lambda through w), matching one engine
// activation bit for bit on lossless transport.
void pdmm_avg_activate(ScalarAveragingState& state, int node, const Eigen::VectorXd& t,
                       double gamma_p, double gamma_d, const GraphTopology& topology);

// One synchronous round: every node computes from round-k values.
void pdmm_avg_sync_round(ScalarAveragingState& state, const Eigen::VectorXd& t,
                         double gamma_p, double gamma_d, const GraphTopology& topology);

// --- Gossip baselines --------------------------------------------------------

// Both endpoints move to their midpoint; the pair sum is preserved exactly.
void gossip_step(ScalarAveragingState& state, int edge, const GraphTopology& topology);

// Every neighbor j of the speaker mixes x_j <- gamma_b x_j + (1-gamma_b) x_i;
// the speaker itself is unchanged. gamma_b must lie in (0, 1).
void broadcast_step(ScalarAveragingState& state, int node, double gamma_b,
                    const GraphTopology& topology);

// --- Consensus ADMM ----------------------------------------------------------
//
// Edge-splitting form on x_i = z_ij = x_j:
//   x_i <- (t_i + rho sum_j (z_ij - u_{i,ij})) / (1 + rho |N_i|)
//   z_ij <- (x_i + x_j + u_{i,ij} + u_{j,ij}) / 2
//   u_{i,ij} <- u_{i,ij} + x_i - z_ij

// Synchronous sweep: all x, then all z, then all u. rho must be positive.
void admm_avg_sync_round(ScalarAveragingState& state, const Eigen::VectorXd& t, double rho,
                         const GraphTopology& topology);

// Asynchronous variant: one edge's incident quantities per iteration (both
// endpoint x blocks, the edge z, both edge multipliers).
void admm_avg_edge_step(ScalarAveragingState& state, int edge, const Eigen::VectorXd& t,
                        double rho, const GraphTopology& topology);

// Fixed-point multipliers for x = z = mean(t): antisymmetric u with
// rho * sum_j u_{i,ij} = t_i - mean(t). Used by invariance tests.
Eigen::VectorXd admm_fixed_point_u(const GraphTopology& topology, const Eigen::VectorXd& t,
                                   double rho);

}  // namespace pdmm

#endif  // PDMM_BASELINES_HPP_
