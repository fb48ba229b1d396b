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

#ifndef PDMM_ENGINE_HPP_
#define PDMM_ENGINE_HPP_

#include <cstdint>
#include <utility>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "pdmm/graph.hpp"
#include "pdmm/netsim.hpp"
#include "pdmm/penalty.hpp"
#include "pdmm/state.hpp"

namespace pdmm {

// Node activation policy per iteration tick.
//
//  kSynchronous      all nodes update from round-k values, then exchange.
//  kCyclicAsync      node (k mod m) updates at iteration k.
//  kRandomNode       one uniformly random node per iteration.
//  kTwoNodeRandomEdge both endpoints of one uniformly random edge update,
//                    lower index first, each reading pre-iteration state.
enum class ScheduleKind { kSynchronous, kCyclicAsync, kRandomNode, kTwoNodeRandomEdge };

struct Schedule {
  ScheduleKind kind = ScheduleKind::kSynchronous;
  std::uint64_t rng_seed = 0;  // unused by the deterministic kinds
};

// Emits the active node set per iteration; owns the schedule RNG stream
// (separate from any transport randomness).
class ScheduleDriver {
 public:
  ScheduleDriver(Schedule schedule, const GraphTopology& topology);

  // Call exactly once per iteration, in iteration order.
  std::vector<int> active_nodes(long iteration);

 private:
  Schedule schedule_;
  const GraphTopology* topology_;
  std::mt19937_64 rng_;
};

// Which dual update the engine runs.
//
//  kViaW          conjugate-free default: an extra primal minimization for w
//                 followed by the P_d^{-1} dual map.
//  kSimplified    single minimization, valid only when P_d = P_p^{-1}; the
//                 dual map uses P_p and the new x directly.
//  kViaConjugate  solves the dual subproblem through f_i^*; cross-validation
//                 path only.
enum class LambdaPath { kViaW, kSimplified, kViaConjugate };

// --- Single-node update operations -----------------------------------------
//
// All read round-k neighbor values from `state` and return the activated
// node's new blocks; dual blocks are ordered by ascending neighbor id.

// argmin_x  f_i(x) + sum_j 1/2 ||A_i x + A_j x_j - c||^2_{P_p} - x^T sum_j A_i^T lambda_{j|i}
Eigen::VectorXd x_update(int node, const IterateState& state, const GraphProblem& problem,
                         const PenaltyConfig& config);

// argmin_w  f_i(w) + sum_j 1/2 ||c - A_j x_j - A_i w||^2_{P_d^{-1}} - w^T sum_j A_i^T lambda_{j|i}
Eigen::VectorXd w_update(int node, const IterateState& state, const GraphProblem& problem,
                         const PenaltyConfig& config);

std::vector<Eigen::VectorXd> lambda_update_via_w(int node, const Eigen::VectorXd& w,
                                                 const IterateState& state,
                                                 const GraphProblem& problem,
                                                 const PenaltyConfig& config);

// Refuses (std::logic_error) unless P_d = P_p^{-1} holds on every incident
// edge; in that regime it coincides with lambda_update_via_w(x_new).
std::vector<Eigen::VectorXd> lambda_update_simplified(int node, const Eigen::VectorXd& x_new,
                                                      const IterateState& state,
                                                      const GraphProblem& problem,
                                                      const PenaltyConfig& config);

// Direct dual minimization through f_i^*. Quadratic oracles are solved in
// closed form (a per-node linear system); other oracles must be scalar
// (n_i = n_ij = 1) and are solved by a bracketed 1-D search over
// y = sum_j A_i^T lambda_{i|j}. Requires the oracle to ship a conjugate.
std::vector<Eigen::VectorXd> lambda_update_via_conjugate(int node, const IterateState& state,
                                                         const GraphProblem& problem,
                                                         const PenaltyConfig& config);

// --- Simulator ---------------------------------------------------------------
//
// Drives full runs: schedule -> node updates -> transport -> neighbor views.
// Owned state is the ground truth; each node reads its possibly stale views,
// so transmission loss degrades information, never consistency. The problem
// and penalty config must outlive the simulator.
class Simulator {
 public:
  struct Options {
    LambdaPath lambda_path = LambdaPath::kViaW;
    bool record_delivery_log = false;
  };

  Simulator(const GraphProblem& problem, const PenaltyConfig& config, Schedule schedule,
            TransportModel transport, IterateState init, Options options);
  Simulator(const GraphProblem& problem, const PenaltyConfig& config, Schedule schedule,
            TransportModel transport, IterateState init)
      : Simulator(problem, config, schedule, transport, std::move(init), Options{}) {}

  void step();
  void run(long iterations);

  const IterateState& state() const { return state_; }
  const NeighborViews& views() const { return views_; }
  long transmissions() const { return transport_.transmissions(); }
  const std::vector<DeliveryRecord>& delivery_log() const { return transport_.log(); }

 private:
  struct NodeResult {
    Eigen::VectorXd x;
    Eigen::VectorXd w;
    std::vector<Eigen::VectorXd> lambda;  // ascending neighbor order
  };

  NodeResult compute_node(int node) const;
  void commit(int node, NodeResult& result);
  void send(int node, const NodeResult& result, const IterateState& receiver_round_k);

  const GraphProblem* problem_;
  const PenaltyConfig* config_;
  Schedule schedule_;
  ScheduleDriver driver_;
  Transport transport_;
  Options options_;
  IterateState state_;
  NeighborViews views_;
};

}  // namespace pdmm

#endif  // PDMM_ENGINE_HPP_
