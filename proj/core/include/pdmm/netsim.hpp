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

#ifndef PDMM_NETSIM_HPP_
#define PDMM_NETSIM_HPP_

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "pdmm/graph.hpp"
#include "pdmm/penalty.hpp"
#include "pdmm/state.hpp"

namespace pdmm {

// How node updates travel to neighbors.
//
// Point-to-point: each directed link carries one packet (x and the
// link-specific lambda together) and is lost independently with
// loss_probability. Broadcast: one reliable message (x, w) fans out to all
// neighbors, which reconstruct the lambda update locally; broadcast therefore
// requires a lossless channel.
struct TransportModel {
  enum class Mode { kBroadcast, kPointToPoint };

  Mode mode = Mode::kPointToPoint;
  double loss_probability = 0.0;
  std::uint64_t rng_seed = 0;
};

// Throws std::invalid_argument when loss_probability is outside [0, 1] or a
// lossy broadcast is requested.
void validate_transport(const TransportModel& model);

// One physical transmission. For broadcast sends receiver is kAllNeighbors;
// ids are 0-based here and 1-based in the JSON export.
inline constexpr int kAllNeighbors = -1;

struct DeliveryRecord {
  long iteration = 0;
  int sender = 0;
  int receiver = kAllNeighbors;
  bool delivered = true;
};

// Number of physical channel uses: one per point-to-point link use, one per
// broadcast activation.
long count_transmissions(const std::vector<DeliveryRecord>& log);

// JSON lines {"iter":..,"sender":..,"receiver":..,"delivered":..}; broadcast
// records carry receiver 0.
void write_delivery_log(std::ostream& out, const std::vector<DeliveryRecord>& log);

// Receiver-side copies, indexed by directed edge [owner|neighbor]: entry d
// holds what neighbor_of(d) last received of owner_of(d)'s x and lambda (and
// w under broadcast). Views change only on successful delivery; a lost packet
// leaves the stale copy in place.
struct NeighborViews {
  std::vector<Eigen::VectorXd> x;
  std::vector<Eigen::VectorXd> lambda;
  std::vector<Eigen::VectorXd> w;
};

// Views everyone would hold after a lossless exchange of `state` (also the
// correct initialization: the initial estimates are globally known).
NeighborViews views_from_state(const GraphProblem& problem, const IterateState& state);

// Delivery engine: owns the loss RNG stream and the delivery log. The loss
// stream is independent of any schedule randomness by construction.
class Transport {
 public:
  Transport(TransportModel model, const GraphProblem& problem, const PenaltyConfig& config,
            bool record_log);

  // Sends sender's fresh (x, lambda) over each incident link, neighbors in
  // ascending order; drops each link independently. new_lambda holds one
  // block per neighbor in ascending order.
  void send_point_to_point(long iteration, int sender, const Eigen::VectorXd& new_x,
                           const std::vector<Eigen::VectorXd>& new_lambda,
                           NeighborViews& views);

  // Broadcasts (x, w); every neighbor j reconstructs lambda_{sender|j} from w
  // and its own round-k values, supplied via receiver_round_k. The
  // reconstruction applies the same dual map the sender used: the P_d^{-1}
  // map, or the P_p map of the single-minimization regime when
  // simplified_map is set (then w is the new x itself).
  void send_broadcast(long iteration, int sender, const Eigen::VectorXd& new_x,
                      const Eigen::VectorXd& w, const IterateState& receiver_round_k,
                      bool simplified_map, NeighborViews& views);

  const TransportModel& model() const { return model_; }
  long transmissions() const { return transmissions_; }
  const std::vector<DeliveryRecord>& log() const { return log_; }

 private:
  TransportModel model_;
  const GraphProblem* problem_;
  const PenaltyConfig* config_;
  std::mt19937_64 rng_;
  long transmissions_ = 0;
  bool record_log_ = false;
  std::vector<DeliveryRecord> log_;
};

}  // namespace pdmm

#endif  // PDMM_NETSIM_HPP_
