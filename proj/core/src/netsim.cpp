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

#include "pdmm/netsim.hpp"

#include <ostream>
#include <stdexcept>

#include "pdmm/linalg.hpp"
#include "pdmm/updates.hpp"

namespace pdmm {

void validate_transport(const TransportModel& model) {
  if (model.loss_probability < 0.0 || model.loss_probability > 1.0) {
    throw std::invalid_argument("transport: loss probability must lie in [0, 1]");
  }
  if (model.mode == TransportModel::Mode::kBroadcast && model.loss_probability != 0.0) {
    throw std::invalid_argument("transport: broadcast requires a lossless channel");
  }
}

long count_transmissions(const std::vector<DeliveryRecord>& log) {
  return static_cast<long>(log.size());
}

void write_delivery_log(std::ostream& out, const std::vector<DeliveryRecord>& log) {
  for (const DeliveryRecord& rec : log) {
    out << "{\"iter\":" << rec.iteration << ",\"sender\":" << (rec.sender + 1)
        << ",\"receiver\":" << (rec.receiver == kAllNeighbors ? 0 : rec.receiver + 1)
        << ",\"delivered\":" << (rec.delivered ? "true" : "false") << "}\n";
  }
}

NeighborViews views_from_state(const GraphProblem& problem, const IterateState& state) {
  NeighborViews views;
  const int n = problem.topology.directed_count();
  views.x.reserve(n);
  views.lambda.reserve(n);
  views.w.reserve(n);
  for (int d = 0; d < n; ++d) {
    const int owner = problem.topology.owner_of(d);
    views.x.push_back(state.x[owner]);
    views.lambda.push_back(state.lambda[d]);
    views.w.push_back(state.x[owner]);
  }
  return views;
}

Transport::Transport(TransportModel model, const GraphProblem& problem,
                     const PenaltyConfig& config, bool record_log)
    : model_(model), problem_(&problem), config_(&config), rng_(model.rng_seed),
      record_log_(record_log) {
  validate_transport(model_);
}

void Transport::send_point_to_point(long iteration, int sender,
                                    const Eigen::VectorXd& new_x,
                                    const std::vector<Eigen::VectorXd>& new_lambda,
                                    NeighborViews& views) {
  const auto& neighbors = problem_->topology.neighbors(sender);
  if (new_lambda.size() != neighbors.size()) {
    throw std::invalid_argument("transport: one lambda block per neighbor expected");
  }
  for (std::size_t idx = 0; idx < neighbors.size(); ++idx) {
    const int j = neighbors[idx];
    const bool delivered =
        model_.loss_probability == 0.0 || !bernoulli(rng_, model_.loss_probability);
    ++transmissions_;
    if (record_log_) log_.push_back({iteration, sender, j, delivered});
    if (!delivered) continue;  // receiver keeps its stale copy
    const int d = problem_->topology.directed_index(sender, j);
    views.x[d] = new_x;
    views.lambda[d] = new_lambda[idx];
  }
}

void Transport::send_broadcast(long iteration, int sender, const Eigen::VectorXd& new_x,
                               const Eigen::VectorXd& w,
                               const IterateState& receiver_round_k, bool simplified_map,
                               NeighborViews& views) {
  ++transmissions_;
  if (record_log_) log_.push_back({iteration, sender, kAllNeighbors, true});
  for (int j : problem_->topology.neighbors(sender)) {
    const int e = problem_->topology.edge_index(sender, j);
    const int d = problem_->topology.directed_index(sender, j);
    const int d_back = problem_->topology.directed_index(j, sender);
    views.x[d] = new_x;
    views.w[d] = w;
    // Node j rebuilds lambda_{sender|j} from the broadcast w and its own
    // round-k values; on a lossless channel this equals the sender's value
    // bit for bit.
    const EdgeConstraint& con = problem_->constraints[e];
    const EdgePenalty& pen = config_->edges[e];
    const bool owner_is_lower = sender == problem_->topology.edges()[e].i;
    views.lambda[d] =
        simplified_map
            ? dual_map_simplified(con, pen, owner_is_lower,
                                  receiver_round_k.lambda[d_back],
                                  receiver_round_k.x[j], w)
            : dual_map_via_w(con, pen, owner_is_lower, receiver_round_k.lambda[d_back],
                             receiver_round_k.x[j], w);
  }
}

}  // namespace pdmm
