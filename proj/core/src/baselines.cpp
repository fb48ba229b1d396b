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

#include "pdmm/baselines.hpp"

#include <stdexcept>
#include <utility>
#include <vector>

#include "pdmm/linalg.hpp"

namespace pdmm {

ScalarAveragingState scalar_averaging_init(const GraphTopology& topology,
                                           const Eigen::VectorXd& x0) {
  if (x0.size() != topology.node_count()) {
    throw std::invalid_argument("scalar_averaging_init: x0 length mismatch");
  }
  ScalarAveragingState state;
  state.x = x0;
  state.lambda = Eigen::VectorXd::Zero(topology.directed_count());
  state.u = Eigen::VectorXd::Zero(topology.directed_count());
  state.z = Eigen::VectorXd::Zero(topology.edge_count());
  for (int e = 0; e < topology.edge_count(); ++e) {
    const Edge& edge = topology.edges()[e];
    state.z[e] = 0.5 * (x0[edge.i] + x0[edge.j]);
  }
  return state;
}

double edge_sign(const GraphTopology& topology, int edge, int node) {
  const Edge& e = topology.edges()[edge];
  if (node == e.i) return 1.0;
  if (node == e.j) return -1.0;
  throw std::invalid_argument("edge_sign: node is not an endpoint");
}

// --- PDMM recursions ----------------------------------------------------------

double pdmm_avg_x(int node, const ScalarAveragingState& state, const Eigen::VectorXd& t,
                  double gamma_p, const GraphTopology& topology) {
  double num = 0.0;
  double den = 0.0;
  for (int j : topology.neighbors(node)) {
    const int e = topology.edge_index(node, j);
    const int d_in = topology.directed_index(j, node);
    num += gamma_p * state.x[j] + edge_sign(topology, e, node) * state.lambda[d_in];
    den += gamma_p;
  }
  return (num + t[node]) / (1.0 + den);
}

double pdmm_avg_w(int node, const ScalarAveragingState& state, const Eigen::VectorXd& t,
                  double gamma_d, const GraphTopology& topology) {
  double num = 0.0;
  for (int j : topology.neighbors(node)) {
    const int e = topology.edge_index(node, j);
    const int d_in = topology.directed_index(j, node);
    num += state.x[j] + gamma_d * edge_sign(topology, e, node) * state.lambda[d_in];
  }
  return (num + gamma_d * t[node]) /
         (static_cast<double>(topology.degree(node)) + gamma_d);
}

double pdmm_avg_lambda(int directed, const ScalarAveragingState& state, double w_owner,
                       double gamma_d, const GraphTopology& topology) {
  const int e = directed / 2;
  const int owner = topology.owner_of(directed);
  const int neighbor = topology.neighbor_of(directed);
  const int d_in = GraphTopology::reverse(directed);
  const double residual = edge_sign(topology, e, neighbor) * state.x[neighbor] +
                          edge_sign(topology, e, owner) * w_owner;
  return state.lambda[d_in] - residual / gamma_d;
}

void pdmm_avg_activate(ScalarAveragingState& state, int node, const Eigen::VectorXd& t,
                       double gamma_p, double gamma_d, const GraphTopology& topology) {
  const double x_new = pdmm_avg_x(node, state, t, gamma_p, topology);
  const double w = pdmm_avg_w(node, state, t, gamma_d, topology);
  std::vector<std::pair<int, double>> fresh;
  fresh.reserve(topology.degree(node));
  for (int j : topology.neighbors(node)) {
    const int d_out = topology.directed_index(node, j);
    fresh.emplace_back(d_out, pdmm_avg_lambda(d_out, state, w, gamma_d, topology));
  }
  state.x[node] = x_new;
  for (const auto& [d_out, value] : fresh) state.lambda[d_out] = value;
}

void pdmm_avg_sync_round(ScalarAveragingState& state, const Eigen::VectorXd& t,
                         double gamma_p, double gamma_d, const GraphTopology& topology) {
  const ScalarAveragingState round_k = state;
  for (int i = 0; i < topology.node_count(); ++i) {
    state.x[i] = pdmm_avg_x(i, round_k, t, gamma_p, topology);
    const double w = pdmm_avg_w(i, round_k, t, gamma_d, topology);
    for (int j : topology.neighbors(i)) {
      const int d_out = topology.directed_index(i, j);
      state.lambda[d_out] = pdmm_avg_lambda(d_out, round_k, w, gamma_d, topology);
    }
  }
}

// --- Gossip baselines -----------------------------------------------------------

void gossip_step(ScalarAveragingState& state, int edge, const GraphTopology& topology) {
  const Edge& e = topology.edges()[edge];
  const double mid = (state.x[e.i] + state.x[e.j]) * 0.5;
  state.x[e.i] = mid;
  state.x[e.j] = mid;
}

void broadcast_step(ScalarAveragingState& state, int node, double gamma_b,
                    const GraphTopology& topology) {
  if (gamma_b <= 0.0 || gamma_b >= 1.0) {
    throw std::invalid_argument("broadcast_step: mixing weight must lie in (0, 1)");
  }
  const double spoken = state.x[node];
  for (int j : topology.neighbors(node)) {
    state.x[j] = gamma_b * state.x[j] + (1.0 - gamma_b) * spoken;
  }
}

// --- Consensus ADMM ---------------------------------------------------------------

namespace {

double admm_x(int node, const ScalarAveragingState& state, const Eigen::VectorXd& t,
              double rho, const GraphTopology& topology) {
  double acc = 0.0;
  for (int j : topology.neighbors(node)) {
    const int e = topology.edge_index(node, j);
    const int d = topology.directed_index(node, j);
    acc += state.z[e] - state.u[d];
  }
  return (t[node] + rho * acc) / (1.0 + rho * static_cast<double>(topology.degree(node)));
}

double admm_z(int edge, const ScalarAveragingState& state, const GraphTopology& topology) {
  const Edge& e = topology.edges()[edge];
  return 0.5 * (state.x[e.i] + state.x[e.j] + state.u[2 * edge] + state.u[2 * edge + 1]);
}

}  // namespace

void admm_avg_sync_round(ScalarAveragingState& state, const Eigen::VectorXd& t, double rho,
                         const GraphTopology& topology) {
  if (rho <= 0.0) throw std::invalid_argument("admm: rho must be positive");
  Eigen::VectorXd x_new(topology.node_count());
  for (int i = 0; i < topology.node_count(); ++i) {
    x_new[i] = admm_x(i, state, t, rho, topology);
  }
  state.x = std::move(x_new);
  for (int e = 0; e < topology.edge_count(); ++e) state.z[e] = admm_z(e, state, topology);
  for (int e = 0; e < topology.edge_count(); ++e) {
    const Edge& edge = topology.edges()[e];
    state.u[2 * e] += state.x[edge.i] - state.z[e];
    state.u[2 * e + 1] += state.x[edge.j] - state.z[e];
  }
}

void admm_avg_edge_step(ScalarAveragingState& state, int edge, const Eigen::VectorXd& t,
                        double rho, const GraphTopology& topology) {
  if (rho <= 0.0) throw std::invalid_argument("admm: rho must be positive");
  const Edge& e = topology.edges()[edge];
  state.x[e.i] = admm_x(e.i, state, t, rho, topology);
  state.x[e.j] = admm_x(e.j, state, t, rho, topology);
  state.z[edge] = admm_z(edge, state, topology);
  state.u[2 * edge] += state.x[e.i] - state.z[edge];
  state.u[2 * edge + 1] += state.x[e.j] - state.z[edge];
}

Eigen::VectorXd admm_fixed_point_u(const GraphTopology& topology, const Eigen::VectorXd& t,
                                   double rho) {
  if (rho <= 0.0) throw std::invalid_argument("admm: rho must be positive");
  std::vector<std::pair<int, int>> edges;
  edges.reserve(topology.edge_count());
  for (const Edge& e : topology.edges()) edges.emplace_back(e.i, e.j);
  const Eigen::VectorXd r = (t.array() - t.mean()) / rho;
  const Eigen::VectorXd flow = solve_incidence_flow(topology.node_count(), edges, r);
  Eigen::VectorXd u(topology.directed_count());
  for (int e = 0; e < topology.edge_count(); ++e) {
    u[2 * e] = flow[e];
    u[2 * e + 1] = -flow[e];
  }
  return u;
}

}  // namespace pdmm
