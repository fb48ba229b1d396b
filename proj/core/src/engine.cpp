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

#include "pdmm/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pdmm/linalg.hpp"
#include "pdmm/updates.hpp"

namespace pdmm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Round-k values node i needs from neighbor j, no matter where they live
// (global state or per-node views).
struct NeighborInput {
  int neighbor;
  int edge;
  const Eigen::VectorXd* x;          // x_j
  const Eigen::VectorXd* lambda_in;  // lambda_{j|i}
};

std::vector<NeighborInput> gather_from_state(int node, const IterateState& state,
                                             const GraphProblem& problem) {
  std::vector<NeighborInput> in;
  const auto& neighbors = problem.topology.neighbors(node);
  in.reserve(neighbors.size());
  for (int j : neighbors) {
    const int e = problem.topology.edge_index(node, j);
    const int d_in = problem.topology.directed_index(j, node);
    in.push_back({j, e, &state.x[j], &state.lambda[d_in]});
  }
  return in;
}

std::vector<NeighborInput> gather_from_views(int node, const NeighborViews& views,
                                             const GraphProblem& problem) {
  std::vector<NeighborInput> in;
  const auto& neighbors = problem.topology.neighbors(node);
  in.reserve(neighbors.size());
  for (int j : neighbors) {
    const int e = problem.topology.edge_index(node, j);
    const int d_in = problem.topology.directed_index(j, node);
    in.push_back({j, e, &views.x[d_in], &views.lambda[d_in]});
  }
  return in;
}

// Shared quadratic assembly of the two primal minimizations. `use_pd_inverse`
// selects the w-subproblem metric P_d^{-1}, otherwise P_p.
Eigen::VectorXd solve_primal(int node, const std::vector<NeighborInput>& in,
                             const GraphProblem& problem, const PenaltyConfig& config,
                             bool use_pd_inverse) {
  const int n = problem.dims[node];
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  for (const NeighborInput& nb : in) {
    const EdgeConstraint& con = problem.constraints[nb.edge];
    const EdgePenalty& pen = config.edges[nb.edge];
    const Eigen::MatrixXd& metric = use_pd_inverse ? pen.pd_inv : pen.pp;
    const Eigen::MatrixXd& a_own = problem.a_of(nb.edge, node);
    const Eigen::MatrixXd& a_nbr = problem.a_other(nb.edge, node);
    q.noalias() += a_own.transpose() * metric * a_own;
    b.noalias() += a_own.transpose() * (metric * (con.c - a_nbr * (*nb.x)) + *nb.lambda_in);
  }
  return problem.node_functions[node]->solve_regularized(q, b);
}

std::vector<Eigen::VectorXd> map_duals(int node, const Eigen::VectorXd& point,
                                       const std::vector<NeighborInput>& in,
                                       const GraphProblem& problem,
                                       const PenaltyConfig& config, bool simplified) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(in.size());
  for (const NeighborInput& nb : in) {
    const EdgeConstraint& con = problem.constraints[nb.edge];
    const EdgePenalty& pen = config.edges[nb.edge];
    const bool owner_is_lower = node == problem.topology.edges()[nb.edge].i;
    out.push_back(simplified
                      ? dual_map_simplified(con, pen, owner_is_lower, *nb.lambda_in,
                                            *nb.x, point)
                      : dual_map_via_w(con, pen, owner_is_lower, *nb.lambda_in, *nb.x,
                                       point));
  }
  return out;
}

void require_inverse_pair(int node, const std::vector<NeighborInput>& in,
                          const PenaltyConfig& config) {
  for (const NeighborInput& nb : in) {
    if (!config.edges[nb.edge].dp_zero) {
      throw std::logic_error(
          "lambda_update_simplified: P_d != P_p^{-1} on an incident edge; "
          "use the w-based update instead");
    }
  }
}

// Closed-form dual minimization for f(x) = 1/2||x - t||^2: the subproblem is
// an unconstrained strongly convex quadratic in the stacked lambda_i.
std::vector<Eigen::VectorXd> conjugate_duals_quadratic(
    int node, const Eigen::VectorXd& target, const std::vector<NeighborInput>& in,
    const GraphProblem& problem, const PenaltyConfig& config) {
  int rows = 0;
  for (const NeighborInput& nb : in) rows += problem.constraint_dim(nb.edge);
  const int n = problem.dims[node];

  Eigen::MatrixXd stacked_a(rows, n);
  Eigen::VectorXd rhs(rows);
  int offset = 0;
  for (const NeighborInput& nb : in) {
    const EdgeConstraint& con = problem.constraints[nb.edge];
    const EdgePenalty& pen = config.edges[nb.edge];
    const int n_ij = con.constraint_dim();
    const Eigen::MatrixXd& a_own = problem.a_of(nb.edge, node);
    const Eigen::MatrixXd& a_nbr = problem.a_other(nb.edge, node);
    stacked_a.middleRows(offset, n_ij) = a_own;
    rhs.segment(offset, n_ij) =
        pen.pd * (*nb.lambda_in) - (a_nbr * (*nb.x) - con.c) - a_own * target;
    offset += n_ij;
  }

  Eigen::MatrixXd h = stacked_a * stacked_a.transpose();
  offset = 0;
  for (const NeighborInput& nb : in) {
    const int n_ij = problem.constraint_dim(nb.edge);
    h.block(offset, offset, n_ij, n_ij) += config.edges[nb.edge].pd;
    offset += n_ij;
  }

  const Eigen::VectorXd solution = h.ldlt().solve(rhs);
  std::vector<Eigen::VectorXd> out;
  out.reserve(in.size());
  offset = 0;
  for (const NeighborInput& nb : in) {
    const int n_ij = problem.constraint_dim(nb.edge);
    out.push_back(solution.segment(offset, n_ij));
    offset += n_ij;
  }
  return out;
}

// Scalar conjugate path: eliminate lambda_i against y = sum_j a_j lambda_j,
// leaving phi(y) = kappa/2 (y - y0)^2 + f*(y), minimized by golden section.
std::vector<Eigen::VectorXd> conjugate_duals_scalar(int node,
                                                    const std::vector<NeighborInput>& in,
                                                    const GraphProblem& problem,
                                                    const PenaltyConfig& config) {
  const NodeFunction& f = *problem.node_functions[node];
  const std::size_t deg = in.size();
  std::vector<double> gamma(deg), a(deg), mu(deg), beta(deg);
  double s2 = 0.0, y0 = 0.0;
  for (std::size_t k = 0; k < deg; ++k) {
    const NeighborInput& nb = in[k];
    const EdgeConstraint& con = problem.constraints[nb.edge];
    gamma[k] = config.edges[nb.edge].pd(0, 0);
    a[k] = problem.a_of(nb.edge, node)(0, 0);
    mu[k] = (*nb.lambda_in)[0];
    beta[k] = (problem.a_other(nb.edge, node) * (*nb.x))(0) - con.c[0];
    s2 += a[k] * a[k] / gamma[k];
    y0 += a[k] * mu[k] - a[k] * beta[k] / gamma[k];
  }

  auto build = [&](double nu) {
    std::vector<Eigen::VectorXd> out;
    out.reserve(deg);
    for (std::size_t k = 0; k < deg; ++k) {
      Eigen::VectorXd block(1);
      block[0] = mu[k] - (beta[k] + a[k] * nu) / gamma[k];
      out.push_back(std::move(block));
    }
    return out;
  };

  if (s2 == 0.0) return build(0.0);  // y is fixed; lambda decouples

  const double kappa = 1.0 / s2;
  Eigen::VectorXd y_vec(1);
  auto phi = [&](double y) {
    y_vec[0] = y;
    const double conj = f.conjugate(y_vec);
    if (!std::isfinite(conj)) return kInf;
    const double dy = y - y0;
    return 0.5 * kappa * dy * dy + conj;
  };

  // Finite anchor: y = 0 works for every shipped conjugate; probe outward
  // otherwise.
  double anchor = 0.0;
  if (!std::isfinite(phi(anchor))) {
    const double scale = std::max(1.0, std::abs(y0));
    bool found = false;
    for (int k = -30; k <= 30 && !found; ++k) {
      for (double sign : {1.0, -1.0}) {
        const double candidate = sign * scale * std::ldexp(1.0, k);
        if (std::isfinite(phi(candidate))) {
          anchor = candidate;
          found = true;
          break;
        }
      }
    }
    if (!found) {
      throw std::domain_error("lambda_update_via_conjugate: empty conjugate domain");
    }
  }

  // Bracket the minimum around the anchor.
  double step = std::max(1.0, std::abs(y0) + std::abs(anchor));
  double lo = anchor - step;
  double hi = anchor + step;
  double f_anchor = phi(anchor);
  for (int grow = 0; grow < 80; ++grow) {
    const bool lo_ok = phi(lo) >= f_anchor;
    const bool hi_ok = phi(hi) >= f_anchor;
    if (lo_ok && hi_ok) break;
    step *= 2.0;
    if (!lo_ok) lo = anchor - step;
    if (!hi_ok) hi = anchor + step;
  }

  // Golden section around the best finite probe. Ties (both probes infinite
  // outside the conjugate domain) shrink toward that point so the feasible
  // region is never discarded.
  constexpr double kGolden = 0.6180339887498949;
  double best_x = anchor;
  double best_f = f_anchor;
  auto consider = [&](double x, double f) {
    if (f < best_f) {
      best_f = f;
      best_x = x;
    }
  };
  double x1 = hi - kGolden * (hi - lo);
  double x2 = lo + kGolden * (hi - lo);
  double f1 = phi(x1);
  double f2 = phi(x2);
  consider(x1, f1);
  consider(x2, f2);
  for (int it = 0; it < 240 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo) + std::abs(hi));
       ++it) {
    const bool keep_lower =
        f1 < f2 || (f1 == f2 && std::abs(x1 - best_x) <= std::abs(x2 - best_x));
    if (keep_lower) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kGolden * (hi - lo);
      f1 = phi(x1);
      consider(x1, f1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kGolden * (hi - lo);
      f2 = phi(x2);
      consider(x2, f2);
    }
  }
  double y_star = 0.5 * (lo + hi);
  if (!(phi(y_star) <= best_f)) y_star = best_x;
  return build(kappa * (y0 - y_star));
}

std::vector<Eigen::VectorXd> conjugate_duals(int node, const std::vector<NeighborInput>& in,
                                             const GraphProblem& problem,
                                             const PenaltyConfig& config) {
  const NodeFunction& f = *problem.node_functions[node];
  if (!f.has_conjugate()) {
    throw std::logic_error("lambda_update_via_conjugate: oracle has no conjugate");
  }
  if (in.empty()) return {};
  if (const Eigen::VectorXd* target = f.quadratic_target()) {
    return conjugate_duals_quadratic(node, *target, in, problem, config);
  }
  if (problem.dims[node] != 1) {
    throw std::logic_error(
        "lambda_update_via_conjugate: non-quadratic oracles are supported for "
        "scalar nodes only");
  }
  for (const NeighborInput& nb : in) {
    if (problem.constraint_dim(nb.edge) != 1) {
      throw std::logic_error(
          "lambda_update_via_conjugate: non-quadratic oracles require scalar "
          "edge constraints");
    }
  }
  return conjugate_duals_scalar(node, in, problem, config);
}

}  // namespace

// --- ScheduleDriver ----------------------------------------------------------

ScheduleDriver::ScheduleDriver(Schedule schedule, const GraphTopology& topology)
    : schedule_(schedule), topology_(&topology), rng_(schedule.rng_seed) {
  if (schedule.kind == ScheduleKind::kTwoNodeRandomEdge && topology.edge_count() == 0) {
    throw std::invalid_argument("schedule: two-node activation needs at least one edge");
  }
}

std::vector<int> ScheduleDriver::active_nodes(long iteration) {
  const int m = topology_->node_count();
  switch (schedule_.kind) {
    case ScheduleKind::kSynchronous: {
      std::vector<int> all(m);
      for (int i = 0; i < m; ++i) all[i] = i;
      return all;
    }
    case ScheduleKind::kCyclicAsync:
      return {static_cast<int>(iteration % m)};
    case ScheduleKind::kRandomNode:
      return {static_cast<int>(uniform_index(rng_, m))};
    case ScheduleKind::kTwoNodeRandomEdge: {
      const Edge& e =
          topology_->edges()[uniform_index(rng_, topology_->edge_count())];
      return {e.i, e.j};  // lower index first
    }
  }
  throw std::logic_error("schedule: unknown kind");
}

// --- Free update operations ---------------------------------------------------

Eigen::VectorXd x_update(int node, const IterateState& state, const GraphProblem& problem,
                         const PenaltyConfig& config) {
  return solve_primal(node, gather_from_state(node, state, problem), problem, config,
                      /*use_pd_inverse=*/false);
}

Eigen::VectorXd w_update(int node, const IterateState& state, const GraphProblem& problem,
                         const PenaltyConfig& config) {
  return solve_primal(node, gather_from_state(node, state, problem), problem, config,
                      /*use_pd_inverse=*/true);
}

std::vector<Eigen::VectorXd> lambda_update_via_w(int node, const Eigen::VectorXd& w,
                                                 const IterateState& state,
                                                 const GraphProblem& problem,
                                                 const PenaltyConfig& config) {
  return map_duals(node, w, gather_from_state(node, state, problem), problem, config,
                   /*simplified=*/false);
}

std::vector<Eigen::VectorXd> lambda_update_simplified(int node, const Eigen::VectorXd& x_new,
                                                      const IterateState& state,
                                                      const GraphProblem& problem,
                                                      const PenaltyConfig& config) {
  const auto in = gather_from_state(node, state, problem);
  require_inverse_pair(node, in, config);
  return map_duals(node, x_new, in, problem, config, /*simplified=*/true);
}

std::vector<Eigen::VectorXd> lambda_update_via_conjugate(int node, const IterateState& state,
                                                         const GraphProblem& problem,
                                                         const PenaltyConfig& config) {
  return conjugate_duals(node, gather_from_state(node, state, problem), problem, config);
}

// --- Simulator -----------------------------------------------------------------

Simulator::Simulator(const GraphProblem& problem, const PenaltyConfig& config,
                     Schedule schedule, TransportModel transport, IterateState init,
                     Options options)
    : problem_(&problem),
      config_(&config),
      schedule_(schedule),
      driver_(schedule, problem.topology),
      transport_(transport, problem, config, options.record_delivery_log),
      options_(options),
      state_(std::move(init)) {
  const ValidationReport report = validate_problem(problem);
  if (!report.ok) {
    throw std::invalid_argument("simulator: invalid problem: " + report.violations.front());
  }
  if (static_cast<int>(config.edges.size()) != problem.topology.edge_count()) {
    throw std::invalid_argument("simulator: penalty config does not match the problem");
  }
  if (static_cast<int>(state_.x.size()) != problem.topology.node_count() ||
      static_cast<int>(state_.lambda.size()) != problem.topology.directed_count()) {
    throw std::invalid_argument("simulator: initial state does not match the problem");
  }
  if (options_.lambda_path == LambdaPath::kSimplified) {
    if (!check_condition(config).delta_zero) {
      throw std::invalid_argument(
          "simulator: the single-minimization path needs P_d = P_p^{-1}");
    }
  }
  if (options_.lambda_path == LambdaPath::kViaConjugate &&
      transport.mode == TransportModel::Mode::kBroadcast) {
    throw std::invalid_argument(
        "simulator: the conjugate path has no broadcast form; use point-to-point");
  }
  views_ = views_from_state(problem, state_);
}

Simulator::NodeResult Simulator::compute_node(int node) const {
  const auto in = gather_from_views(node, views_, *problem_);
  NodeResult result;
  result.x = solve_primal(node, in, *problem_, *config_, /*use_pd_inverse=*/false);
  switch (options_.lambda_path) {
    case LambdaPath::kViaW:
      result.w = solve_primal(node, in, *problem_, *config_, /*use_pd_inverse=*/true);
      result.lambda = map_duals(node, result.w, in, *problem_, *config_, false);
      break;
    case LambdaPath::kSimplified:
      require_inverse_pair(node, in, *config_);
      result.w = result.x;
      result.lambda = map_duals(node, result.x, in, *problem_, *config_, true);
      break;
    case LambdaPath::kViaConjugate:
      result.w = result.x;
      result.lambda = conjugate_duals(node, in, *problem_, *config_);
      break;
  }
  return result;
}

void Simulator::commit(int node, NodeResult& result) {
  state_.x[node] = result.x;
  const auto& neighbors = problem_->topology.neighbors(node);
  for (std::size_t idx = 0; idx < neighbors.size(); ++idx) {
    state_.lambda[problem_->topology.directed_index(node, neighbors[idx])] =
        result.lambda[idx];
  }
}

void Simulator::send(int node, const NodeResult& result,
                     const IterateState& receiver_round_k) {
  if (transport_.model().mode == TransportModel::Mode::kBroadcast) {
    transport_.send_broadcast(state_.iteration, node, result.x, result.w,
                              receiver_round_k,
                              options_.lambda_path == LambdaPath::kSimplified, views_);
  } else {
    transport_.send_point_to_point(state_.iteration, node, result.x, result.lambda,
                                   views_);
  }
}

void Simulator::step() {
  const std::vector<int> active = driver_.active_nodes(state_.iteration);

  if (schedule_.kind == ScheduleKind::kSynchronous ||
      schedule_.kind == ScheduleKind::kTwoNodeRandomEdge) {
    // Parallel semantics: compute everything from round-k views, then commit,
    // then exchange. Receivers reconstruct against their round-k state.
    const IterateState round_k = state_;
    std::vector<NodeResult> results(active.size());
    for (std::size_t idx = 0; idx < active.size(); ++idx) {
      results[idx] = compute_node(active[idx]);
    }
    for (std::size_t idx = 0; idx < active.size(); ++idx) {
      commit(active[idx], results[idx]);
    }
    for (std::size_t idx = 0; idx < active.size(); ++idx) {
      send(active[idx], results[idx], round_k);
    }
  } else {
    // Single-node activation: receivers were not touched this tick, so the
    // current state carries their round-k values.
    const int node = active.front();
    NodeResult result = compute_node(node);
    commit(node, result);
    send(node, result, state_);
  }

  ++state_.iteration;
}

void Simulator::run(long iterations) {
  for (long k = 0; k < iterations; ++k) step();
}

}  // namespace pdmm
