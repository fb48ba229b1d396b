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

#include "pdmm/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "pdmm/linalg.hpp"

namespace pdmm {

namespace {

void require_conjugates(const GraphProblem& problem) {
  for (const auto& f : problem.node_functions) {
    if (!f->has_conjugate()) {
      throw std::logic_error("diagnostics: missing conjugate on a node oracle");
    }
  }
}

void require_condition(const PenaltyConfig& config, const char* where) {
  for (const EdgePenalty& pen : config.edges) {
    if (!pen.dp_psd) {
      throw std::logic_error(std::string(where) +
                             ": penalty config violates P_d >= P_p^{-1}");
    }
  }
}

// sum_j A_{i,e}^T lambda_{i|j} over the neighbors of i.
Eigen::VectorXd stacked_dual_image(int node, const std::vector<Eigen::VectorXd>& lambda,
                                   const GraphProblem& problem) {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(problem.dims[node]);
  for (int j : problem.topology.neighbors(node)) {
    const int e = problem.topology.edge_index(node, j);
    const int d = problem.topology.directed_index(node, j);
    y.noalias() += problem.a_of(e, node).transpose() * lambda[d];
  }
  return y;
}

}  // namespace

// --- Certificates -----------------------------------------------------------

SaddleCertificate averaging_certificate(const GraphProblem& problem,
                                        const Eigen::VectorXd& t) {
  const int m = problem.topology.node_count();
  if (t.size() != m) {
    throw std::invalid_argument("averaging_certificate: t length mismatch");
  }
  for (int d : problem.dims) {
    if (d != 1) {
      throw std::invalid_argument("averaging_certificate: scalar node variables required");
    }
  }
  const double t_ave = t.mean();

  SaddleCertificate cert;
  cert.x_star.assign(m, Eigen::VectorXd::Constant(1, t_ave));

  // Stationarity pins only the per-node sums sum_j A_ij delta_ij = x*_i - t_i;
  // any flow solving the incidence system works.
  std::vector<std::pair<int, int>> edges;
  edges.reserve(problem.topology.edge_count());
  for (const Edge& e : problem.topology.edges()) edges.emplace_back(e.i, e.j);
  const Eigen::VectorXd flow =
      solve_incidence_flow(m, edges, Eigen::VectorXd::Constant(m, t_ave) - t);

  cert.delta_star.reserve(problem.topology.edge_count());
  for (int e = 0; e < problem.topology.edge_count(); ++e) {
    cert.delta_star.push_back(Eigen::VectorXd::Constant(1, flow[e]));
  }
  return cert;
}

SaddleCertificate hinge_certificate(double point) {
  if (point < -1.0 || point > 1.0) {
    throw std::invalid_argument("hinge_certificate: point must lie in [-1, 1]");
  }
  SaddleCertificate cert;
  cert.x_star.assign(2, Eigen::VectorXd::Constant(1, point));
  cert.delta_star.assign(1, Eigen::VectorXd::Zero(1));
  return cert;
}

ValidationReport check_certificate(const SaddleCertificate& certificate,
                                   const GraphProblem& problem, double feasibility_tol,
                                   double stationarity_tol) {
  ValidationReport report;
  auto fail = [&report](const std::string& msg) {
    report.ok = false;
    report.violations.push_back(msg);
  };

  const GraphTopology& topo = problem.topology;
  if (static_cast<int>(certificate.x_star.size()) != topo.node_count() ||
      static_cast<int>(certificate.delta_star.size()) != topo.edge_count()) {
    fail("certificate: shape mismatch");
    return report;
  }

  for (int e = 0; e < topo.edge_count(); ++e) {
    const Edge& edge = topo.edges()[e];
    const EdgeConstraint& con = problem.constraints[e];
    const double residual = (con.A_lo * certificate.x_star[edge.i] +
                             con.A_hi * certificate.x_star[edge.j] - con.c)
                                .norm();
    if (residual > feasibility_tol) {
      fail("certificate: primal feasibility violated on edge #" + std::to_string(e + 1));
    }
  }

  for (int i = 0; i < topo.node_count(); ++i) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(problem.dims[i]);
    for (int j : topo.neighbors(i)) {
      const int e = topo.edge_index(i, j);
      g.noalias() += problem.a_of(e, i).transpose() * certificate.delta_star[e];
    }
    if (problem.node_functions[i]->subgradient_distance(certificate.x_star[i], g) >
        stationarity_tol) {
      fail("certificate: stationarity violated at node " + std::to_string(i + 1));
    }
  }
  return report;
}

// --- Lagrangians -------------------------------------------------------------

double eval_primal_lagrangian(const std::vector<Eigen::VectorXd>& x,
                              const std::vector<Eigen::VectorXd>& delta,
                              const GraphProblem& problem) {
  double value = 0.0;
  for (int i = 0; i < problem.topology.node_count(); ++i) {
    value += problem.node_functions[i]->evaluate(x[i]);
  }
  for (int e = 0; e < problem.topology.edge_count(); ++e) {
    const Edge& edge = problem.topology.edges()[e];
    const EdgeConstraint& con = problem.constraints[e];
    value += delta[e].dot(con.c - con.A_lo * x[edge.i] - con.A_hi * x[edge.j]);
  }
  return value;
}

double eval_pd_lagrangian(const std::vector<Eigen::VectorXd>& x,
                          const std::vector<Eigen::VectorXd>& lambda,
                          const GraphProblem& problem) {
  require_conjugates(problem);
  double value = 0.0;
  for (int i = 0; i < problem.topology.node_count(); ++i) {
    value += problem.node_functions[i]->evaluate(x[i]);
    for (int j : problem.topology.neighbors(i)) {
      const int e = problem.topology.edge_index(i, j);
      const int d_in = problem.topology.directed_index(j, i);
      value -= lambda[d_in].dot(problem.a_of(e, i) * x[i] - problem.constraints[e].c);
    }
    value -= problem.node_functions[i]->conjugate(stacked_dual_image(i, lambda, problem));
  }
  return value;
}

double eval_h_primal(const std::vector<Eigen::VectorXd>& x, const GraphProblem& problem,
                     const PenaltyConfig& config) {
  double value = 0.0;
  for (int e = 0; e < problem.topology.edge_count(); ++e) {
    const Edge& edge = problem.topology.edges()[e];
    const EdgeConstraint& con = problem.constraints[e];
    const Eigen::VectorXd r = con.A_lo * x[edge.i] + con.A_hi * x[edge.j] - con.c;
    value += 0.5 * r.dot(config.edges[e].pp * r);
  }
  return value;
}

double eval_h_dual(const std::vector<Eigen::VectorXd>& lambda, const GraphProblem& problem,
                   const PenaltyConfig& config) {
  double value = 0.0;
  for (int e = 0; e < problem.topology.edge_count(); ++e) {
    const Eigen::VectorXd r = lambda[2 * e] - lambda[2 * e + 1];
    value += 0.5 * r.dot(config.edges[e].pd * r);
  }
  return value;
}

double eval_augmented_pd_lagrangian(const std::vector<Eigen::VectorXd>& x,
                                    const std::vector<Eigen::VectorXd>& lambda,
                                    const GraphProblem& problem,
                                    const PenaltyConfig& config) {
  return eval_pd_lagrangian(x, lambda, problem) + eval_h_primal(x, problem, config) -
         eval_h_dual(lambda, problem, config);
}

double eval_p_function(const std::vector<Eigen::VectorXd>& x,
                       const std::vector<Eigen::VectorXd>& lambda,
                       const GraphProblem& problem) {
  require_conjugates(problem);
  double value = 0.0;
  for (int i = 0; i < problem.topology.node_count(); ++i) {
    value += problem.node_functions[i]->evaluate(x[i]);
    value += problem.node_functions[i]->conjugate(stacked_dual_image(i, lambda, problem));
    for (int j : problem.topology.neighbors(i)) {
      const int e = problem.topology.edge_index(i, j);
      const int d = problem.topology.directed_index(i, j);
      value -= 0.5 * problem.constraints[e].c.dot(lambda[d]);
    }
  }
  return value;
}

double lemma4_lhs(const std::vector<Eigen::VectorXd>& x,
                  const std::vector<Eigen::VectorXd>& lambda,
                  const SaddleCertificate& certificate, const GraphProblem& problem) {
  double value = eval_p_function(x, lambda, problem);
  if (!std::isfinite(value)) return value;
  for (int i = 0; i < problem.topology.node_count(); ++i) {
    for (int j : problem.topology.neighbors(i)) {
      const int e = problem.topology.edge_index(i, j);
      const int d_out = problem.topology.directed_index(i, j);
      const int d_in = problem.topology.directed_index(j, i);
      const EdgeConstraint& con = problem.constraints[e];
      value += (lambda[d_out] - certificate.delta_star[e])
                   .dot(problem.a_of(e, j) * x[j] - 0.5 * con.c);
      value -= (x[i] - certificate.x_star[i])
                   .dot(problem.a_of(e, i).transpose() * lambda[d_in]);
    }
  }
  return value;
}

// --- Inequality gaps ----------------------------------------------------------

GapReport lemma5_gap(const IterateState& state_k, const IterateState& state_k1,
                     const SaddleCertificate& certificate, const GraphProblem& problem,
                     const PenaltyConfig& config) {
  require_condition(config, "lemma5_gap");
  GapReport report;
  report.lhs = lemma4_lhs(state_k1.x, state_k1.lambda, certificate, problem);

  double rhs = 0.0;
  for (int d_out = 0; d_out < problem.topology.directed_count(); ++d_out) {
    const int i = problem.topology.owner_of(d_out);
    const int j = problem.topology.neighbor_of(d_out);
    const int e = d_out / 2;
    const int d_in = GraphTopology::reverse(d_out);
    const EdgeConstraint& con = problem.constraints[e];
    const EdgePenalty& pen = config.edges[e];
    const Eigen::VectorXd& lam_star = certificate.lambda_star(d_out);
    const Eigen::MatrixXd& a_i = problem.a_of(e, i);
    const Eigen::MatrixXd& a_j = problem.a_of(e, j);

    const Eigen::VectorXd before =
        pen.pp_sqrt * (a_j * (state_k.x[j] - certificate.x_star[j])) +
        pen.pp_inv_sqrt * (lam_star - state_k.lambda[d_in]);
    const Eigen::VectorXd after =
        pen.pp_sqrt * (a_j * (state_k1.x[j] - certificate.x_star[j])) +
        pen.pp_inv_sqrt * (lam_star - state_k1.lambda[d_in]);
    const Eigen::VectorXd cross =
        pen.pp_sqrt * (a_i * state_k1.x[i] + a_j * state_k.x[j] - con.c) +
        pen.pp_inv_sqrt * (state_k1.lambda[d_out] - state_k.lambda[d_in]);

    double term = before.squaredNorm() - after.squaredNorm() - cross.squaredNorm();
    if (!config.edges[e].dp_zero) {
      term += (pen.dp_sqrt * (lam_star - state_k.lambda[d_in])).squaredNorm();
      term -= (pen.dp_sqrt * (lam_star - state_k1.lambda[d_in])).squaredNorm();
      term -= (pen.dp_sqrt * (state_k1.lambda[d_out] - state_k.lambda[d_in])).squaredNorm();
    }
    rhs += 0.5 * term;
  }
  report.rhs = rhs;
  report.slack = report.rhs - report.lhs;
  return report;
}

GapReport lemma7_gap(const std::vector<IterateState>& segment,
                     const SaddleCertificate& certificate, const GraphProblem& problem,
                     const PenaltyConfig& config) {
  require_condition(config, "lemma7_gap");
  const int m = problem.topology.node_count();
  if (static_cast<int>(segment.size()) != m + 1) {
    throw std::invalid_argument("lemma7_gap: expected m+1 consecutive states");
  }
  for (int k = 0; k + 1 < static_cast<int>(segment.size()); ++k) {
    if (segment[k + 1].iteration != segment[k].iteration + 1) {
      throw std::invalid_argument("lemma7_gap: states are not consecutive iterates");
    }
  }
  const IterateState& start = segment.front();
  const IterateState& end = segment.back();

  GapReport report;
  report.lhs = lemma4_lhs(end.x, end.lambda, certificate, problem);

  double rhs = 0.0;
  for (int e = 0; e < problem.topology.edge_count(); ++e) {
    const Edge& edge = problem.topology.edges()[e];
    const int u = edge.i;
    const int v = edge.j;
    const int d_uv = 2 * e;      // [u|v]
    const int d_vu = 2 * e + 1;  // [v|u]
    const EdgeConstraint& con = problem.constraints[e];
    const EdgePenalty& pen = config.edges[e];
    const Eigen::VectorXd& lam_star = certificate.delta_star[e];
    const Eigen::MatrixXd& a_u = con.A_lo;
    const Eigen::MatrixXd& a_v = con.A_hi;

    const Eigen::VectorXd t1 = pen.pp_sqrt * (a_v * (start.x[v] - certificate.x_star[v])) +
                               pen.pp_inv_sqrt * (lam_star - start.lambda[d_vu]);
    const Eigen::VectorXd t2 = pen.pp_sqrt * (a_v * (end.x[v] - certificate.x_star[v])) +
                               pen.pp_inv_sqrt * (lam_star - end.lambda[d_vu]);
    const Eigen::VectorXd t3 = pen.pp_sqrt * (a_u * end.x[u] + a_v * end.x[v] - con.c) -
                               pen.pp_inv_sqrt * (end.lambda[d_uv] - end.lambda[d_vu]);
    const Eigen::VectorXd t4 = pen.pp_sqrt * (a_u * end.x[u] + a_v * start.x[v] - con.c) +
                               pen.pp_inv_sqrt * (end.lambda[d_uv] - start.lambda[d_vu]);

    double term =
        t1.squaredNorm() - t2.squaredNorm() - t3.squaredNorm() - t4.squaredNorm();
    if (!pen.dp_zero) {
      term += (pen.dp_sqrt * (lam_star - start.lambda[d_vu])).squaredNorm();
      term -= (pen.dp_sqrt * (lam_star - end.lambda[d_vu])).squaredNorm();
      term -= (pen.dp_sqrt * (end.lambda[d_uv] - start.lambda[d_vu])).squaredNorm();
      term -= (pen.dp_sqrt * (end.lambda[d_uv] - end.lambda[d_vu])).squaredNorm();
    }
    rhs += 0.5 * term;
  }
  report.rhs = rhs;
  report.slack = report.rhs - report.lhs;
  return report;
}

std::vector<double> lemma6_terms(const IterateState& state,
                                 const SaddleCertificate& certificate,
                                 const GraphProblem& problem, const PenaltyConfig& config) {
  std::vector<double> terms(problem.topology.directed_count());
  for (int d_out = 0; d_out < problem.topology.directed_count(); ++d_out) {
    const int j = problem.topology.neighbor_of(d_out);
    const int e = d_out / 2;
    const int d_in = GraphTopology::reverse(d_out);
    const EdgePenalty& pen = config.edges[e];
    terms[d_out] =
        (pen.pp_sqrt * (problem.a_of(e, j) * (state.x[j] - certificate.x_star[j])) +
         pen.pp_inv_sqrt * (certificate.lambda_star(d_out) - state.lambda[d_in]))
            .squaredNorm();
  }
  return terms;
}

double Lemma6Tracker::observe(const IterateState& state) {
  for (double term : lemma6_terms(state, *certificate_, *problem_, *config_)) {
    running_max_ = std::max(running_max_, term);
  }
  return running_max_;
}

std::vector<double> theorem2_feasibility_residual(const IterateState& avg_state,
                                                  const GraphProblem& problem,
                                                  const PenaltyConfig& config) {
  std::vector<double> out(problem.topology.directed_count());
  for (int d_out = 0; d_out < problem.topology.directed_count(); ++d_out) {
    const int i = problem.topology.owner_of(d_out);
    const int j = problem.topology.neighbor_of(d_out);
    const int e = d_out / 2;
    const int d_in = GraphTopology::reverse(d_out);
    const EdgeConstraint& con = problem.constraints[e];
    const EdgePenalty& pen = config.edges[e];
    out[d_out] =
        (pen.pp_sqrt *
             (problem.a_of(e, i) * avg_state.x[i] + problem.a_of(e, j) * avg_state.x[j] -
              con.c) +
         pen.pp_inv_sqrt * (avg_state.lambda[d_out] - avg_state.lambda[d_in]))
            .norm();
  }
  return out;
}

double max_primal_residual(const IterateState& state, const GraphProblem& problem) {
  double out = 0.0;
  for (int e = 0; e < problem.topology.edge_count(); ++e) {
    const Edge& edge = problem.topology.edges()[e];
    const EdgeConstraint& con = problem.constraints[e];
    out = std::max(out,
                   (con.A_lo * state.x[edge.i] + con.A_hi * state.x[edge.j] - con.c).norm());
  }
  return out;
}

double max_dual_residual(const IterateState& state, const GraphProblem& problem) {
  double out = 0.0;
  for (int e = 0; e < problem.topology.edge_count(); ++e) {
    out = std::max(out, (state.lambda[2 * e] - state.lambda[2 * e + 1]).norm());
  }
  return out;
}

double mse(const std::vector<Eigen::VectorXd>& x, double t_ave) {
  double sum = 0.0;
  for (const Eigen::VectorXd& xi : x) {
    if (xi.size() != 1) throw std::invalid_argument("mse: scalar node variables required");
    const double d = xi[0] - t_ave;
    sum += d * d;
  }
  return sum / static_cast<double>(x.size());
}

double mse(const Eigen::VectorXd& x, double t_ave) {
  return (x.array() - t_ave).square().sum() / static_cast<double>(x.size());
}

// --- RateLedger -----------------------------------------------------------------

RateLedger::RateLedger(const GraphProblem& problem, const PenaltyConfig& config,
                       const SaddleCertificate& certificate, const IterateState& initial)
    : problem_(&problem), config_(&config), certificate_(&certificate) {
  require_condition(config, "RateLedger");
  // Telescoping the per-iteration inequality leaves only the initial-state
  // terms on the right-hand side.
  const std::vector<double> base = lemma6_terms(initial, certificate, problem, config);
  double constant = 0.0;
  for (int d_out = 0; d_out < problem.topology.directed_count(); ++d_out) {
    constant += 0.5 * base[d_out];
    const int e = d_out / 2;
    const EdgePenalty& pen = config.edges[e];
    if (!pen.dp_zero) {
      const int d_in = GraphTopology::reverse(d_out);
      constant += 0.5 * (pen.dp_sqrt *
                         (certificate.lambda_star(d_out) - initial.lambda[d_in]))
                            .squaredNorm();
    }
  }
  bound_constant_ = constant;
  sum_x_.reserve(problem.dims.size());
  for (int d : problem.dims) sum_x_.push_back(Eigen::VectorXd::Zero(d));
  sum_lambda_.reserve(problem.topology.directed_count());
  for (int d = 0; d < problem.topology.directed_count(); ++d) {
    sum_lambda_.push_back(Eigen::VectorXd::Zero(problem.constraint_dim(d / 2)));
  }
}

void RateLedger::observe(const IterateState& state) {
  for (std::size_t i = 0; i < sum_x_.size(); ++i) sum_x_[i] += state.x[i];
  for (std::size_t d = 0; d < sum_lambda_.size(); ++d) sum_lambda_[d] += state.lambda[d];
  ++k_;
  sum_lhs_ += lemma4_lhs(state.x, state.lambda, *certificate_, *problem_);
}

IterateState RateLedger::average_state() const {
  if (k_ == 0) throw std::logic_error("RateLedger: no iterates observed");
  IterateState avg;
  avg.iteration = k_;
  avg.x.reserve(sum_x_.size());
  for (const auto& v : sum_x_) avg.x.push_back(v / static_cast<double>(k_));
  avg.lambda.reserve(sum_lambda_.size());
  for (const auto& v : sum_lambda_) avg.lambda.push_back(v / static_cast<double>(k_));
  return avg;
}

double RateLedger::lhs_at_average() const {
  const IterateState avg = average_state();
  return lemma4_lhs(avg.x, avg.lambda, *certificate_, *problem_);
}

}  // namespace pdmm
