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

#include "pdmm/penalty.hpp"

#include <stdexcept>
#include <string>
#include <utility>

#include "pdmm/linalg.hpp"

namespace pdmm {

namespace {

void check_spd(const Eigen::MatrixXd& m, int n_ij, const std::string& name, int edge) {
  const std::string tag = name + " on edge #" + std::to_string(edge + 1);
  if (m.rows() != n_ij || m.cols() != n_ij) {
    throw std::invalid_argument(tag + ": wrong shape");
  }
  if (!is_symmetric(m, kSymmetryTol)) {
    throw std::invalid_argument(tag + ": not symmetric");
  }
  if (min_eigenvalue(m) <= 0.0) {
    throw std::invalid_argument(tag + ": not positive definite");
  }
}

EdgePenalty derive(Eigen::MatrixXd pp, Eigen::MatrixXd pd) {
  EdgePenalty edge;
  edge.pp = std::move(pp);
  edge.pd = std::move(pd);
  edge.pp_inv = symmetric_inverse(edge.pp);
  edge.pd_inv = symmetric_inverse(edge.pd);
  edge.pp_sqrt = symmetric_sqrt(edge.pp);
  edge.pp_inv_sqrt = symmetric_inverse_sqrt(edge.pp);
  edge.dp = edge.pd - edge.pp_inv;
  edge.dp_min_eigenvalue = min_eigenvalue(edge.dp);
  edge.dp_psd = edge.dp_min_eigenvalue >= kPsdTol;
  edge.dp_zero = edge.dp.cwiseAbs().maxCoeff() <= kDeltaZeroTol;
  if (edge.dp_psd) {
    edge.dp_sqrt = edge.dp_zero ? Eigen::MatrixXd::Zero(edge.dp.rows(), edge.dp.cols())
                                : symmetric_sqrt(edge.dp, 0.0);
  }
  return edge;
}

}  // namespace

PenaltyConfig make_penalty_config(const GraphProblem& problem,
                                  std::vector<Eigen::MatrixXd> pp,
                                  std::vector<Eigen::MatrixXd> pd) {
  const int n_edges = problem.topology.edge_count();
  if (static_cast<int>(pp.size()) != n_edges || static_cast<int>(pd.size()) != n_edges) {
    throw std::invalid_argument("make_penalty_config: expected one matrix pair per edge");
  }
  PenaltyConfig config;
  config.edges.reserve(n_edges);
  for (int e = 0; e < n_edges; ++e) {
    const int n_ij = problem.constraint_dim(e);
    check_spd(pp[e], n_ij, "P_p", e);
    check_spd(pd[e], n_ij, "P_d", e);
    config.edges.push_back(derive(std::move(pp[e]), std::move(pd[e])));
  }
  return config;
}

PenaltyConfig scalar_penalty(double gamma_p, double gamma_d, const GraphProblem& problem) {
  if (gamma_p <= 0.0 || gamma_d <= 0.0) {
    throw std::invalid_argument("scalar_penalty: gamma_p and gamma_d must be positive");
  }
  std::vector<Eigen::MatrixXd> pp, pd;
  pp.reserve(problem.topology.edge_count());
  pd.reserve(problem.topology.edge_count());
  for (int e = 0; e < problem.topology.edge_count(); ++e) {
    const int n_ij = problem.constraint_dim(e);
    pp.push_back(gamma_p * Eigen::MatrixXd::Identity(n_ij, n_ij));
    pd.push_back(gamma_d * Eigen::MatrixXd::Identity(n_ij, n_ij));
  }
  return make_penalty_config(problem, std::move(pp), std::move(pd));
}

PenaltyConfig inverse_pair_penalty(const GraphProblem& problem,
                                   std::vector<Eigen::MatrixXd> pp) {
  std::vector<Eigen::MatrixXd> pd;
  pd.reserve(pp.size());
  for (const auto& m : pp) pd.push_back(symmetric_inverse(m));
  return make_penalty_config(problem, std::move(pp), std::move(pd));
}

ConditionReport check_condition(const PenaltyConfig& config) {
  ConditionReport report;
  report.min_eigenvalues.reserve(config.edges.size());
  for (const EdgePenalty& edge : config.edges) {
    report.min_eigenvalues.push_back(edge.dp_min_eigenvalue);
    report.pass = report.pass && edge.dp_psd;
    report.delta_zero = report.delta_zero && edge.dp_zero;
  }
  return report;
}

}  // namespace pdmm
