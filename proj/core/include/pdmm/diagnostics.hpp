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
// Evaluates the analytical objects of the convergence theory on concrete
// iterates: Lagrangians, the p-function, saddle-point certificates, the
// per-iteration and per-segment inequality gaps, boundedness terms, and the
// O(1/K) running-average quantities. Everything here is a pure function of
// immutable inputs.

#ifndef PDMM_DIAGNOSTICS_HPP_
#define PDMM_DIAGNOSTICS_HPP_

#include <vector>

#include <Eigen/Dense>

#include "pdmm/graph.hpp"
#include "pdmm/penalty.hpp"
#include "pdmm/state.hpp"

namespace pdmm {

// A saddle point of the augmented primal-dual Lagrangian, stored with one
// dual block per undirected edge: lambda*_{i|j} = lambda*_{j|i} = delta*_ij
// holds by construction.
struct SaddleCertificate {
  std::vector<Eigen::VectorXd> x_star;      // per node
  std::vector<Eigen::VectorXd> delta_star;  // per edge

  const Eigen::VectorXd& lambda_star(int directed) const { return delta_star[directed / 2]; }
};

// x* = mean(t) everywhere; edge duals solve the node/edge flow system pinned
// by stationarity (any solution works, the KKT conditions only constrain the
// per-node sums). Requires a connected scalar averaging instance.
SaddleCertificate averaging_certificate(const GraphProblem& problem, const Eigen::VectorXd& t);

// Certificate x_1* = x_2* = point in [-1, 1], delta* = 0 for the hinge pair.
SaddleCertificate hinge_certificate(double point);

// Primal feasibility (<= feasibility_tol per edge) and subgradient
// stationarity (<= stationarity_tol per node) of a candidate certificate.
ValidationReport check_certificate(const SaddleCertificate& certificate,
                                   const GraphProblem& problem,
                                   double feasibility_tol = 1e-8,
                                   double stationarity_tol = 1e-8);

// --- Lagrangians and the p-function ----------------------------------------

// L_p(x, delta) = sum_i f_i(x_i) + sum_edges delta^T (c - A_lo x_lo - A_hi x_hi)
double eval_primal_lagrangian(const std::vector<Eigen::VectorXd>& x,
                              const std::vector<Eigen::VectorXd>& delta,
                              const GraphProblem& problem);

// L_pd(x, lambda); requires every oracle to ship a conjugate.
double eval_pd_lagrangian(const std::vector<Eigen::VectorXd>& x,
                          const std::vector<Eigen::VectorXd>& lambda,
                          const GraphProblem& problem);

// L_pd + h_Pp - h_Pd with the quadratic primal/dual penalties.
double eval_augmented_pd_lagrangian(const std::vector<Eigen::VectorXd>& x,
                                    const std::vector<Eigen::VectorXd>& lambda,
                                    const GraphProblem& problem,
                                    const PenaltyConfig& config);

double eval_h_primal(const std::vector<Eigen::VectorXd>& x, const GraphProblem& problem,
                     const PenaltyConfig& config);
double eval_h_dual(const std::vector<Eigen::VectorXd>& lambda, const GraphProblem& problem,
                   const PenaltyConfig& config);

// p(x, lambda) = sum_i [ f_i(x_i) + f_i*(A_i^T lambda_i) - 1/2 sum_j c^T lambda_{i|j} ];
// zero at every saddle point, +infinity outside the conjugate domains.
double eval_p_function(const std::vector<Eigen::VectorXd>& x,
                       const std::vector<Eigen::VectorXd>& lambda,
                       const GraphProblem& problem);

// The nonnegative quantity bounding every estimate:
//   sum_i sum_j [ (lambda_{i|j}-lambda*_{i|j})^T (A_j x_j - c/2)
//                 - (x_i-x*_i)^T A_i^T lambda_{j|i} ] + p(x, lambda)
double lemma4_lhs(const std::vector<Eigen::VectorXd>& x,
                  const std::vector<Eigen::VectorXd>& lambda,
                  const SaddleCertificate& certificate, const GraphProblem& problem);

// --- Per-iteration / per-segment inequality gaps ----------------------------

struct GapReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs - lhs; nonnegative up to round-off when the theory applies
};

// Synchronous transition k -> k+1: lhs is the certificate-anchored quantity at
// the new state, rhs the sum of the directed-edge d-terms (six norms each,
// built from P_p^{1/2}, P_p^{-1/2} and (P_d - P_p^{-1})^{1/2}). Throws unless
// the penalty config satisfies the P_d >= P_p^{-1} relation.
GapReport lemma5_gap(const IterateState& state_k, const IterateState& state_k1,
                     const SaddleCertificate& certificate, const GraphProblem& problem,
                     const PenaltyConfig& config);

// Cyclic-async segment {lm, ..., (l+1)m}: m+1 consecutive states, one full
// activation sweep. rhs sums the per-undirected-edge d-terms (eight norms).
GapReport lemma7_gap(const std::vector<IterateState>& segment,
                     const SaddleCertificate& certificate, const GraphProblem& problem,
                     const PenaltyConfig& config);

// Per-directed-edge boundedness terms
//   || P_p^{1/2} A_j (x_j - x*_j) + P_p^{-1/2} (lambda*_{j|i} - lambda_{j|i}) ||^2
std::vector<double> lemma6_terms(const IterateState& state,
                                 const SaddleCertificate& certificate,
                                 const GraphProblem& problem, const PenaltyConfig& config);

// Running maximum of the boundedness terms over an observed run.
class Lemma6Tracker {
 public:
  Lemma6Tracker(const GraphProblem& problem, const PenaltyConfig& config,
                const SaddleCertificate& certificate)
      : problem_(&problem), config_(&config), certificate_(&certificate) {}

  double observe(const IterateState& state);
  double running_max() const { return running_max_; }

 private:
  const GraphProblem* problem_;
  const PenaltyConfig* config_;
  const SaddleCertificate* certificate_;
  double running_max_ = 0.0;
};

// Mixed feasibility residual per directed edge at a (running-average) state:
//   || P_p^{1/2}(A_i x_i + A_j x_j - c) + P_p^{-1/2}(lambda_{i|j} - lambda_{j|i}) ||
// Both orientations together bound the plain primal and dual residuals.
std::vector<double> theorem2_feasibility_residual(const IterateState& avg_state,
                                                  const GraphProblem& problem,
                                                  const PenaltyConfig& config);

// Plain residuals, for reporting.
double max_primal_residual(const IterateState& state, const GraphProblem& problem);
double max_dual_residual(const IterateState& state, const GraphProblem& problem);

// (1/m) sum_i (x_i - t_ave)^2 for scalar node variables.
double mse(const std::vector<Eigen::VectorXd>& x, double t_ave);
double mse(const Eigen::VectorXd& x, double t_ave);

// Running-average bookkeeping for the O(1/K) statements: accumulates the
// iterate average, the per-iterate lemma4 values, and the initial-state
// constant that telescopes out of the per-iteration inequality.
class RateLedger {
 public:
  RateLedger(const GraphProblem& problem, const PenaltyConfig& config,
             const SaddleCertificate& certificate, const IterateState& initial);

  void observe(const IterateState& state);

  long count() const { return k_; }
  double bound_constant() const { return bound_constant_; }
  double sum_lhs() const { return sum_lhs_; }
  IterateState average_state() const;
  double lhs_at_average() const;

 private:
  const GraphProblem* problem_;
  const PenaltyConfig* config_;
  const SaddleCertificate* certificate_;
  double bound_constant_ = 0.0;
  double sum_lhs_ = 0.0;
  long k_ = 0;
  std::vector<Eigen::VectorXd> sum_x_;
  std::vector<Eigen::VectorXd> sum_lambda_;
};

}  // namespace pdmm

#endif  // PDMM_DIAGNOSTICS_HPP_
