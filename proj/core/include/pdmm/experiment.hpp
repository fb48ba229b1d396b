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
// Experiment runner: configuration, single seeded runs of every method, the
// parameter sweep, the transmission-loss study, and the method comparison.
// CSV outputs are deterministic functions of the configuration.

#ifndef PDMM_EXPERIMENT_HPP_
#define PDMM_EXPERIMENT_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pdmm/graph.hpp"

namespace pdmm {

enum class Method {
  kPdmmSync,
  kPdmmAsyncCyclic,
  kPdmmOneNode,
  kPdmmTwoNode,
  kAdmmSync,
  kAdmmAsync,
  kGossip,
  kBroadcast,
};

Method parse_method(const std::string& name);        // throws on unknown name
std::string method_name(Method method);
bool method_is_sync(Method method);                  // whole-graph rounds
bool method_is_randomized(Method method);            // consumes schedule randomness

enum class InitMode { kXEqualsT, kZeros };
enum class TransportChoice { kAuto, kBroadcast, kPointToPoint };

InitMode parse_init_mode(const std::string& name);
TransportChoice parse_transport(const std::string& name);

struct ExperimentConfig {
  // Instance: a problem file wins over the generator.
  std::string problem_file;
  int grid_rows = 10;
  int grid_cols = 10;
  std::uint64_t t_seed = 1;  // t ~ iid U[0,1)

  Method method = Method::kPdmmSync;
  double gamma_p = 1.0;
  double gamma_d = 1.0;
  double rho = 1.0;      // ADMM
  double gamma_b = 0.5;  // broadcast gossip mixing weight

  double loss_pct = 0.0;
  TransportChoice transport = TransportChoice::kAuto;

  std::vector<std::uint64_t> seeds = {1};
  double tol = 1e-4;
  long max_iter = 10000;
  InitMode init = InitMode::kXEqualsT;
  long log_every = 1;
};

void validate_config(const ExperimentConfig& config);  // throws std::invalid_argument
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig config_from_json_file(const std::string& path);

// The averaging instance the config describes (file or seeded grid).
AveragingInstance instance_from_config(const ExperimentConfig& config);

// --- Single run ----------------------------------------------------------------

struct RunRow {
  long k = 0;
  double mse = 0.0;
  double primal_res = 0.0;
  double dual_res = 0.0;
  bool has_lemma5 = false;
  double lemma5_slack = 0.0;
  long tx = 0;
};

struct RunResult {
  std::vector<RunRow> rows;
  bool converged = false;
  bool diverged = false;  // final MSE above 10x the initial one
  long iterations_to_tol = -1;
  double initial_mse = 0.0;
  double final_mse = 0.0;
  long transmissions = 0;
};

// Executes one (method, seed) run. The per-iteration MSE trajectory
// (including k = 0) lands in *mse_trace when given; rows are kept only when
// keep_rows is set. The lemma5_slack column is filled for synchronous PDMM
// under a Condition-1 config with a valid certificate, and left empty
// otherwise.
RunResult run_single(const ExperimentConfig& config, std::uint64_t seed,
                     std::vector<double>* mse_trace = nullptr, bool keep_rows = true);

// Header "k,mse,primal_res,dual_res,lemma5_slack,tx".
void write_run_csv(std::ostream& out, const RunResult& result);

// --- Parameter sweep --------------------------------------------------------------

struct SweepCell {
  double gamma_p = 0.0;
  double gamma_d = 0.0;
  bool converged = false;
  long count = 0;  // rounds (sync) or segments of m iterations (async)
};

struct SweepResult {
  std::vector<SweepCell> cells;
  int argmin_index = -1;  // fastest converged cell
};

// Runs the method of `config` (synchronous or cyclic-async PDMM) on every
// (gamma_p, gamma_d) pair of the grid. config.max_iter counts rounds for the
// synchronous scheme and segments for the cyclic one.
SweepResult run_sweep(const ExperimentConfig& config, const std::vector<double>& gammas);

// Header "gamma_p,gamma_d,count,converged".
void write_sweep_csv(std::ostream& out, const SweepResult& result);

// --- Transmission-loss study -------------------------------------------------------

struct LossLevel {
  double loss_pct = 0.0;
  bool all_converged = false;
  double mean_iterations = 0.0;  // +inf when a seed exhausts the budget
  std::vector<double> mean_mse;  // per iteration, converged seeds extended by
                                 // their final value
};

struct LossResult {
  std::vector<LossLevel> levels;
  bool ordered = false;  // mean iterations nondecreasing in the loss
};

// Zeros initialization and point-to-point transport are required; the mean
// MSE trajectory per level averages config.seeds runs.
LossResult run_loss(const ExperimentConfig& config, const std::vector<double>& losses);

// Header "loss_pct,k,mean_mse", thinned by config.log_every.
void write_loss_csv(std::ostream& out, const LossResult& result, long log_every);

// --- Method comparison ----------------------------------------------------------------

struct MethodTrace {
  Method method = Method::kPdmmSync;
  bool all_converged = false;
  double mean_iterations = 0.0;
  std::vector<double> mean_mse;
};

struct CompareResult {
  std::vector<MethodTrace> methods;
};

// Perfect-channel comparison of the async family (one-node and two-node PDMM,
// edge-activated ADMM, gossip, broadcast) and the sync family (PDMM, ADMM);
// randomized methods are averaged over config.seeds.
CompareResult run_compare(const ExperimentConfig& config);

// Header "method,k,mean_mse", thinned by config.log_every.
void write_compare_csv(std::ostream& out, const CompareResult& result, long log_every);

}  // namespace pdmm

#endif  // PDMM_EXPERIMENT_HPP_
