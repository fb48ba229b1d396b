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

#include "pdmm/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "pdmm/baselines.hpp"
#include "pdmm/diagnostics.hpp"
#include "pdmm/engine.hpp"
#include "pdmm/linalg.hpp"
#include "pdmm/netsim.hpp"
#include "pdmm/penalty.hpp"

namespace pdmm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Transport RNG stream offset so the schedule and loss streams never share a
// seed.
constexpr std::uint64_t kTransportSeedSalt = 0x9e3779b97f4a7c15ull;
// Hard abort threshold for clearly diverging runs.
constexpr double kAbortFactor = 1e8;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

Method parse_method(const std::string& name) {
  if (name == "pdmm-sync") return Method::kPdmmSync;
  if (name == "pdmm-async-cyclic") return Method::kPdmmAsyncCyclic;
  if (name == "pdmm-one-node") return Method::kPdmmOneNode;
  if (name == "pdmm-two-node") return Method::kPdmmTwoNode;
  if (name == "admm-sync") return Method::kAdmmSync;
  if (name == "admm-async") return Method::kAdmmAsync;
  if (name == "gossip") return Method::kGossip;
  if (name == "broadcast") return Method::kBroadcast;
  throw std::invalid_argument("unknown method: " + name);
}

std::string method_name(Method method) {
  switch (method) {
    case Method::kPdmmSync: return "pdmm-sync";
    case Method::kPdmmAsyncCyclic: return "pdmm-async-cyclic";
    case Method::kPdmmOneNode: return "pdmm-one-node";
    case Method::kPdmmTwoNode: return "pdmm-two-node";
    case Method::kAdmmSync: return "admm-sync";
    case Method::kAdmmAsync: return "admm-async";
    case Method::kGossip: return "gossip";
    case Method::kBroadcast: return "broadcast";
  }
  throw std::logic_error("unknown method enum");
}

bool method_is_sync(Method method) {
  return method == Method::kPdmmSync || method == Method::kAdmmSync;
}

bool method_is_randomized(Method method) {
  switch (method) {
    case Method::kPdmmOneNode:
    case Method::kPdmmTwoNode:
    case Method::kAdmmAsync:
    case Method::kGossip:
    case Method::kBroadcast:
      return true;
    default:
      return false;
  }
}

InitMode parse_init_mode(const std::string& name) {
  if (name == "x-equals-t") return InitMode::kXEqualsT;
  if (name == "zeros") return InitMode::kZeros;
  throw std::invalid_argument("unknown init mode: " + name);
}

TransportChoice parse_transport(const std::string& name) {
  if (name == "auto") return TransportChoice::kAuto;
  if (name == "broadcast") return TransportChoice::kBroadcast;
  if (name == "p2p" || name == "point-to-point") return TransportChoice::kPointToPoint;
  throw std::invalid_argument("unknown transport: " + name);
}

void validate_config(const ExperimentConfig& config) {
  if (config.problem_file.empty() && (config.grid_rows <= 0 || config.grid_cols <= 0)) {
    throw std::invalid_argument("config: grid dimensions must be positive");
  }
  if (config.tol <= 0.0) throw std::invalid_argument("config: tol must be positive");
  if (config.max_iter <= 0) throw std::invalid_argument("config: max_iter must be positive");
  if (config.loss_pct < 0.0 || config.loss_pct > 100.0) {
    throw std::invalid_argument("config: loss_pct must lie in [0, 100]");
  }
  if (config.gamma_p <= 0.0 || config.gamma_d <= 0.0) {
    throw std::invalid_argument("config: gamma_p and gamma_d must be positive");
  }
  if (config.rho <= 0.0) throw std::invalid_argument("config: rho must be positive");
  if (config.gamma_b <= 0.0 || config.gamma_b >= 1.0) {
    throw std::invalid_argument("config: gamma_b must lie in (0, 1)");
  }
  if (config.seeds.empty()) throw std::invalid_argument("config: seed list is empty");
  if (config.log_every <= 0) throw std::invalid_argument("config: log_every must be positive");
  if (config.transport == TransportChoice::kBroadcast && config.loss_pct > 0.0) {
    throw std::invalid_argument("config: broadcast transport requires zero loss");
  }
}

ExperimentConfig config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
  }
  ExperimentConfig config;
  if (j.contains("problem_file")) config.problem_file = j["problem_file"].get<std::string>();
  if (j.contains("grid_rows")) config.grid_rows = j["grid_rows"].get<int>();
  if (j.contains("grid_cols")) config.grid_cols = j["grid_cols"].get<int>();
  if (j.contains("t_seed")) config.t_seed = j["t_seed"].get<std::uint64_t>();
  if (j.contains("method")) config.method = parse_method(j["method"].get<std::string>());
  if (j.contains("gamma_p")) config.gamma_p = j["gamma_p"].get<double>();
  if (j.contains("gamma_d")) config.gamma_d = j["gamma_d"].get<double>();
  if (j.contains("rho")) config.rho = j["rho"].get<double>();
  if (j.contains("gamma_b")) config.gamma_b = j["gamma_b"].get<double>();
  if (j.contains("loss_pct")) config.loss_pct = j["loss_pct"].get<double>();
  if (j.contains("transport")) config.transport = parse_transport(j["transport"].get<std::string>());
  if (j.contains("seeds")) config.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  if (j.contains("tol")) config.tol = j["tol"].get<double>();
  if (j.contains("max_iter")) config.max_iter = j["max_iter"].get<long>();
  if (j.contains("init")) config.init = parse_init_mode(j["init"].get<std::string>());
  if (j.contains("log_every")) config.log_every = j["log_every"].get<long>();
  validate_config(config);
  return config;
}

ExperimentConfig config_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return config_from_json(text);
}

AveragingInstance instance_from_config(const ExperimentConfig& config) {
  if (!config.problem_file.empty()) {
    return load_averaging_instance_file(config.problem_file);
  }
  GraphTopology topology = grid_topology(config.grid_rows, config.grid_cols);
  std::mt19937_64 rng(config.t_seed);
  Eigen::VectorXd t(topology.node_count());
  for (int i = 0; i < topology.node_count(); ++i) t[i] = uniform_unit(rng);
  return AveragingInstance{std::move(topology), std::move(t)};
}

// --- run_single -------------------------------------------------------------

namespace {

struct RunContext {
  const ExperimentConfig* config;
  RunResult* result;
  std::vector<double>* mse_trace;
  bool keep_rows = true;
};

// Shared run loop: `mse_now` reads the current error, `advance` performs one
// iteration tick and fills an optional row skeleton for logged iterations.
template <typename MseFn, typename StepFn>
void drive(RunContext& ctx, MseFn&& mse_now, StepFn&& advance) {
  const ExperimentConfig& config = *ctx.config;
  RunResult& result = *ctx.result;

  double current = mse_now();
  result.initial_mse = current;
  if (ctx.mse_trace) ctx.mse_trace->push_back(current);
  if (ctx.keep_rows) {
    advance(/*execute=*/false, /*row_wanted=*/true, 0L, current);
  }
  if (current <= config.tol) {
    result.converged = true;
    result.iterations_to_tol = 0;
    result.final_mse = current;
    return;
  }

  const double abort_level = kAbortFactor * std::max(result.initial_mse, 1e-8);
  for (long k = 1; k <= config.max_iter; ++k) {
    const bool row_wanted = ctx.keep_rows && (k % config.log_every == 0);
    advance(/*execute=*/true, row_wanted, k, 0.0);
    current = mse_now();
    if (ctx.mse_trace) ctx.mse_trace->push_back(current);
    if (current <= config.tol) {
      result.converged = true;
      result.iterations_to_tol = k;
      if (ctx.keep_rows && !row_wanted) {
        advance(/*execute=*/false, /*row_wanted=*/true, k, current);
      }
      break;
    }
    if (current > abort_level) break;  // clearly diverging; stop burning budget
  }
  result.final_mse = current;
  result.diverged = !result.converged && current > 10.0 * result.initial_mse;
}

RunResult run_pdmm(const ExperimentConfig& config, const AveragingInstance& instance,
                   std::uint64_t seed, std::vector<double>* mse_trace, bool keep_rows) {
  const GraphProblem problem = build_averaging_problem(instance.t, instance.topology);
  const PenaltyConfig penalty = scalar_penalty(config.gamma_p, config.gamma_d, problem);
  const double t_ave = instance.t.mean();

  Schedule schedule;
  schedule.rng_seed = seed;
  switch (config.method) {
    case Method::kPdmmSync: schedule.kind = ScheduleKind::kSynchronous; break;
    case Method::kPdmmAsyncCyclic: schedule.kind = ScheduleKind::kCyclicAsync; break;
    case Method::kPdmmOneNode: schedule.kind = ScheduleKind::kRandomNode; break;
    case Method::kPdmmTwoNode: schedule.kind = ScheduleKind::kTwoNodeRandomEdge; break;
    default: throw std::logic_error("run_pdmm: not a PDMM method");
  }

  TransportModel transport;
  transport.loss_probability = config.loss_pct / 100.0;
  transport.rng_seed = seed ^ kTransportSeedSalt;
  switch (config.transport) {
    case TransportChoice::kAuto:
      transport.mode = transport.loss_probability > 0.0 ? TransportModel::Mode::kPointToPoint
                                                        : TransportModel::Mode::kBroadcast;
      break;
    case TransportChoice::kBroadcast:
      transport.mode = TransportModel::Mode::kBroadcast;
      break;
    case TransportChoice::kPointToPoint:
      transport.mode = TransportModel::Mode::kPointToPoint;
      break;
  }

  IterateState init = config.init == InitMode::kZeros
                          ? zero_state(problem)
                          : state_from_x(problem, instance.t);
  Simulator sim(problem, penalty, schedule, transport, std::move(init));

  // The inequality column applies to synchronous runs under the penalty
  // relation, anchored at a verified certificate.
  bool lemma5_enabled = false;
  SaddleCertificate certificate;
  if (keep_rows && config.method == Method::kPdmmSync && check_condition(penalty).pass) {
    certificate = averaging_certificate(problem, instance.t);
    lemma5_enabled = check_certificate(certificate, problem).ok;
  }

  RunResult result;
  RunContext ctx{&config, &result, mse_trace, keep_rows};
  IterateState before_logged_step;

  drive(
      ctx, [&] { return mse(sim.state().x, t_ave); },
      [&](bool execute, bool row_wanted, long k, double /*mse_hint*/) {
        if (execute) {
          if (row_wanted && lemma5_enabled) before_logged_step = sim.state();
          sim.step();
        }
        if (!row_wanted) return;
        RunRow row;
        row.k = k;
        row.mse = mse(sim.state().x, t_ave);
        row.primal_res = max_primal_residual(sim.state(), problem);
        row.dual_res = max_dual_residual(sim.state(), problem);
        row.tx = sim.transmissions();
        if (execute && lemma5_enabled) {
          row.has_lemma5 = true;
          row.lemma5_slack =
              lemma5_gap(before_logged_step, sim.state(), certificate, problem, penalty)
                  .slack;
        }
        result.rows.push_back(row);
      });
  result.transmissions = sim.transmissions();
  return result;
}

RunResult run_baseline(const ExperimentConfig& config, const AveragingInstance& instance,
                       std::uint64_t seed, std::vector<double>* mse_trace, bool keep_rows) {
  const GraphTopology& topology = instance.topology;
  const double t_ave = instance.t.mean();
  const Eigen::VectorXd x0 = config.init == InitMode::kZeros
                                 ? Eigen::VectorXd::Zero(topology.node_count()).eval()
                                 : instance.t;
  ScalarAveragingState state = scalar_averaging_init(topology, x0);
  std::mt19937_64 rng(seed);
  long transmissions = 0;

  auto primal_res = [&] {
    double out = 0.0;
    for (const Edge& e : topology.edges()) {
      out = std::max(out, std::abs(state.x[e.i] - state.x[e.j]));
    }
    return out;
  };

  RunResult result;
  RunContext ctx{&config, &result, mse_trace, keep_rows};

  drive(
      ctx, [&] { return mse(state.x, t_ave); },
      [&](bool execute, bool row_wanted, long k, double /*mse_hint*/) {
        if (execute) {
          switch (config.method) {
            case Method::kAdmmSync:
              admm_avg_sync_round(state, instance.t, config.rho, topology);
              transmissions += topology.directed_count();
              break;
            case Method::kAdmmAsync:
              admm_avg_edge_step(state, uniform_index(rng, topology.edge_count()),
                                 instance.t, config.rho, topology);
              transmissions += 2;
              break;
            case Method::kGossip:
              gossip_step(state, uniform_index(rng, topology.edge_count()), topology);
              transmissions += 2;
              break;
            case Method::kBroadcast:
              broadcast_step(state, uniform_index(rng, topology.node_count()),
                             config.gamma_b, topology);
              transmissions += 1;
              break;
            default:
              throw std::logic_error("run_baseline: not a baseline method");
          }
        }
        if (!row_wanted) return;
        RunRow row;
        row.k = k;
        row.mse = mse(state.x, t_ave);
        row.primal_res = primal_res();
        row.dual_res = 0.0;
        row.tx = transmissions;
        result.rows.push_back(row);
      });
  result.transmissions = transmissions;
  return result;
}

}  // namespace

RunResult run_single(const ExperimentConfig& config, std::uint64_t seed,
                     std::vector<double>* mse_trace, bool keep_rows) {
  validate_config(config);
  const AveragingInstance instance = instance_from_config(config);
  switch (config.method) {
    case Method::kPdmmSync:
    case Method::kPdmmAsyncCyclic:
    case Method::kPdmmOneNode:
    case Method::kPdmmTwoNode:
      return run_pdmm(config, instance, seed, mse_trace, keep_rows);
    default:
      return run_baseline(config, instance, seed, mse_trace, keep_rows);
  }
}

void write_run_csv(std::ostream& out, const RunResult& result) {
  out << "k,mse,primal_res,dual_res,lemma5_slack,tx\n";
  for (const RunRow& row : result.rows) {
    out << row.k << ',' << format_double(row.mse) << ',' << format_double(row.primal_res)
        << ',' << format_double(row.dual_res) << ','
        << (row.has_lemma5 ? format_double(row.lemma5_slack) : std::string()) << ','
        << row.tx << '\n';
  }
}

// --- Sweep ---------------------------------------------------------------------

SweepResult run_sweep(const ExperimentConfig& config, const std::vector<double>& gammas) {
  if (config.method != Method::kPdmmSync && config.method != Method::kPdmmAsyncCyclic) {
    throw std::invalid_argument("sweep: method must be pdmm-sync or pdmm-async-cyclic");
  }
  for (double g : gammas) {
    if (g <= 0.0) throw std::invalid_argument("sweep: gamma grid must be positive");
  }
  const AveragingInstance instance = instance_from_config(config);
  const int m = instance.topology.node_count();
  const bool async = config.method == Method::kPdmmAsyncCyclic;

  SweepResult sweep;
  for (double gp : gammas) {
    for (double gd : gammas) {
      ExperimentConfig cell_config = config;
      cell_config.gamma_p = gp;
      cell_config.gamma_d = gd;
      // max_iter counts segments for the cyclic scheme.
      if (async) cell_config.max_iter = config.max_iter * m;
      const RunResult run = run_single(cell_config, config.seeds.front(), nullptr, false);
      SweepCell cell;
      cell.gamma_p = gp;
      cell.gamma_d = gd;
      cell.converged = run.converged;
      if (run.converged) {
        cell.count = async ? (run.iterations_to_tol + m - 1) / m : run.iterations_to_tol;
      } else {
        cell.count = -1;
      }
      sweep.cells.push_back(cell);
    }
  }
  for (std::size_t i = 0; i < sweep.cells.size(); ++i) {
    if (!sweep.cells[i].converged) continue;
    if (sweep.argmin_index < 0 ||
        sweep.cells[i].count < sweep.cells[sweep.argmin_index].count) {
      sweep.argmin_index = static_cast<int>(i);
    }
  }
  return sweep;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
  out << "gamma_p,gamma_d,count,converged\n";
  for (const SweepCell& cell : result.cells) {
    out << format_double(cell.gamma_p) << ',' << format_double(cell.gamma_d) << ','
        << cell.count << ',' << (cell.converged ? 1 : 0) << '\n';
  }
}

// --- Loss study ------------------------------------------------------------------

namespace {

// Mean trajectory accumulation: converged runs hold their final value to the
// common horizon.
struct TraceAccumulator {
  std::vector<double> sum;
  std::vector<double> finals;
  std::size_t horizon = 0;

  void add(const std::vector<double>& trace) {
    horizon = std::max(horizon, trace.size());
    if (sum.size() < trace.size()) sum.resize(trace.size(), 0.0);
    for (std::size_t k = 0; k < trace.size(); ++k) sum[k] += trace[k];
    finals.push_back(trace.empty() ? 0.0 : trace.back());
    tails.push_back(trace.size());
  }

  std::vector<double> mean() const {
    std::vector<double> out(horizon, 0.0);
    for (std::size_t k = 0; k < horizon; ++k) {
      double total = k < sum.size() ? sum[k] : 0.0;
      for (std::size_t run = 0; run < tails.size(); ++run) {
        if (k >= tails[run]) total += finals[run];
      }
      out[k] = total / static_cast<double>(tails.size());
    }
    return out;
  }

 private:
  std::vector<std::size_t> tails;
};

}  // namespace

LossResult run_loss(const ExperimentConfig& config, const std::vector<double>& losses) {
  if (config.init != InitMode::kZeros) {
    throw std::invalid_argument("loss study: zeros initialization is required");
  }
  if (config.transport == TransportChoice::kBroadcast) {
    throw std::invalid_argument("loss study: broadcast transport cannot carry losses");
  }
  LossResult result;
  for (double loss : losses) {
    ExperimentConfig level_config = config;
    level_config.loss_pct = loss;
    level_config.transport = TransportChoice::kPointToPoint;

    TraceAccumulator accumulator;
    double iteration_sum = 0.0;
    bool all_converged = true;
    for (std::uint64_t seed : config.seeds) {
      std::vector<double> trace;
      const RunResult run = run_single(level_config, seed, &trace, false);
      accumulator.add(trace);
      if (run.converged) {
        iteration_sum += static_cast<double>(run.iterations_to_tol);
      } else {
        all_converged = false;
      }
    }
    LossLevel level;
    level.loss_pct = loss;
    level.all_converged = all_converged;
    level.mean_iterations =
        all_converged ? iteration_sum / static_cast<double>(config.seeds.size()) : kInf;
    level.mean_mse = accumulator.mean();
    result.levels.push_back(std::move(level));
  }
  result.ordered = true;
  for (std::size_t l = 0; l + 1 < result.levels.size(); ++l) {
    if (!(result.levels[l].mean_iterations <= result.levels[l + 1].mean_iterations)) {
      result.ordered = false;
    }
  }
  return result;
}

void write_loss_csv(std::ostream& out, const LossResult& result, long log_every) {
  out << "loss_pct,k,mean_mse\n";
  for (const LossLevel& level : result.levels) {
    for (std::size_t k = 0; k < level.mean_mse.size(); ++k) {
      if (k % static_cast<std::size_t>(log_every) != 0 && k + 1 != level.mean_mse.size()) {
        continue;
      }
      out << format_double(level.loss_pct) << ',' << k << ','
          << format_double(level.mean_mse[k]) << '\n';
    }
  }
}

// --- Comparison --------------------------------------------------------------------

CompareResult run_compare(const ExperimentConfig& config) {
  if (config.loss_pct != 0.0) {
    throw std::invalid_argument("compare: perfect channel required");
  }
  const Method methods[] = {Method::kPdmmOneNode, Method::kPdmmTwoNode,
                            Method::kAdmmAsync,   Method::kGossip,
                            Method::kBroadcast,   Method::kPdmmSync,
                            Method::kAdmmSync};
  CompareResult result;
  for (Method method : methods) {
    ExperimentConfig method_config = config;
    method_config.method = method;
    const std::vector<std::uint64_t> seeds =
        method_is_randomized(method) ? config.seeds
                                     : std::vector<std::uint64_t>{config.seeds.front()};
    TraceAccumulator accumulator;
    double iteration_sum = 0.0;
    bool all_converged = true;
    for (std::uint64_t seed : seeds) {
      std::vector<double> trace;
      const RunResult run = run_single(method_config, seed, &trace, false);
      accumulator.add(trace);
      if (run.converged) {
        iteration_sum += static_cast<double>(run.iterations_to_tol);
      } else {
        all_converged = false;
      }
    }
    MethodTrace trace;
    trace.method = method;
    trace.all_converged = all_converged;
    trace.mean_iterations =
        all_converged ? iteration_sum / static_cast<double>(seeds.size()) : kInf;
    trace.mean_mse = accumulator.mean();
    result.methods.push_back(std::move(trace));
  }
  return result;
}

void write_compare_csv(std::ostream& out, const CompareResult& result, long log_every) {
  out << "method,k,mean_mse\n";
  for (const MethodTrace& trace : result.methods) {
    for (std::size_t k = 0; k < trace.mean_mse.size(); ++k) {
      if (k % static_cast<std::size_t>(log_every) != 0 && k + 1 != trace.mean_mse.size()) {
        continue;
      }
      out << method_name(trace.method) << ',' << k << ','
          << format_double(trace.mean_mse[k]) << '\n';
    }
  }
}

}  // namespace pdmm
