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
// Experiment runner. Subcommands:
//   run      one (method, seed) run -> RunRecord CSV
//   sweep    (gamma_p, gamma_d) grid -> iterations/segments-to-tol table
//   loss     transmission-loss study over seeds -> mean MSE trajectories
//   compare  method comparison under a perfect channel
//
// Exit codes: 0 success/converged, 1 configuration error, 2 budget exhausted
// (or a failed ordering assertion for `loss`).

#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pdmm/experiment.hpp"
#include "pdmm/penalty.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string method;
  std::string init;
  std::string transport;
  std::string out_path;
  double gamma_p = -1.0;
  double gamma_d = -1.0;
  double rho = -1.0;
  double gamma_b = -1.0;
  double loss = -1.0;
  double tol = -1.0;
  long max_iter = -1;
  long log_every = -1;
  std::vector<std::uint64_t> seeds;
  long num_seeds = -1;
  std::string problem_file;
  int grid_rows = -1;
  int grid_cols = -1;
  std::uint64_t t_seed = 0;
  bool t_seed_set = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON config file (flags override it)");
  cmd->add_option("--method", flags.method,
                  "pdmm-sync | pdmm-async-cyclic | pdmm-one-node | pdmm-two-node | "
                  "admm-sync | admm-async | gossip | broadcast");
  cmd->add_option("--gamma-p", flags.gamma_p, "primal penalty parameter");
  cmd->add_option("--gamma-d", flags.gamma_d, "dual penalty parameter");
  cmd->add_option("--rho", flags.rho, "ADMM penalty parameter");
  cmd->add_option("--gamma-b", flags.gamma_b, "broadcast gossip mixing weight");
  cmd->add_option("--loss", flags.loss, "loss percentage in [0, 100]");
  cmd->add_option("--transport", flags.transport, "auto | broadcast | p2p");
  cmd->add_option("--seeds", flags.seeds, "seed list");
  cmd->add_option("--num-seeds", flags.num_seeds, "shorthand for seeds 1..N");
  cmd->add_option("--tol", flags.tol, "MSE convergence threshold");
  cmd->add_option("--max-iter", flags.max_iter, "iteration budget");
  cmd->add_option("--init", flags.init, "x-equals-t | zeros");
  cmd->add_option("--out", flags.out_path, "CSV output path (default: stdout)");
  cmd->add_option("--log-every", flags.log_every, "row thinning for CSV output");
  cmd->add_option("--problem", flags.problem_file, "averaging problem JSON file");
  cmd->add_option("--grid-rows", flags.grid_rows, "generator: grid rows");
  cmd->add_option("--grid-cols", flags.grid_cols, "generator: grid cols");
  cmd->add_option("--t-seed", flags.t_seed, "generator: measurement seed")
      ->each([&flags](const std::string&) { flags.t_seed_set = true; });
}

pdmm::ExperimentConfig resolve_config(const CommonFlags& flags) {
  pdmm::ExperimentConfig config;
  if (!flags.config_path.empty()) {
    config = pdmm::config_from_json_file(flags.config_path);
  }
  if (!flags.method.empty()) config.method = pdmm::parse_method(flags.method);
  if (!flags.init.empty()) config.init = pdmm::parse_init_mode(flags.init);
  if (!flags.transport.empty()) config.transport = pdmm::parse_transport(flags.transport);
  if (flags.gamma_p > 0.0) config.gamma_p = flags.gamma_p;
  if (flags.gamma_d > 0.0) config.gamma_d = flags.gamma_d;
  if (flags.rho > 0.0) config.rho = flags.rho;
  if (flags.gamma_b > 0.0) config.gamma_b = flags.gamma_b;
  if (flags.loss >= 0.0) config.loss_pct = flags.loss;
  if (!flags.seeds.empty()) config.seeds = flags.seeds;
  if (flags.num_seeds > 0 && flags.seeds.empty()) {
    config.seeds.clear();
    for (long s = 1; s <= flags.num_seeds; ++s) {
      config.seeds.push_back(static_cast<std::uint64_t>(s));
    }
  }
  if (flags.tol > 0.0) config.tol = flags.tol;
  if (flags.max_iter > 0) config.max_iter = flags.max_iter;
  if (flags.log_every > 0) config.log_every = flags.log_every;
  if (!flags.problem_file.empty()) config.problem_file = flags.problem_file;
  if (flags.grid_rows > 0) config.grid_rows = flags.grid_rows;
  if (flags.grid_cols > 0) config.grid_cols = flags.grid_cols;
  if (flags.t_seed_set) config.t_seed = flags.t_seed;
  pdmm::validate_config(config);
  return config;
}

// Writes to --out or stdout.
class OutputTarget {
 public:
  explicit OutputTarget(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw std::invalid_argument("cannot open output file: " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

int cmd_run(const CommonFlags& flags) {
  const pdmm::ExperimentConfig config = resolve_config(flags);
  const pdmm::RunResult result = pdmm::run_single(config, config.seeds.front());
  OutputTarget out(flags.out_path);
  pdmm::write_run_csv(out.stream(), result);
  std::cerr << "method=" << pdmm::method_name(config.method)
            << " converged=" << (result.converged ? 1 : 0)
            << " iterations=" << result.iterations_to_tol << " final_mse=" << result.final_mse
            << " tx=" << result.transmissions << "\n";
  return result.converged ? 0 : 2;
}

int cmd_sweep(const CommonFlags& flags, const std::vector<double>& gammas) {
  pdmm::ExperimentConfig config = resolve_config(flags);
  if (config.method != pdmm::Method::kPdmmSync &&
      config.method != pdmm::Method::kPdmmAsyncCyclic) {
    config.method = pdmm::Method::kPdmmSync;
  }
  const pdmm::SweepResult result = pdmm::run_sweep(config, gammas);
  OutputTarget out(flags.out_path);
  pdmm::write_sweep_csv(out.stream(), result);
  if (result.argmin_index >= 0) {
    const pdmm::SweepCell& best = result.cells[result.argmin_index];
    std::cerr << "argmin gamma_p=" << best.gamma_p << " gamma_d=" << best.gamma_d
              << " count=" << best.count << "\n";
  } else {
    std::cerr << "argmin: no converged cell\n";
  }
  return 0;
}

int cmd_loss(const CommonFlags& flags, const std::vector<double>& losses) {
  pdmm::ExperimentConfig config = resolve_config(flags);
  config.init = pdmm::InitMode::kZeros;  // losses require globally known starts
  const pdmm::LossResult result = pdmm::run_loss(config, losses);
  OutputTarget out(flags.out_path);
  pdmm::write_loss_csv(out.stream(), result, config.log_every);
  bool all_finite = true;
  for (const pdmm::LossLevel& level : result.levels) {
    std::cerr << "loss=" << level.loss_pct << " mean_iterations=" << level.mean_iterations
              << " all_converged=" << (level.all_converged ? 1 : 0) << "\n";
    all_finite = all_finite && level.all_converged;
  }
  std::cerr << "ordered=" << (result.ordered ? 1 : 0) << "\n";
  return (result.ordered && all_finite) ? 0 : 2;
}

int cmd_compare(const CommonFlags& flags) {
  const pdmm::ExperimentConfig config = resolve_config(flags);
  const pdmm::CompareResult result = pdmm::run_compare(config);
  OutputTarget out(flags.out_path);
  pdmm::write_compare_csv(out.stream(), result, config.log_every);
  for (const pdmm::MethodTrace& trace : result.methods) {
    std::cerr << "method=" << pdmm::method_name(trace.method)
              << " mean_iterations=" << trace.mean_iterations
              << " all_converged=" << (trace.all_converged ? 1 : 0) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PDMM distributed-averaging experiment runner"};
  app.require_subcommand(1);

  CommonFlags run_flags, sweep_flags, loss_flags, compare_flags;
  std::vector<double> gammas = {0.25, 0.5, 1.0, 2.0, 4.0};
  std::vector<double> losses = {0.0, 20.0, 40.0};

  CLI::App* run = app.add_subcommand("run", "one (method, seed) run -> CSV");
  add_common_flags(run, run_flags);

  CLI::App* sweep = app.add_subcommand("sweep", "(gamma_p, gamma_d) grid sweep");
  add_common_flags(sweep, sweep_flags);
  sweep->add_option("--gammas", gammas, "gamma grid values");

  CLI::App* loss = app.add_subcommand("loss", "transmission-loss study");
  add_common_flags(loss, loss_flags);
  loss->add_option("--losses", losses, "loss percentages");

  CLI::App* compare = app.add_subcommand("compare", "method comparison, perfect channel");
  add_common_flags(compare, compare_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_flags);
    if (sweep->parsed()) return cmd_sweep(sweep_flags, gammas);
    if (loss->parsed()) return cmd_loss(loss_flags, losses);
    if (compare->parsed()) return cmd_compare(compare_flags);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
