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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pdmm/experiment.hpp"

using namespace pdmm;

namespace {

ExperimentConfig small_grid_config() {
  ExperimentConfig config;
  config.grid_rows = 4;
  config.grid_cols = 4;
  config.t_seed = 3;
  config.max_iter = 5000;
  return config;
}

std::string csv_of(const RunResult& result) {
  std::ostringstream out;
  write_run_csv(out, result);
  return out.str();
}

}  // namespace

TEST_CASE("config JSON parsing and validation") {
  const std::string text = R"({
    "grid_rows": 5, "grid_cols": 4, "t_seed": 9,
    "method": "pdmm-async-cyclic", "gamma_p": 2.0, "gamma_d": 0.5,
    "loss_pct": 20.0, "seeds": [1, 2, 3], "tol": 1e-5,
    "max_iter": 777, "init": "zeros", "log_every": 10
  })";
  const ExperimentConfig config = config_from_json(text);
  CHECK(config.grid_rows == 5);
  CHECK(config.method == Method::kPdmmAsyncCyclic);
  CHECK(config.gamma_d == 0.5);
  CHECK(config.seeds.size() == 3);
  CHECK(config.init == InitMode::kZeros);
  CHECK(config.max_iter == 777);

  CHECK_THROWS_AS(config_from_json("{\"method\": \"sgd\"}"), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json("{\"tol\": -1}"), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json("{\"loss_pct\": 130}"), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json("{\"loss_pct\": 10, \"transport\": \"broadcast\"}"),
                  std::invalid_argument);
  CHECK_THROWS_AS(config_from_json("not json"), std::invalid_argument);

  CHECK(parse_method("gossip") == Method::kGossip);
  CHECK(method_name(Method::kPdmmTwoNode) == "pdmm-two-node");
  CHECK(method_is_sync(Method::kAdmmSync));
  CHECK_FALSE(method_is_randomized(Method::kPdmmAsyncCyclic));
}

TEST_CASE("generator: grid instance with uniform measurements") {
  ExperimentConfig config;
  config.grid_rows = 10;
  config.grid_cols = 10;
  const AveragingInstance instance = instance_from_config(config);
  CHECK(instance.topology.node_count() == 100);
  CHECK(instance.topology.edge_count() == 180);
  CHECK(instance.t.minCoeff() >= 0.0);
  CHECK(instance.t.maxCoeff() < 1.0);

  // Same seed, same instance; different seed, different measurements.
  const AveragingInstance again = instance_from_config(config);
  CHECK((again.t - instance.t).cwiseAbs().maxCoeff() == 0.0);
  ExperimentConfig other = config;
  other.t_seed = 2;
  CHECK((instance_from_config(other).t - instance.t).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("run_single: every averaging-consistent method converges on the small grid") {
  for (const std::string name : {"pdmm-sync", "pdmm-async-cyclic", "pdmm-one-node",
                                 "pdmm-two-node", "admm-sync", "admm-async", "gossip"}) {
    ExperimentConfig config = small_grid_config();
    config.method = parse_method(name);
    config.max_iter = method_is_sync(config.method) ? 2000 : 100000;
    const RunResult result = run_single(config, 1);
    INFO(name);
    CHECK(result.converged);
    CHECK(result.final_mse <= config.tol);
    CHECK(result.rows.front().k == 0);
    CHECK(result.rows.front().mse == doctest::Approx(result.initial_mse));
  }

  // Broadcast gossip settles on a random consensus point; its error drops
  // without necessarily crossing the averaging tolerance.
  ExperimentConfig config = small_grid_config();
  config.method = Method::kBroadcast;
  config.max_iter = 100000;
  const RunResult broadcast = run_single(config, 1);
  CHECK(broadcast.final_mse < 0.1 * broadcast.initial_mse);
}

TEST_CASE("run_single is deterministic: byte-identical CSV on reruns") {
  ExperimentConfig config = small_grid_config();
  config.method = Method::kPdmmOneNode;
  config.max_iter = 100000;
  config.log_every = 50;
  const std::string a = csv_of(run_single(config, 42));
  const std::string b = csv_of(run_single(config, 42));
  CHECK(a == b);
  CHECK(a.rfind("k,mse,primal_res,dual_res,lemma5_slack,tx\n", 0) == 0);

  config.loss_pct = 25.0;
  config.method = Method::kPdmmSync;
  config.init = InitMode::kZeros;
  const std::string c = csv_of(run_single(config, 42));
  const std::string d = csv_of(run_single(config, 42));
  CHECK(c == d);
}

TEST_CASE("run_single: lemma5 column is present exactly when it applies") {
  ExperimentConfig config = small_grid_config();
  config.method = Method::kPdmmSync;
  const RunResult sync_run = run_single(config, 1);
  bool any_lemma5 = false;
  for (const RunRow& row : sync_run.rows) {
    if (row.k > 0 && row.has_lemma5) {
      any_lemma5 = true;
      CHECK(row.lemma5_slack >= -1e-8);
    }
  }
  CHECK(any_lemma5);

  // Condition violated: the column stays empty.
  config.gamma_p = config.gamma_d = 0.5;
  config.max_iter = 50;
  for (const RunRow& row : run_single(config, 1).rows) CHECK_FALSE(row.has_lemma5);
}

TEST_CASE("single-node graph converges at iteration zero") {
  ExperimentConfig config;
  config.grid_rows = 1;
  config.grid_cols = 1;
  const RunResult result = run_single(config, 1);
  CHECK(result.converged);
  CHECK(result.iterations_to_tol == 0);
  CHECK(result.final_mse == 0.0);
}

TEST_CASE("total loss never converges and is flagged") {
  ExperimentConfig config = small_grid_config();
  config.method = Method::kPdmmSync;
  config.loss_pct = 100.0;
  config.init = InitMode::kZeros;
  config.max_iter = 300;
  const RunResult result = run_single(config, 1);
  CHECK_FALSE(result.converged);
}

TEST_CASE("sweep: condition-satisfying cells converge, argmin exists") {
  ExperimentConfig config;
  config.grid_rows = 3;
  config.grid_cols = 3;
  config.method = Method::kPdmmSync;
  config.max_iter = 3000;
  const std::vector<double> gammas = {0.5, 1.0, 2.0};
  const SweepResult sweep = run_sweep(config, gammas);
  REQUIRE(sweep.cells.size() == 9);
  REQUIRE(sweep.argmin_index >= 0);
  for (const SweepCell& cell : sweep.cells) {
    if (cell.gamma_p * cell.gamma_d >= 1.0) CHECK(cell.converged);
  }
  std::ostringstream out;
  write_sweep_csv(out, sweep);
  CHECK(out.str().rfind("gamma_p,gamma_d,count,converged\n", 0) == 0);

  ExperimentConfig bad = config;
  bad.method = Method::kGossip;
  CHECK_THROWS_AS(run_sweep(bad, gammas), std::invalid_argument);

  // An oversized penalty only slows the method down.
  const SweepCell& best = sweep.cells[sweep.argmin_index];
  ExperimentConfig huge = config;
  huge.gamma_p = 64.0;
  huge.gamma_d = 1.0;
  huge.max_iter = 100000;
  const RunResult slow = run_single(huge, 1, nullptr, false);
  CHECK(slow.converged);
  CHECK(slow.iterations_to_tol > best.count);
}

TEST_CASE("synchronous PDMM and ADMM decay at a stable geometric rate") {
  for (Method method : {Method::kPdmmSync, Method::kAdmmSync}) {
    ExperimentConfig config = small_grid_config();
    config.method = method;
    config.tol = 1e-280;  // never triggers; run the full horizon
    config.max_iter = 100;
    std::vector<double> trace;
    run_single(config, 1, &trace, false);
    REQUIRE(trace.size() > 30);
    // The iterates carry a small period-2 oscillation, so compare the
    // log-MSE slope over two consecutive 10-round windows (both well above
    // the double-precision floor): a stabilized slope means linear decay.
    const double slope_a = (std::log(trace[20]) - std::log(trace[10])) / 10.0;
    const double slope_b = (std::log(trace[30]) - std::log(trace[20])) / 10.0;
    INFO(method_name(method));
    CHECK(slope_a < 0.0);
    CHECK(slope_b < 0.0);
    CHECK(std::abs(slope_b - slope_a) <= 0.3 * std::abs(slope_a));
  }
}

TEST_CASE("loss study: ordering on the small grid over 10 seeds") {
  ExperimentConfig config = small_grid_config();
  config.method = Method::kPdmmSync;
  config.init = InitMode::kZeros;
  config.seeds.clear();
  for (std::uint64_t s = 1; s <= 10; ++s) config.seeds.push_back(s);
  const LossResult result = run_loss(config, {0.0, 20.0, 40.0});
  REQUIRE(result.levels.size() == 3);
  for (const LossLevel& level : result.levels) CHECK(level.all_converged);
  CHECK(result.ordered);
  CHECK(result.levels[0].mean_iterations < result.levels[2].mean_iterations);

  // Zeros init is mandatory.
  ExperimentConfig wrong = config;
  wrong.init = InitMode::kXEqualsT;
  CHECK_THROWS_AS(run_loss(wrong, {0.0}), std::invalid_argument);

  std::ostringstream out;
  write_loss_csv(out, result, 10);
  CHECK(out.str().rfind("loss_pct,k,mean_mse\n", 0) == 0);
}

TEST_CASE("comparison runs the full method roster") {
  ExperimentConfig config = small_grid_config();
  config.max_iter = 100000;
  config.seeds = {1, 2, 3, 4, 5};
  const CompareResult result = run_compare(config);
  REQUIRE(result.methods.size() == 7);
  for (const MethodTrace& trace : result.methods) {
    INFO(method_name(trace.method));
    if (trace.method == Method::kBroadcast) {
      // Broadcast gossip settles on a random consensus value; the mean error
      // drops but need not cross the averaging tolerance.
      CHECK(trace.mean_mse.back() < 0.1 * trace.mean_mse.front());
    } else {
      CHECK(trace.all_converged);
    }
    CHECK(trace.mean_mse.front() == doctest::Approx(result.methods[0].mean_mse.front()));
  }

  ExperimentConfig lossy = config;
  lossy.loss_pct = 10.0;
  CHECK_THROWS_AS(run_compare(lossy), std::invalid_argument);
}

#ifdef PDMM_CLI_PATH
TEST_CASE("CLI end-to-end: exit codes and reproducible output files") {
  const std::string cli = PDMM_CLI_PATH;
  const std::string out_a = "cli_run_a.csv";
  const std::string out_b = "cli_run_b.csv";
  const std::string base = cli +
                           " run --grid-rows 4 --grid-cols 4 --method pdmm-sync"
                           " --max-iter 2000 --log-every 7 --out ";

  CHECK(std::system((base + out_a + " 2>/dev/null").c_str()) == 0);
  CHECK(std::system((base + out_b + " 2>/dev/null").c_str()) == 0);

  std::ifstream fa(out_a), fb(out_b);
  const std::string text_a((std::istreambuf_iterator<char>(fa)),
                           std::istreambuf_iterator<char>());
  const std::string text_b((std::istreambuf_iterator<char>(fb)),
                           std::istreambuf_iterator<char>());
  CHECK(text_a == text_b);
  CHECK(text_a.rfind("k,mse,primal_res,dual_res,lemma5_slack,tx\n", 0) == 0);
  std::remove(out_a.c_str());
  std::remove(out_b.c_str());

  // Config error -> exit 1.
  const int bad = std::system((cli + " run --method nonsense 2>/dev/null").c_str());
  CHECK(WEXITSTATUS(bad) == 1);

  // Budget exhausted -> exit 2 (divergent parameters).
  const int exhausted = std::system(
      (cli + " run --grid-rows 4 --grid-cols 4 --method pdmm-sync --gamma-p 0.5"
             " --gamma-d 0.5 --max-iter 200 --out cli_tmp.csv 2>/dev/null")
          .c_str());
  CHECK(WEXITSTATUS(exhausted) == 2);
  std::remove("cli_tmp.csv");
}
#endif
