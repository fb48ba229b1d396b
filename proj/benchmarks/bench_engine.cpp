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

#include <benchmark/benchmark.h>

#include <random>

#include "pdmm/baselines.hpp"
#include "pdmm/diagnostics.hpp"
#include "pdmm/engine.hpp"
#include "pdmm/linalg.hpp"

namespace {

using namespace pdmm;

struct Fixture {
  GraphProblem problem;
  PenaltyConfig penalty;
  Eigen::VectorXd t;
};

Fixture make_fixture(int rows, int cols) {
  GraphTopology topology = grid_topology(rows, cols);
  std::mt19937_64 rng(1);
  Eigen::VectorXd t(topology.node_count());
  for (int i = 0; i < t.size(); ++i) t[i] = uniform_unit(rng);
  GraphProblem problem = build_averaging_problem(t, std::move(topology));
  PenaltyConfig penalty = scalar_penalty(1.0, 1.0, problem);
  return Fixture{std::move(problem), std::move(penalty), std::move(t)};
}

TransportModel broadcast_transport() {
  TransportModel transport;
  transport.mode = TransportModel::Mode::kBroadcast;
  return transport;
}

void BM_SyncRound(benchmark::State& state) {
  const Fixture f = make_fixture(static_cast<int>(state.range(0)),
                                 static_cast<int>(state.range(0)));
  Simulator sim(f.problem, f.penalty, {ScheduleKind::kSynchronous, 0},
                broadcast_transport(), state_from_x(f.problem, f.t));
  for (auto _ : state) {
    sim.step();
    benchmark::DoNotOptimize(sim.state().x.front());
  }
  state.SetItemsProcessed(state.iterations() * f.problem.topology.node_count());
}
BENCHMARK(BM_SyncRound)->Arg(10)->Arg(20);

void BM_AsyncActivation(benchmark::State& state) {
  const Fixture f = make_fixture(10, 10);
  Simulator sim(f.problem, f.penalty, {ScheduleKind::kCyclicAsync, 0},
                broadcast_transport(), state_from_x(f.problem, f.t));
  for (auto _ : state) {
    sim.step();
    benchmark::DoNotOptimize(sim.state().x.front());
  }
}
BENCHMARK(BM_AsyncActivation);

void BM_ScalarSyncRound(benchmark::State& state) {
  const Fixture f = make_fixture(10, 10);
  ScalarAveragingState scalar = scalar_averaging_init(f.problem.topology, f.t);
  for (auto _ : state) {
    pdmm_avg_sync_round(scalar, f.t, 1.0, 1.0, f.problem.topology);
    benchmark::DoNotOptimize(scalar.x[0]);
  }
}
BENCHMARK(BM_ScalarSyncRound);

void BM_GossipStep(benchmark::State& state) {
  const Fixture f = make_fixture(10, 10);
  ScalarAveragingState scalar = scalar_averaging_init(f.problem.topology, f.t);
  std::mt19937_64 rng(2);
  for (auto _ : state) {
    gossip_step(scalar,
                static_cast<int>(uniform_index(rng, f.problem.topology.edge_count())),
                f.problem.topology);
    benchmark::DoNotOptimize(scalar.x[0]);
  }
}
BENCHMARK(BM_GossipStep);

void BM_AdmmSyncRound(benchmark::State& state) {
  const Fixture f = make_fixture(10, 10);
  ScalarAveragingState scalar = scalar_averaging_init(f.problem.topology, f.t);
  for (auto _ : state) {
    admm_avg_sync_round(scalar, f.t, 1.0, f.problem.topology);
    benchmark::DoNotOptimize(scalar.x[0]);
  }
}
BENCHMARK(BM_AdmmSyncRound);

void BM_Lemma5Gap(benchmark::State& state) {
  const Fixture f = make_fixture(10, 10);
  const SaddleCertificate cert = averaging_certificate(f.problem, f.t);
  Simulator sim(f.problem, f.penalty, {ScheduleKind::kSynchronous, 0},
                broadcast_transport(), state_from_x(f.problem, f.t));
  const IterateState before = sim.state();
  sim.step();
  const IterateState after = sim.state();
  for (auto _ : state) {
    benchmark::DoNotOptimize(lemma5_gap(before, after, cert, f.problem, f.penalty).slack);
  }
}
BENCHMARK(BM_Lemma5Gap);

void BM_AveragingCertificate(benchmark::State& state) {
  const Fixture f = make_fixture(10, 10);
  for (auto _ : state) {
    benchmark::DoNotOptimize(averaging_certificate(f.problem, f.t).delta_star.size());
  }
}
BENCHMARK(BM_AveragingCertificate);

}  // namespace

BENCHMARK_MAIN();
