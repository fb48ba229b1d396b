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

#include <cmath>
#include <random>

#include "pdmm/diagnostics.hpp"
#include "pdmm/engine.hpp"
#include "pdmm/linalg.hpp"
#include "test_support.hpp"

using namespace pdmm;
using pdmm_test::random_state;
using pdmm_test::random_t;
using pdmm_test::state_from_certificate;

namespace {

TransportModel lossless_broadcast() {
  TransportModel t;
  t.mode = TransportModel::Mode::kBroadcast;
  return t;
}

TransportModel lossless_p2p() {
  TransportModel t;
  t.mode = TransportModel::Mode::kPointToPoint;
  return t;
}

}  // namespace

TEST_CASE("x_update matches the hand-derived averaging value") {
  Eigen::VectorXd t(3);
  t << 0.0, 4.0, 0.0;
  const GraphProblem problem = build_averaging_problem(t, path_topology(3));
  const PenaltyConfig penalty = scalar_penalty(1.0, 1.0, problem);

  IterateState state = zero_state(problem);
  state.x[0][0] = 2.0;
  state.x[2][0] = 6.0;
  // (t_2 + x_1 + x_3) / (1 + 2 gamma_p) = (4 + 2 + 6) / 3 = 4
  CHECK(x_update(1, state, problem, penalty)[0] == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("x_update with no neighbors minimizes the node cost alone") {
  Eigen::VectorXd t(2);
  t << -3.0, 8.0;
  const GraphProblem problem = build_averaging_problem(t, GraphTopology(2, {}));
  const PenaltyConfig penalty = scalar_penalty(1.0, 1.0, problem);
  const IterateState state = zero_state(problem);
  CHECK(x_update(0, state, problem, penalty)[0] == doctest::Approx(-3.0));
  CHECK(x_update(1, state, problem, penalty)[0] == doctest::Approx(8.0));
}

TEST_CASE("x_update at the saddle point returns the average") {
  std::mt19937_64 rng(5);
  const Eigen::VectorXd t = random_t(6, rng);
  const GraphProblem problem = build_averaging_problem(t, path_topology(6));
  const PenaltyConfig penalty = scalar_penalty(1.0, 1.0, problem);
  const SaddleCertificate cert = averaging_certificate(problem, t);
  REQUIRE(check_certificate(cert, problem).ok);
  const IterateState state = state_from_certificate(problem, cert);
  for (int i = 0; i < 6; ++i) {
    CHECK(x_update(i, state, problem, penalty)[0] ==
          doctest::Approx(t.mean()).epsilon(1e-12));
  }
}

TEST_CASE("w_update matches the hand-derived value and the inverse-pair identity") {
  Eigen::VectorXd t(2);
  t << 0.0, 9.0;
  const GraphProblem problem = build_averaging_problem(t, path_topology(2));
  const PenaltyConfig penalty = scalar_penalty(1.0, 1.0, problem);

  IterateState state = zero_state(problem);
  state.x[1][0] = 4.0;
  // (x_2 + gamma_d A_12 lambda_{2|1} + gamma_d t_1) / (|N_1| + gamma_d) = 4/2 = 2
  CHECK(w_update(0, state, problem, penalty)[0] == doctest::Approx(2.0).epsilon(1e-12));

  // With P_d = P_p^{-1} the w-subproblem coincides with the x-subproblem.
  const PenaltyConfig inverse_pair = scalar_penalty(2.0, 0.5, problem);
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 25; ++trial) {
    const IterateState random = random_state(problem, rng);
    for (int i = 0; i < 2; ++i) {
      CHECK(std::abs(w_update(i, random, problem, inverse_pair)[0] -
                     x_update(i, random, problem, inverse_pair)[0]) <= 1e-12);
    }
  }

  // Empty neighborhood: plain minimizer of f.
  const GraphProblem isolated = build_averaging_problem(t, GraphTopology(2, {}));
  const PenaltyConfig iso_pen = scalar_penalty(1.0, 1.0, isolated);
  CHECK(w_update(1, zero_state(isolated), isolated, iso_pen)[0] == doctest::Approx(9.0));
}

TEST_CASE("lambda updates: w-map, carryover, identity penalty, simplified guard") {
  Eigen::VectorXd t(2);
  t << 0.0, 0.0;
  const GraphProblem problem = build_averaging_problem(t, path_topology(2));
  const PenaltyConfig penalty = scalar_penalty(1.0, 1.0, problem);
  const int d01 = problem.topology.directed_index(0, 1);
  const int d10 = problem.topology.directed_index(1, 0);

  IterateState state = zero_state(problem);
  state.x[1][0] = 4.0;

  Eigen::VectorXd w(1);
  w << 2.0;
  // lambda_{1|2} = lambda_{2|1} + (c - A_21 x_2 - A_12 w)/gamma_d = 0 - (-4 + 2) = 2
  const auto via_w = lambda_update_via_w(0, w, state, problem, penalty);
  CHECK(via_w.size() == 1);
  CHECK(via_w[0][0] == doctest::Approx(2.0).epsilon(1e-12));

  // Zero residual carries the neighbor's dual over.
  state.lambda[d10][0] = 0.7;
  Eigen::VectorXd w_match(1);
  w_match << 4.0;  // c - A_21*4 - A_12*4 = 0
  CHECK(lambda_update_via_w(0, w_match, state, problem, penalty)[0][0] ==
        doctest::Approx(0.7));

  // P_d = I: the correction is the raw constraint residual.
  state.lambda[d10][0] = 0.0;
  Eigen::VectorXd w_any(1);
  w_any << 1.25;
  const double residual = 0.0 - (-4.0) - 1.25;
  CHECK(lambda_update_via_w(0, w_any, state, problem, penalty)[0][0] ==
        doctest::Approx(residual));

  // Simplified path agrees in the inverse-pair regime and refuses otherwise.
  const auto simplified = lambda_update_simplified(0, w, state, problem, penalty);
  CHECK(simplified[0][0] == doctest::Approx(2.0).epsilon(1e-12));
  const PenaltyConfig off_regime = scalar_penalty(2.0, 1.0, problem);  // product 2
  CHECK_THROWS_AS(lambda_update_simplified(0, w, state, problem, off_regime),
                  std::logic_error);
  (void)d01;
}

TEST_CASE("conjugate-path dual update agrees with the w-path on quadratic oracles") {
  std::mt19937_64 rng(23);
  const Eigen::VectorXd t = random_t(5, rng);
  const GraphProblem problem =
      build_averaging_problem(t, GraphTopology(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}}));
  for (auto [gp, gd] : {std::pair{1.0, 1.0}, {0.5, 2.0}, {2.0, 3.0}}) {
    const PenaltyConfig penalty = scalar_penalty(gp, gd, problem);
    for (int trial = 0; trial < 40; ++trial) {
      const IterateState state = random_state(problem, rng, 2.0);
      for (int i = 0; i < 5; ++i) {
        const Eigen::VectorXd w = w_update(i, state, problem, penalty);
        const auto expected = lambda_update_via_w(i, w, state, problem, penalty);
        const auto got = lambda_update_via_conjugate(i, state, problem, penalty);
        REQUIRE(expected.size() == got.size());
        for (std::size_t idx = 0; idx < expected.size(); ++idx) {
          CHECK((expected[idx] - got[idx]).cwiseAbs().maxCoeff() <= 1e-10);
        }
      }
    }
  }
}

TEST_CASE("conjugate-path dual update is a fixed point at the saddle") {
  std::mt19937_64 rng(29);
  const Eigen::VectorXd t = random_t(4, rng);
  const GraphProblem problem = build_averaging_problem(t, path_topology(4));
  const PenaltyConfig penalty = scalar_penalty(1.0, 1.0, problem);
  const SaddleCertificate cert = averaging_certificate(problem, t);
  const IterateState state = state_from_certificate(problem, cert);
  for (int i = 0; i < 4; ++i) {
    const auto updated = lambda_update_via_conjugate(i, state, problem, penalty);
    const auto& neighbors = problem.topology.neighbors(i);
    for (std::size_t idx = 0; idx < neighbors.size(); ++idx) {
      const int d = problem.topology.directed_index(i, neighbors[idx]);
      CHECK((updated[idx] - state.lambda[d]).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
}

TEST_CASE("conjugate-path dual update matches the w-path on the hinge pair") {
  // Non-quadratic oracle: the dual subproblem is solved through the 1-D
  // reduction; agreement is limited by the bracketed search, not 1e-10.
  const GraphProblem problem = build_hinge_pair_problem();
  std::mt19937_64 rng(61);
  for (auto [gp, gd] : {std::pair{1.0, 1.0}, {1.0, 2.5}}) {
    const PenaltyConfig penalty = scalar_penalty(gp, gd, problem);
    for (int trial = 0; trial < 50; ++trial) {
      const IterateState state = random_state(problem, rng);
      for (int i = 0; i < 2; ++i) {
        const Eigen::VectorXd w = w_update(i, state, problem, penalty);
        const auto expected = lambda_update_via_w(i, w, state, problem, penalty);
        const auto got = lambda_update_via_conjugate(i, state, problem, penalty);
        CHECK((expected[0] - got[0]).cwiseAbs().maxCoeff() <= 1e-6);
      }
    }
  }
}

TEST_CASE("conjugate of the zero cost pins the stacked dual image at zero") {
  // Middle node of a path carries f = 0; its conjugate restricts
  // sum_j A^T lambda_{i|j} to zero.
  GraphProblem problem;
  problem.topology = path_topology(3);
  problem.dims = {1, 1, 1};
  problem.node_functions = {std::make_shared<QuadraticFunction>(1.0),
                            std::make_shared<ZeroFunction>(1),
                            std::make_shared<QuadraticFunction>(-1.0)};
  for (int e = 0; e < 2; ++e) {
    EdgeConstraint con;
    con.A_lo = Eigen::MatrixXd::Constant(1, 1, 1.0);
    con.A_hi = Eigen::MatrixXd::Constant(1, 1, -1.0);
    con.c = Eigen::VectorXd::Zero(1);
    problem.constraints.push_back(std::move(con));
  }
  REQUIRE(validate_problem(problem).ok);
  const PenaltyConfig penalty = scalar_penalty(1.0, 1.0, problem);

  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const IterateState state = random_state(problem, rng);
    const auto lam = lambda_update_via_conjugate(1, state, problem, penalty);
    // A_1 acts with sign -1 toward node 0 (edge (0,1), node 1 is the upper
    // endpoint) and +1 toward node 2.
    const double image = -lam[0][0] + lam[1][0];
    CHECK(std::abs(image) <= 1e-9);
  }
}

TEST_CASE("conjugate path refuses oracles without a conjugate") {
  class NoConjugate final : public NodeFunction {
   public:
    int dimension() const override { return 1; }
    double evaluate(const Eigen::VectorXd&) const override { return 0.0; }
    Eigen::VectorXd solve_regularized(const Eigen::MatrixXd& q,
                                      const Eigen::VectorXd& b) const override {
      return q.ldlt().solve(b);
    }
    double subgradient_distance(const Eigen::VectorXd&,
                                const Eigen::VectorXd& g) const override {
      return g.norm();
    }
  };

  Eigen::VectorXd t(2);
  t << 0.0, 1.0;
  GraphProblem problem = build_averaging_problem(t, path_topology(2));
  problem.node_functions[0] = std::make_shared<NoConjugate>();
  const PenaltyConfig penalty = scalar_penalty(1.0, 1.0, problem);
  const IterateState state = zero_state(problem);
  CHECK_THROWS_AS(lambda_update_via_conjugate(0, state, problem, penalty),
                  std::logic_error);
}

TEST_CASE("schedule driver: cyclic order, two-node ordering, determinism") {
  const GraphTopology topo = path_topology(3);

  ScheduleDriver cyclic({ScheduleKind::kCyclicAsync, 0}, topo);
  CHECK(cyclic.active_nodes(0) == std::vector<int>{0});
  CHECK(cyclic.active_nodes(1) == std::vector<int>{1});
  CHECK(cyclic.active_nodes(2) == std::vector<int>{2});
  CHECK(cyclic.active_nodes(3) == std::vector<int>{0});

  ScheduleDriver sync({ScheduleKind::kSynchronous, 0}, topo);
  CHECK(sync.active_nodes(0) == std::vector<int>{0, 1, 2});

  ScheduleDriver two_a({ScheduleKind::kTwoNodeRandomEdge, 42}, topo);
  ScheduleDriver two_b({ScheduleKind::kTwoNodeRandomEdge, 42}, topo);
  for (long k = 0; k < 50; ++k) {
    const auto nodes = two_a.active_nodes(k);
    CHECK(nodes.size() == 2);
    CHECK(nodes[0] < nodes[1]);  // lower endpoint updates first
    CHECK(nodes == two_b.active_nodes(k));
  }

  CHECK_THROWS_AS(ScheduleDriver({ScheduleKind::kTwoNodeRandomEdge, 0},
                                 GraphTopology(2, {})),
                  std::invalid_argument);
}

TEST_CASE("saddle state is a fixed point of every schedule") {
  std::mt19937_64 rng(37);
  const Eigen::VectorXd t = random_t(9, rng);
  const GraphProblem problem = build_averaging_problem(t, grid_topology(3, 3));
  const PenaltyConfig penalty = scalar_penalty(1.0, 1.0, problem);
  const SaddleCertificate cert = averaging_certificate(problem, t);
  REQUIRE(check_certificate(cert, problem).ok);
  const IterateState start = state_from_certificate(problem, cert);

  for (ScheduleKind kind : {ScheduleKind::kSynchronous, ScheduleKind::kCyclicAsync,
                            ScheduleKind::kRandomNode, ScheduleKind::kTwoNodeRandomEdge}) {
    Simulator sim(problem, penalty, {kind, 99}, lossless_broadcast(), start);
    sim.run(30);
    CHECK(max_state_difference(sim.state(), start) <= 1e-12);
  }
}

TEST_CASE("reference run: path averaging converges under the identity pair") {
  Eigen::VectorXd t(3);
  t << 0.0, 1.0, 2.0;
  const GraphProblem problem = build_averaging_problem(t, path_topology(3));
  const PenaltyConfig penalty = scalar_penalty(1.0, 1.0, problem);
  Simulator sim(problem, penalty, {ScheduleKind::kSynchronous, 0}, lossless_broadcast(),
                state_from_x(problem, t));
  long k = 0;
  for (; k < 200; ++k) {
    if (mse(sim.state().x, 1.0) <= 1e-4) break;
    sim.step();
  }
  CHECK(k < 200);
  CHECK(mse(sim.state().x, 1.0) <= 1e-4);
}

TEST_CASE("single-minimization and w-path trajectories coincide when P_d = P_p^{-1}") {
  std::mt19937_64 rng(41);
  const Eigen::VectorXd t = random_t(9, rng);
  const GraphProblem problem = build_averaging_problem(t, grid_topology(3, 3));

  for (auto [gp, gd] : {std::pair{1.0, 1.0}, {2.0, 0.5}, {0.25, 4.0}}) {
    const PenaltyConfig penalty = scalar_penalty(gp, gd, problem);
    for (ScheduleKind kind : {ScheduleKind::kSynchronous, ScheduleKind::kCyclicAsync,
                              ScheduleKind::kRandomNode, ScheduleKind::kTwoNodeRandomEdge}) {
      Simulator::Options via_w;
      via_w.lambda_path = LambdaPath::kViaW;
      Simulator::Options simplified;
      simplified.lambda_path = LambdaPath::kSimplified;
      Simulator a(problem, penalty, {kind, 7}, lossless_p2p(),
                  state_from_x(problem, t), via_w);
      Simulator b(problem, penalty, {kind, 7}, lossless_p2p(),
                  state_from_x(problem, t), simplified);
      for (long k = 0; k < 60; ++k) {
        a.step();
        b.step();
        CHECK(max_state_difference(a.state(), b.state()) <= 1e-12);
      }
    }
  }
}

TEST_CASE("identical seeds reproduce bit-identical trajectories") {
  std::mt19937_64 rng(43);
  const Eigen::VectorXd t = random_t(9, rng);
  const GraphProblem problem = build_averaging_problem(t, grid_topology(3, 3));
  const PenaltyConfig penalty = scalar_penalty(1.0, 2.0, problem);

  TransportModel lossy = lossless_p2p();
  lossy.loss_probability = 0.25;
  lossy.rng_seed = 5;

  Simulator a(problem, penalty, {ScheduleKind::kRandomNode, 3}, lossy,
              state_from_x(problem, t));
  Simulator b(problem, penalty, {ScheduleKind::kRandomNode, 3}, lossy,
              state_from_x(problem, t));
  for (long k = 0; k < 100; ++k) {
    a.step();
    b.step();
    CHECK(max_state_difference(a.state(), b.state()) == 0.0);
  }
}

TEST_CASE("condition-respecting configs converge on a small grid") {
  std::mt19937_64 rng(47);
  const Eigen::VectorXd t = random_t(25, rng);
  const GraphProblem problem = build_averaging_problem(t, grid_topology(5, 5));
  const double t_ave = t.mean();
  for (auto [gp, gd] : {std::pair{1.0, 1.0}, {0.5, 2.0}, {2.0, 2.0}}) {
    const PenaltyConfig penalty = scalar_penalty(gp, gd, problem);
    REQUIRE(check_condition(penalty).pass);
    Simulator sim(problem, penalty, {ScheduleKind::kSynchronous, 0}, lossless_broadcast(),
                  state_from_x(problem, t));
    long k = 0;
    for (; k < 2000; ++k) {
      if (mse(sim.state().x, t_ave) <= 1e-4) break;
      sim.step();
    }
    CHECK(mse(sim.state().x, t_ave) <= 1e-4);
  }
}

TEST_CASE("checkpoint JSON round trip preserves the state exactly") {
  std::mt19937_64 rng(53);
  const Eigen::VectorXd t = random_t(6, rng);
  const GraphProblem problem = build_averaging_problem(t, grid_topology(2, 3));
  IterateState state = random_state(problem, rng);
  state.iteration = 1234;

  const std::string text = state_to_json(state);
  const IterateState restored = state_from_json(text, problem);
  CHECK(restored.iteration == 1234);
  CHECK(max_state_difference(state, restored) == 0.0);

  CHECK_THROWS_AS(state_from_json("{\"x\": []}"), std::exception);
  IterateState truncated = state;
  truncated.lambda.pop_back();
  CHECK_THROWS_AS(state_from_json(state_to_json(truncated), problem),
                  std::invalid_argument);
}

TEST_CASE("simulator constructor guards") {
  Eigen::VectorXd t(2);
  t << 0.0, 1.0;
  const GraphProblem problem = build_averaging_problem(t, path_topology(2));
  const PenaltyConfig penalty = scalar_penalty(2.0, 1.0, problem);  // product 2
  const PenaltyConfig identity = scalar_penalty(1.0, 1.0, problem);

  Simulator::Options simplified;
  simplified.lambda_path = LambdaPath::kSimplified;
  CHECK_THROWS_AS(Simulator(problem, penalty, {ScheduleKind::kSynchronous, 0},
                            lossless_p2p(), zero_state(problem), simplified),
                  std::invalid_argument);

  Simulator::Options conjugate;
  conjugate.lambda_path = LambdaPath::kViaConjugate;
  CHECK_THROWS_AS(Simulator(problem, identity, {ScheduleKind::kSynchronous, 0},
                            lossless_broadcast(), zero_state(problem), conjugate),
                  std::invalid_argument);

  IterateState wrong = zero_state(problem);
  wrong.x.pop_back();
  CHECK_THROWS_AS(Simulator(problem, identity, {ScheduleKind::kSynchronous, 0},
                            lossless_p2p(), wrong),
                  std::invalid_argument);
}

TEST_CASE("full conjugate-path runs track the w-path") {
  std::mt19937_64 rng(59);
  const Eigen::VectorXd t = random_t(6, rng);
  const GraphProblem problem = build_averaging_problem(t, grid_topology(2, 3));
  const PenaltyConfig penalty = scalar_penalty(1.0, 1.5, problem);

  Simulator::Options conjugate;
  conjugate.lambda_path = LambdaPath::kViaConjugate;
  Simulator a(problem, penalty, {ScheduleKind::kCyclicAsync, 0}, lossless_p2p(),
              state_from_x(problem, t), conjugate);
  Simulator b(problem, penalty, {ScheduleKind::kCyclicAsync, 0}, lossless_p2p(),
              state_from_x(problem, t));
  for (long k = 0; k < 120; ++k) {
    a.step();
    b.step();
    CHECK(max_state_difference(a.state(), b.state()) <= 1e-9);
  }
}
