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
#include <sstream>

#include "pdmm/diagnostics.hpp"
#include "pdmm/graph.hpp"
#include "test_support.hpp"

using namespace pdmm;
using pdmm_test::brute_force_min_1d;
using pdmm_test::scalar_vec;

namespace {

bool has_violation(const ValidationReport& report, const std::string& needle) {
  for (const auto& v : report.violations) {
    if (v.find(needle) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("topology adjacency and directed indexing") {
  GraphTopology topo(4, {{0, 1}, {1, 2}, {0, 3}});
  CHECK(topo.node_count() == 4);
  CHECK(topo.edge_count() == 3);
  CHECK(topo.directed_count() == 6);
  CHECK(topo.neighbors(1) == std::vector<int>{0, 2});
  CHECK(topo.degree(3) == 1);

  CHECK(topo.edge_index(1, 0) == 0);
  CHECK(topo.edge_index(2, 1) == 1);
  CHECK(topo.edge_index(0, 2) == -1);

  const int d01 = topo.directed_index(0, 1);
  const int d10 = topo.directed_index(1, 0);
  CHECK(d01 == 0);
  CHECK(d10 == 1);
  CHECK(GraphTopology::reverse(d01) == d10);
  CHECK(topo.owner_of(d10) == 1);
  CHECK(topo.neighbor_of(d10) == 0);
}

TEST_CASE("validate: minimal averaging instance is well-formed") {
  Eigen::VectorXd t(2);
  t << 1.0, 2.0;
  const GraphProblem problem = build_averaging_problem(t, path_topology(2));
  const ValidationReport report = validate_problem(problem);
  CHECK(report.ok);
  CHECK(report.violations.empty());
}

TEST_CASE("validate: self-loop is reported") {
  Eigen::VectorXd t(2);
  t << 0.0, 0.0;
  GraphProblem problem = build_averaging_problem(t, path_topology(2));
  problem.topology = GraphTopology(2, {{0, 0}});
  const ValidationReport report = validate_problem(problem);
  CHECK_FALSE(report.ok);
  CHECK(has_violation(report, "self-loop"));
}

TEST_CASE("validate: constraint row mismatch is reported") {
  Eigen::VectorXd t(2);
  t << 0.0, 0.0;
  GraphProblem problem = build_averaging_problem(t, path_topology(2));
  problem.constraints[0].A_lo = Eigen::MatrixXd::Ones(2, 1);  // c still has length 1
  const ValidationReport report = validate_problem(problem);
  CHECK_FALSE(report.ok);
  CHECK(has_violation(report, "row mismatch"));
}

TEST_CASE("validate: duplicates, bad columns and oracle dims are reported") {
  Eigen::VectorXd t(3);
  t << 0.0, 0.0, 0.0;
  GraphProblem problem = build_averaging_problem(t, GraphTopology(3, {{0, 1}, {0, 1}}));
  problem.constraints.push_back(problem.constraints[0]);
  CHECK(has_violation(validate_problem(problem), "duplicate edge"));

  GraphProblem column_bad = build_averaging_problem(t, path_topology(3));
  column_bad.constraints[0].A_hi = Eigen::MatrixXd::Ones(1, 2);
  CHECK(has_violation(validate_problem(column_bad), "column mismatch"));

  GraphProblem oracle_bad = build_averaging_problem(t, path_topology(3));
  oracle_bad.node_functions[2] = std::make_shared<ZeroFunction>(4);
  CHECK(has_violation(validate_problem(oracle_bad), "oracle dimension mismatch"));

  GraphProblem range_bad = build_averaging_problem(t, GraphTopology(3, {{0, 7}}));
  CHECK(has_violation(validate_problem(range_bad), "endpoint out of range"));
}

TEST_CASE("build_averaging_problem encodes the consensus constraint") {
  Eigen::VectorXd t(3);
  t << 0.0, 1.0, 2.0;
  const GraphProblem problem = build_averaging_problem(t, path_topology(3));
  CHECK(validate_problem(problem).ok);
  for (int e = 0; e < problem.topology.edge_count(); ++e) {
    CHECK(problem.constraints[e].A_lo(0, 0) == 1.0);
    CHECK(problem.constraints[e].A_hi(0, 0) == -1.0);
    CHECK(problem.constraints[e].c[0] == 0.0);
  }
  // Hand arithmetic: t_ave = (0+1+2)/3 = 1; the certificate at x* = 1
  // satisfies the optimality conditions.
  CHECK(average(t) == doctest::Approx(1.0));
  const SaddleCertificate cert = averaging_certificate(problem, t);
  CHECK(cert.x_star[0][0] == doctest::Approx(1.0));
  CHECK(check_certificate(cert, problem).ok);

  // All-equal measurements: optimum is the common value.
  Eigen::VectorXd t_eq(2);
  t_eq << 3.0, 3.0;
  const GraphProblem equal = build_averaging_problem(t_eq, path_topology(2));
  const SaddleCertificate cert_eq = averaging_certificate(equal, t_eq);
  CHECK(cert_eq.x_star[0][0] == doctest::Approx(3.0));
  CHECK(check_certificate(cert_eq, equal).ok);

  CHECK_THROWS_AS(build_averaging_problem(t, path_topology(4)), std::invalid_argument);
}

TEST_CASE("edgeless averaging instance minimizes separably") {
  Eigen::VectorXd t(2);
  t << 0.0, 4.0;
  const GraphProblem problem = build_averaging_problem(t, GraphTopology(2, {}));
  CHECK(validate_problem(problem).ok);
  // With no constraints each node minimizes its own cost.
  for (int i = 0; i < 2; ++i) {
    const Eigen::VectorXd xi = problem.node_functions[i]->solve_regularized(
        Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Zero(1));
    CHECK(xi[0] == doctest::Approx(t[i]));
  }
}

TEST_CASE("hinge pair: evaluation, closed-form solve, solution set") {
  const GraphProblem problem = build_hinge_pair_problem();
  CHECK(validate_problem(problem).ok);

  // f_1(2) = 1 by the piecewise formula.
  CHECK(problem.node_functions[0]->evaluate(scalar_vec(2.0)) == doctest::Approx(1.0));
  CHECK(problem.node_functions[1]->evaluate(scalar_vec(-2.0)) == doctest::Approx(1.0));
  CHECK(problem.node_functions[1]->evaluate(scalar_vec(0.0)) == doctest::Approx(0.0));

  // Brute-force oracle for argmin max(x-1,0) + x^2/2: flat piece, minimum 0.
  const double expected = brute_force_min_1d(
      [](double x) { return std::max(x - 1.0, 0.0) + 0.5 * x * x; }, -5.0, 5.0);
  CHECK(expected == doctest::Approx(0.0).epsilon(1e-6));
  const Eigen::VectorXd got = problem.node_functions[0]->solve_regularized(
      Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1));
  CHECK(got[0] == doctest::Approx(0.0));

  // Any x_1 = x_2 = s in [-1,1] attains objective 0 and admits the zero dual.
  for (double s : {-1.0, -0.25, 0.0, 0.6, 1.0}) {
    CHECK(problem.node_functions[0]->evaluate(scalar_vec(s)) == 0.0);
    CHECK(problem.node_functions[1]->evaluate(scalar_vec(s)) == 0.0);
    CHECK(check_certificate(hinge_certificate(s), problem).ok);
  }
}

TEST_CASE("shipped oracles satisfy the regularized-solve optimality condition") {
  std::mt19937_64 rng(7);
  // Scalar oracles against the brute-force minimizer and the subgradient test.
  const HingeFunction hinge;
  const NegatedHingeFunction neg_hinge;
  const QuadraticFunction quad(0.75);
  for (int trial = 0; trial < 200; ++trial) {
    const double q = 0.05 + 4.0 * uniform_unit(rng);
    const double b = 8.0 * (uniform_unit(rng) - 0.5);
    const Eigen::MatrixXd qm = Eigen::MatrixXd::Constant(1, 1, q);
    const Eigen::VectorXd bv = scalar_vec(b);

    // Any minimizer of f(v) + q v^2/2 - b v lies within this radius.
    const double radius = (std::abs(b) + 1.0) / q + 5.0;
    for (const NodeFunction* f :
         {static_cast<const NodeFunction*>(&hinge),
          static_cast<const NodeFunction*>(&neg_hinge),
          static_cast<const NodeFunction*>(&quad)}) {
      const Eigen::VectorXd x = f->solve_regularized(qm, bv);
      // b - Q x* must be a subgradient of f at x*.
      CHECK(f->subgradient_distance(x, bv - qm * x) <= 1e-10);
      const double brute = brute_force_min_1d(
          [&](double v) { return f->evaluate(scalar_vec(v)) + 0.5 * q * v * v - b * v; },
          -radius, radius);
      CHECK(x[0] == doctest::Approx(brute).epsilon(1e-4));
    }
  }

  // Vector quadratic oracle with a random SPD Q.
  Eigen::VectorXd target(3);
  target << 1.0, -2.0, 0.5;
  const QuadraticFunction vector_quad(target);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd a(3, 3);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) a(r, c) = standard_normal(rng);
    }
    const Eigen::MatrixXd q = a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(3, 3);
    Eigen::VectorXd b(3);
    for (int r = 0; r < 3; ++r) b[r] = standard_normal(rng);
    const Eigen::VectorXd x = vector_quad.solve_regularized(q, b);
    CHECK(vector_quad.subgradient_distance(x, b - q * x) <= 1e-10);
  }

  const ZeroFunction zero(2);
  const Eigen::MatrixXd q2 = 2.0 * Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd b2(2);
  b2 << 3.0, -1.0;
  CHECK(zero.subgradient_distance(zero.solve_regularized(q2, b2), b2 - q2 * zero.solve_regularized(q2, b2)) <= 1e-12);
}

TEST_CASE("conjugates of the shipped oracles") {
  const QuadraticFunction quad(2.0);  // f*(y) = y^2/2 + 2 y
  CHECK(quad.conjugate(scalar_vec(3.0)) == doctest::Approx(0.5 * 9.0 + 6.0));

  const HingeFunction hinge;  // f*(y) = y on [0,1]
  CHECK(hinge.conjugate(scalar_vec(0.5)) == doctest::Approx(0.5));
  CHECK(std::isinf(hinge.conjugate(scalar_vec(1.5))));
  CHECK(std::isinf(hinge.conjugate(scalar_vec(-0.1))));

  const NegatedHingeFunction neg;  // f*(y) = -y on [-1,0]
  CHECK(neg.conjugate(scalar_vec(-0.5)) == doctest::Approx(0.5));
  CHECK(std::isinf(neg.conjugate(scalar_vec(0.5))));

  const ZeroFunction zero(1);
  CHECK(zero.conjugate(scalar_vec(0.0)) == 0.0);
  CHECK(std::isinf(zero.conjugate(scalar_vec(0.3))));

  // Fenchel check against the definition f*(y) = sup_x (xy - f(x)) by scan.
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const double y = 0.05 + 0.9 * uniform_unit(rng);  // interior of the domain
    const double maximizer = brute_force_min_1d(
        [&](double x) { return std::max(x - 1.0, 0.0) - y * x; }, -50.0, 50.0, 400001);
    const double scanned_value = y * maximizer - std::max(maximizer - 1.0, 0.0);
    CHECK(hinge.conjugate(scalar_vec(y)) ==
          doctest::Approx(scanned_value).epsilon(1e-3));
  }
}

TEST_CASE("averaging problem JSON round trip") {
  Eigen::VectorXd t(3);
  t << 0.25, 0.5, 0.75;
  const AveragingInstance instance{path_topology(3), t};

  std::ostringstream out;
  save_averaging_instance(out, instance);
  std::istringstream in(out.str());
  const AveragingInstance loaded = load_averaging_instance(in);

  CHECK(loaded.topology.node_count() == 3);
  CHECK(loaded.topology.edge_count() == 2);
  CHECK((loaded.t - t).cwiseAbs().maxCoeff() == 0.0);

  std::istringstream bad("{\"edges\": []}");
  CHECK_THROWS_AS(load_averaging_instance(bad), std::invalid_argument);
  std::istringstream dup(R"({"nodes":[{"id":1,"t":0},{"id":1,"t":1}]})");
  CHECK_THROWS_AS(load_averaging_instance(dup), std::invalid_argument);
  std::istringstream not_json("not json");
  CHECK_THROWS_AS(load_averaging_instance(not_json), std::invalid_argument);
}
