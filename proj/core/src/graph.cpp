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

#include "pdmm/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace pdmm {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
// Width of the band around a kink inside which the subdifferential is taken
// to be the full interval.
constexpr double kKinkBand = 1e-9;
}  // namespace

// --- GraphTopology ----------------------------------------------------------

GraphTopology::GraphTopology(int node_count, std::vector<Edge> edges)
    : node_count_(node_count), edges_(std::move(edges)) {
  neighbors_.resize(std::max(node_count_, 0));
  incident_.resize(std::max(node_count_, 0));
  for (int e = 0; e < static_cast<int>(edges_.size()); ++e) {
    const Edge& edge = edges_[e];
    const bool in_range = edge.i >= 0 && edge.i < node_count_ && edge.j >= 0 &&
                          edge.j < node_count_;
    if (!in_range || edge.i == edge.j) continue;  // left for validate_problem
    neighbors_[edge.i].push_back(edge.j);
    neighbors_[edge.j].push_back(edge.i);
    incident_[edge.i].emplace_back(edge.j, e);
    incident_[edge.j].emplace_back(edge.i, e);
  }
  for (auto& list : neighbors_) std::sort(list.begin(), list.end());
  for (auto& list : incident_) std::sort(list.begin(), list.end());
}

int GraphTopology::edge_index(int a, int b) const {
  if (a < 0 || a >= node_count_) return -1;
  const auto& list = incident_[a];
  auto it = std::lower_bound(list.begin(), list.end(), std::make_pair(b, -1));
  if (it == list.end() || it->first != b) return -1;
  return it->second;
}

int GraphTopology::directed_index(int owner, int neighbor) const {
  const int e = edge_index(owner, neighbor);
  if (e < 0) return -1;
  return 2 * e + (owner == edges_[e].i ? 0 : 1);
}

int GraphTopology::owner_of(int directed) const {
  const Edge& e = edges_[directed / 2];
  return directed % 2 == 0 ? e.i : e.j;
}

int GraphTopology::neighbor_of(int directed) const {
  const Edge& e = edges_[directed / 2];
  return directed % 2 == 0 ? e.j : e.i;
}

// --- Node functions ---------------------------------------------------------

double NodeFunction::conjugate(const Eigen::VectorXd&) const {
  throw std::logic_error("NodeFunction: conjugate not available for this oracle");
}

QuadraticFunction::QuadraticFunction(double target)
    : target_(Eigen::VectorXd::Constant(1, target)) {}

double QuadraticFunction::evaluate(const Eigen::VectorXd& x) const {
  return 0.5 * (x - target_).squaredNorm();
}

Eigen::VectorXd QuadraticFunction::solve_regularized(const Eigen::MatrixXd& q,
                                                     const Eigen::VectorXd& b) const {
  // argmin 1/2||x-t||^2 + 1/2 x^T Q x - b^T x = (I + Q)^{-1} (b + t)
  const Eigen::MatrixXd lhs =
      Eigen::MatrixXd::Identity(target_.size(), target_.size()) + q;
  return lhs.ldlt().solve(b + target_);
}

double QuadraticFunction::subgradient_distance(const Eigen::VectorXd& x,
                                               const Eigen::VectorXd& g) const {
  return (g - (x - target_)).norm();
}

double QuadraticFunction::conjugate(const Eigen::VectorXd& y) const {
  return 0.5 * y.squaredNorm() + target_.dot(y);
}

namespace {

// argmin_x max(x-1, 0) + q/2 x^2 - b x for scalar q >= 0.
double hinge_regularized_argmin(double q, double b) {
  if (q <= 0.0) {
    if (b == 0.0) return 0.0;          // any x <= 1 is optimal; pick 0
    if (b > 0.0 && b <= 1.0) return 1.0;
    throw std::domain_error("HingeFunction: regularized subproblem is unbounded");
  }
  if (b <= q) return b / q;            // flat piece, x <= 1
  if (b >= q + 1.0) return (b - 1.0) / q;  // linear piece, x >= 1
  return 1.0;                          // kink: b - q in (0, 1)
}

double hinge_subgradient_distance(double x, double g) {
  if (x < 1.0 - kKinkBand) return std::abs(g);
  if (x > 1.0 + kKinkBand) return std::abs(g - 1.0);
  return std::max({0.0, g - 1.0, -g});
}

}  // namespace

double HingeFunction::evaluate(const Eigen::VectorXd& x) const {
  return std::max(x[0] - 1.0, 0.0);
}

Eigen::VectorXd HingeFunction::solve_regularized(const Eigen::MatrixXd& q,
                                                 const Eigen::VectorXd& b) const {
  Eigen::VectorXd out(1);
  out[0] = hinge_regularized_argmin(q(0, 0), b[0]);
  return out;
}

double HingeFunction::subgradient_distance(const Eigen::VectorXd& x,
                                           const Eigen::VectorXd& g) const {
  return hinge_subgradient_distance(x[0], g[0]);
}

double HingeFunction::conjugate(const Eigen::VectorXd& y) const {
  if (y[0] < 0.0 || y[0] > 1.0) return kInf;
  return y[0];
}

double NegatedHingeFunction::evaluate(const Eigen::VectorXd& x) const {
  return std::max(-x[0] - 1.0, 0.0);
}

Eigen::VectorXd NegatedHingeFunction::solve_regularized(const Eigen::MatrixXd& q,
                                                        const Eigen::VectorXd& b) const {
  // With u = -x the subproblem is the plain hinge with b' = -b.
  Eigen::VectorXd out(1);
  out[0] = -hinge_regularized_argmin(q(0, 0), -b[0]);
  return out;
}

double NegatedHingeFunction::subgradient_distance(const Eigen::VectorXd& x,
                                                  const Eigen::VectorXd& g) const {
  // subdiff f(x) = -subdiff f_hinge(-x)
  return hinge_subgradient_distance(-x[0], -g[0]);
}

double NegatedHingeFunction::conjugate(const Eigen::VectorXd& y) const {
  if (y[0] < -1.0 || y[0] > 0.0) return kInf;
  return -y[0];
}

Eigen::VectorXd ZeroFunction::solve_regularized(const Eigen::MatrixXd& q,
                                                const Eigen::VectorXd& b) const {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(q);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw std::domain_error("ZeroFunction: regularized solve needs Q positive definite");
  }
  return ldlt.solve(b);
}

double ZeroFunction::subgradient_distance(const Eigen::VectorXd&,
                                          const Eigen::VectorXd& g) const {
  return g.norm();
}

double ZeroFunction::conjugate(const Eigen::VectorXd& y) const {
  return y.norm() <= 1e-12 ? 0.0 : kInf;
}

// --- GraphProblem -----------------------------------------------------------

const Eigen::MatrixXd& GraphProblem::a_of(int edge, int node) const {
  const Edge& e = topology.edges()[edge];
  if (node == e.i) return constraints[edge].A_lo;
  if (node == e.j) return constraints[edge].A_hi;
  throw std::invalid_argument("GraphProblem::a_of: node is not an endpoint of edge");
}

const Eigen::MatrixXd& GraphProblem::a_other(int edge, int node) const {
  const Edge& e = topology.edges()[edge];
  if (node == e.i) return constraints[edge].A_hi;
  if (node == e.j) return constraints[edge].A_lo;
  throw std::invalid_argument("GraphProblem::a_other: node is not an endpoint of edge");
}

int GraphProblem::total_primal_dim() const {
  int n = 0;
  for (int d : dims) n += d;
  return n;
}

// --- Validation -------------------------------------------------------------

namespace {
std::string edge_tag(int e, const Edge& edge) {
  std::ostringstream os;
  os << "edge #" << (e + 1) << " (" << (edge.i + 1) << "," << (edge.j + 1) << ")";
  return os.str();
}
}  // namespace

ValidationReport validate_problem(const GraphProblem& problem) {
  ValidationReport report;
  auto fail = [&report](const std::string& msg) {
    report.ok = false;
    report.violations.push_back(msg);
  };

  const GraphTopology& topo = problem.topology;
  const int m = topo.node_count();
  if (m <= 0) fail("node count must be positive");

  std::set<std::pair<int, int>> seen;
  for (int e = 0; e < topo.edge_count(); ++e) {
    const Edge& edge = topo.edges()[e];
    if (edge.i < 0 || edge.i >= m || edge.j < 0 || edge.j >= m) {
      fail(edge_tag(e, edge) + ": endpoint out of range");
      continue;
    }
    if (edge.i == edge.j) {
      fail(edge_tag(e, edge) + ": self-loop");
      continue;
    }
    if (edge.i > edge.j) fail(edge_tag(e, edge) + ": endpoints not ordered (i<j)");
    auto key = std::minmax(edge.i, edge.j);
    if (!seen.insert(key).second) fail(edge_tag(e, edge) + ": duplicate edge");
  }

  // Adjacency must match the edge list.
  if (report.ok) {
    std::vector<std::set<int>> expected(m);
    for (const Edge& edge : topo.edges()) {
      expected[edge.i].insert(edge.j);
      expected[edge.j].insert(edge.i);
    }
    for (int i = 0; i < m; ++i) {
      const auto& actual = topo.neighbors(i);
      if (std::set<int>(actual.begin(), actual.end()) != expected[i]) {
        std::ostringstream os;
        os << "node " << (i + 1) << ": neighbor list inconsistent with edges";
        fail(os.str());
      }
    }
  }

  if (static_cast<int>(problem.dims.size()) != m) {
    fail("dims: expected one entry per node");
  }
  if (static_cast<int>(problem.node_functions.size()) != m) {
    fail("node functions: expected one oracle per node");
  }
  for (int i = 0; i < m && i < static_cast<int>(problem.dims.size()); ++i) {
    if (problem.dims[i] <= 0) {
      fail("node " + std::to_string(i + 1) + ": non-positive dimension");
    }
    if (i < static_cast<int>(problem.node_functions.size()) &&
        problem.node_functions[i] &&
        problem.node_functions[i]->dimension() != problem.dims[i]) {
      fail("node " + std::to_string(i + 1) + ": oracle dimension mismatch");
    }
    if (i < static_cast<int>(problem.node_functions.size()) && !problem.node_functions[i]) {
      fail("node " + std::to_string(i + 1) + ": missing oracle");
    }
  }

  if (static_cast<int>(problem.constraints.size()) != topo.edge_count()) {
    fail("constraints: expected exactly one per edge");
  }
  const int n_constraints =
      std::min<int>(topo.edge_count(), static_cast<int>(problem.constraints.size()));
  for (int e = 0; e < n_constraints; ++e) {
    const Edge& edge = topo.edges()[e];
    const EdgeConstraint& con = problem.constraints[e];
    const auto n_ij = con.c.size();
    if (con.A_lo.rows() != n_ij || con.A_hi.rows() != n_ij) {
      fail(edge_tag(e, edge) + ": row mismatch between A blocks and c");
    }
    if (edge.i >= 0 && edge.i < static_cast<int>(problem.dims.size()) &&
        con.A_lo.cols() != problem.dims[edge.i]) {
      fail(edge_tag(e, edge) + ": column mismatch for lower endpoint");
    }
    if (edge.j >= 0 && edge.j < static_cast<int>(problem.dims.size()) &&
        con.A_hi.cols() != problem.dims[edge.j]) {
      fail(edge_tag(e, edge) + ": column mismatch for higher endpoint");
    }
  }

  return report;
}

// --- Builders ---------------------------------------------------------------

GraphProblem build_averaging_problem(const Eigen::VectorXd& t, GraphTopology topology) {
  if (t.size() != topology.node_count()) {
    throw std::invalid_argument("build_averaging_problem: t length must equal node count");
  }
  GraphProblem problem;
  problem.topology = std::move(topology);
  problem.dims.assign(problem.topology.node_count(), 1);
  problem.node_functions.reserve(problem.topology.node_count());
  for (int i = 0; i < problem.topology.node_count(); ++i) {
    problem.node_functions.push_back(std::make_shared<QuadraticFunction>(t[i]));
  }
  problem.constraints.reserve(problem.topology.edge_count());
  for (int e = 0; e < problem.topology.edge_count(); ++e) {
    EdgeConstraint con;
    con.A_lo = Eigen::MatrixXd::Constant(1, 1, 1.0);
    con.A_hi = Eigen::MatrixXd::Constant(1, 1, -1.0);
    con.c = Eigen::VectorXd::Zero(1);
    problem.constraints.push_back(std::move(con));
  }
  return problem;
}

GraphProblem build_hinge_pair_problem() {
  GraphProblem problem;
  problem.topology = GraphTopology(2, {Edge{0, 1}});
  problem.dims = {1, 1};
  problem.node_functions = {std::make_shared<HingeFunction>(),
                            std::make_shared<NegatedHingeFunction>()};
  EdgeConstraint con;
  con.A_lo = Eigen::MatrixXd::Constant(1, 1, 1.0);
  con.A_hi = Eigen::MatrixXd::Constant(1, 1, -1.0);
  con.c = Eigen::VectorXd::Zero(1);
  problem.constraints = {std::move(con)};
  return problem;
}

GraphTopology grid_topology(int rows, int cols) {
  if (rows <= 0 || cols <= 0) {
    throw std::invalid_argument("grid_topology: rows and cols must be positive");
  }
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(rows) * cols * 2);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int id = r * cols + c;
      if (c + 1 < cols) edges.push_back(Edge{id, id + 1});
      if (r + 1 < rows) edges.push_back(Edge{id, id + cols});
    }
  }
  return GraphTopology(rows * cols, std::move(edges));
}

GraphTopology path_topology(int node_count) {
  if (node_count <= 0) {
    throw std::invalid_argument("path_topology: node count must be positive");
  }
  std::vector<Edge> edges;
  for (int i = 0; i + 1 < node_count; ++i) edges.push_back(Edge{i, i + 1});
  return GraphTopology(node_count, std::move(edges));
}

double average(const Eigen::VectorXd& t) { return t.mean(); }

// --- JSON problem files -----------------------------------------------------

AveragingInstance load_averaging_instance(std::istream& in) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("problem file: invalid JSON: ") + e.what());
  }
  if (!j.contains("nodes") || !j["nodes"].is_array() || j["nodes"].empty()) {
    throw std::invalid_argument("problem file: missing non-empty \"nodes\" array");
  }
  const int m = static_cast<int>(j["nodes"].size());
  Eigen::VectorXd t(m);
  std::vector<bool> filled(m, false);
  for (const auto& node : j["nodes"]) {
    const int id = node.at("id").get<int>();
    if (id < 1 || id > m) {
      throw std::invalid_argument("problem file: node id out of range 1..m");
    }
    if (filled[id - 1]) {
      throw std::invalid_argument("problem file: duplicate node id");
    }
    filled[id - 1] = true;
    t[id - 1] = node.at("t").get<double>();
  }
  std::vector<Edge> edges;
  if (j.contains("edges")) {
    for (const auto& edge : j["edges"]) {
      int a = edge.at("i").get<int>() - 1;
      int b = edge.at("j").get<int>() - 1;
      if (a > b) std::swap(a, b);
      edges.push_back(Edge{a, b});
    }
  }
  return AveragingInstance{GraphTopology(m, std::move(edges)), std::move(t)};
}

AveragingInstance load_averaging_instance_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("problem file: cannot open " + path);
  return load_averaging_instance(in);
}

void save_averaging_instance(std::ostream& out, const AveragingInstance& instance) {
  nlohmann::json j;
  j["nodes"] = nlohmann::json::array();
  for (int i = 0; i < instance.topology.node_count(); ++i) {
    j["nodes"].push_back({{"id", i + 1}, {"t", instance.t[i]}});
  }
  j["edges"] = nlohmann::json::array();
  for (const Edge& e : instance.topology.edges()) {
    j["edges"].push_back({{"i", e.i + 1}, {"j", e.j + 1}});
  }
  out << j.dump(2) << "\n";
}

}  // namespace pdmm
