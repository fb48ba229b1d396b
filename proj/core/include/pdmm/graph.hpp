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

#ifndef PDMM_GRAPH_HPP_
#define PDMM_GRAPH_HPP_

#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace pdmm {

// Undirected edge between 0-based node ids; a well-formed edge has i < j.
// Node ids are 1-based in file formats and logs, 0-based in the API.
struct Edge {
  int i = 0;
  int j = 0;
};

// Graph G = (V, E) with derived adjacency. Directed edges [i|j] index the
// per-node dual blocks: for undirected edge e = (lo, hi), directed id 2e is
// [lo|hi] (owned by lo) and 2e+1 is [hi|lo] (owned by hi).
//
// The constructor tolerates malformed edge lists (self-loops, duplicates,
// out-of-range endpoints) so that validate_problem can report them.
class GraphTopology {
 public:
  GraphTopology() = default;
  GraphTopology(int node_count, std::vector<Edge> edges);

  int node_count() const { return node_count_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  int directed_count() const { return 2 * edge_count(); }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<int>& neighbors(int node) const { return neighbors_[node]; }
  int degree(int node) const { return static_cast<int>(neighbors_[node].size()); }

  // Undirected edge index of (a, b) in either order; -1 if absent.
  int edge_index(int a, int b) const;
  // Directed id of [owner|neighbor]; -1 if they are not adjacent.
  int directed_index(int owner, int neighbor) const;
  int owner_of(int directed) const;
  int neighbor_of(int directed) const;
  int edge_of_directed(int directed) const { return directed / 2; }
  static int reverse(int directed) { return directed ^ 1; }

 private:
  int node_count_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> neighbors_;
  // Per node: (neighbor, edge index) sorted by neighbor id.
  std::vector<std::vector<std::pair<int, int>>> incident_;
};

// Linear equality constraint A_lo x_lo + A_hi x_hi = c on edge (lo, hi).
// Row count of both matrices and the length of c equal the constraint
// dimension n_ij; column counts match the endpoint variable dimensions.
struct EdgeConstraint {
  Eigen::MatrixXd A_lo;
  Eigen::MatrixXd A_hi;
  Eigen::VectorXd c;

  int constraint_dim() const { return static_cast<int>(c.size()); }
};

// Convex node cost f_i given as an oracle: evaluation plus the regularized
// local solve
//
//   solve_regularized(Q, b) = argmin_x  f(x) + 1/2 x^T Q x - b^T x,
//
// which is the exact shape of both the primal x-update and the w-update.
// The returned point must satisfy b - Q x* in subdiff f(x*); oracles with a
// non-unique minimizer document their selection rule.
class NodeFunction {
 public:
  virtual ~NodeFunction() = default;

  virtual int dimension() const = 0;
  virtual double evaluate(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::VectorXd solve_regularized(const Eigen::MatrixXd& q,
                                            const Eigen::VectorXd& b) const = 0;

  // Distance from g to the subdifferential of f at x (0 when g is a
  // subgradient). Used by validation and by the saddle-point certificates.
  virtual double subgradient_distance(const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& g) const = 0;

  virtual bool has_conjugate() const { return false; }
  // Conjugate f*(y); +infinity outside its effective domain. Only valid when
  // has_conjugate() is true.
  virtual double conjugate(const Eigen::VectorXd& y) const;

  // Non-null iff f(x) = 1/2 ||x - target||^2; closed-form dual paths key on it.
  virtual const Eigen::VectorXd* quadratic_target() const { return nullptr; }
};

using NodeFunctionPtr = std::shared_ptr<const NodeFunction>;

// f(x) = 1/2 ||x - t||^2 with conjugate f*(y) = 1/2 ||y||^2 + t^T y.
class QuadraticFunction final : public NodeFunction {
 public:
  explicit QuadraticFunction(Eigen::VectorXd target) : target_(std::move(target)) {}
  explicit QuadraticFunction(double target);

  int dimension() const override { return static_cast<int>(target_.size()); }
  double evaluate(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd solve_regularized(const Eigen::MatrixXd& q,
                                    const Eigen::VectorXd& b) const override;
  double subgradient_distance(const Eigen::VectorXd& x,
                              const Eigen::VectorXd& g) const override;
  bool has_conjugate() const override { return true; }
  double conjugate(const Eigen::VectorXd& y) const override;
  const Eigen::VectorXd* quadratic_target() const override { return &target_; }

 private:
  Eigen::VectorXd target_;
};

// Scalar hinge f(x) = max(x - 1, 0); conjugate f*(y) = y on [0, 1], else +inf.
class HingeFunction final : public NodeFunction {
 public:
  int dimension() const override { return 1; }
  double evaluate(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd solve_regularized(const Eigen::MatrixXd& q,
                                    const Eigen::VectorXd& b) const override;
  double subgradient_distance(const Eigen::VectorXd& x,
                              const Eigen::VectorXd& g) const override;
  bool has_conjugate() const override { return true; }
  double conjugate(const Eigen::VectorXd& y) const override;
};

// Scalar mirrored hinge f(x) = max(-x - 1, 0); f*(y) = -y on [-1, 0], else +inf.
class NegatedHingeFunction final : public NodeFunction {
 public:
  int dimension() const override { return 1; }
  double evaluate(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd solve_regularized(const Eigen::MatrixXd& q,
                                    const Eigen::VectorXd& b) const override;
  double subgradient_distance(const Eigen::VectorXd& x,
                              const Eigen::VectorXd& g) const override;
  bool has_conjugate() const override { return true; }
  double conjugate(const Eigen::VectorXd& y) const override;
};

// f = 0; conjugate is the indicator of {0}. The regularized solve requires
// Q to be positive definite.
class ZeroFunction final : public NodeFunction {
 public:
  explicit ZeroFunction(int dimension) : dimension_(dimension) {}

  int dimension() const override { return dimension_; }
  double evaluate(const Eigen::VectorXd&) const override { return 0.0; }
  Eigen::VectorXd solve_regularized(const Eigen::MatrixXd& q,
                                    const Eigen::VectorXd& b) const override;
  double subgradient_distance(const Eigen::VectorXd& x,
                              const Eigen::VectorXd& g) const override;
  bool has_conjugate() const override { return true; }
  double conjugate(const Eigen::VectorXd& y) const override;

 private:
  int dimension_ = 1;
};

// The constrained problem: min sum_i f_i(x_i) s.t. one linear equality per
// edge. Plain data; builders produce valid instances and validate_problem
// reports violations on hand-assembled ones. Immutable after construction by
// convention; safe to share across threads read-only.
struct GraphProblem {
  GraphTopology topology;
  std::vector<EdgeConstraint> constraints;  // one per topology edge
  std::vector<NodeFunctionPtr> node_functions;
  std::vector<int> dims;  // n_i per node

  // Constraint block acting on x_node within edge e; node must be an endpoint.
  const Eigen::MatrixXd& a_of(int edge, int node) const;
  // Block acting on the other endpoint of edge e.
  const Eigen::MatrixXd& a_other(int edge, int node) const;
  int constraint_dim(int edge) const { return constraints[edge].constraint_dim(); }
  int total_primal_dim() const;
};

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> violations;
};

// Structural well-formedness: endpoints in range, no self-loops/duplicates,
// adjacency consistent with the edge list, one constraint per edge, matrix
// row counts equal to the c length ("row mismatch"), column counts equal to
// the endpoint dimensions ("column mismatch"), oracle dimensions equal n_i.
ValidationReport validate_problem(const GraphProblem& problem);

// --- Builders and stock topologies ----------------------------------------

// Distributed averaging: f_i(x) = 1/2 (x - t_i)^2, constraint x_i - x_j = 0
// encoded as (A_lo, A_hi, c) = (1, -1, 0) on every edge. The optimum is the
// per-component mean of t. Throws when t length differs from the node count.
GraphProblem build_averaging_problem(const Eigen::VectorXd& t, GraphTopology topology);

// Two hinge nodes with constraint x_1 - x_2 = 0; primal solution set
// x_1 = x_2 in [-1, 1] with zero edge dual.
GraphProblem build_hinge_pair_problem();

GraphTopology grid_topology(int rows, int cols);
GraphTopology path_topology(int node_count);

double average(const Eigen::VectorXd& t);

// --- Averaging problem files ----------------------------------------------
//
// JSON schema (1-based ids):
//   { "nodes": [{"id": 1, "t": 0.5}, ...], "edges": [{"i": 1, "j": 2}, ...] }
struct AveragingInstance {
  GraphTopology topology;
  Eigen::VectorXd t;
};

AveragingInstance load_averaging_instance(std::istream& in);
AveragingInstance load_averaging_instance_file(const std::string& path);
void save_averaging_instance(std::ostream& out, const AveragingInstance& instance);

}  // namespace pdmm

#endif  // PDMM_GRAPH_HPP_
