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

#ifndef PDMM_STATE_HPP_
#define PDMM_STATE_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pdmm/graph.hpp"

namespace pdmm {

// Primal/dual iterate: one x block per node and one lambda block per directed
// edge, in the directed-index order of the topology ([lo|hi] then [hi|lo] per
// edge). Value-semantic; a synchronous round never mutates the round-k state
// it reads from.
struct IterateState {
  std::vector<Eigen::VectorXd> x;
  std::vector<Eigen::VectorXd> lambda;
  long iteration = 0;
};

// x = 0, lambda = 0.
IterateState zero_state(const GraphProblem& problem);
// Per-node x blocks given explicitly (e.g. x = t for averaging); lambda = 0.
IterateState state_from_x(const GraphProblem& problem, const Eigen::VectorXd& stacked_x);

// Largest absolute componentwise difference across x and lambda.
double max_state_difference(const IterateState& a, const IterateState& b);

// Checkpoint format: {"x": [[..], ..], "lambda": [[..], ..], "iteration": k}
// with lambda in directed-index order.
std::string state_to_json(const IterateState& state);
IterateState state_from_json(const std::string& text);
// Validates block sizes against the problem; throws on mismatch.
IterateState state_from_json(const std::string& text, const GraphProblem& problem);

}  // namespace pdmm

#endif  // PDMM_STATE_HPP_
