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

#include "pdmm/state.hpp"

#include <algorithm>
#include <stdexcept>

#include <json.hpp>

namespace pdmm {

IterateState zero_state(const GraphProblem& problem) {
  IterateState state;
  state.x.reserve(problem.dims.size());
  for (int d : problem.dims) state.x.push_back(Eigen::VectorXd::Zero(d));
  state.lambda.reserve(problem.topology.directed_count());
  for (int d = 0; d < problem.topology.directed_count(); ++d) {
    state.lambda.push_back(Eigen::VectorXd::Zero(problem.constraint_dim(d / 2)));
  }
  return state;
}

IterateState state_from_x(const GraphProblem& problem, const Eigen::VectorXd& stacked_x) {
  IterateState state = zero_state(problem);
  Eigen::Index offset = 0;
  for (std::size_t i = 0; i < state.x.size(); ++i) {
    const Eigen::Index n = state.x[i].size();
    if (offset + n > stacked_x.size()) {
      throw std::invalid_argument("state_from_x: stacked vector too short");
    }
    state.x[i] = stacked_x.segment(offset, n);
    offset += n;
  }
  if (offset != stacked_x.size()) {
    throw std::invalid_argument("state_from_x: stacked vector too long");
  }
  return state;
}

double max_state_difference(const IterateState& a, const IterateState& b) {
  double out = 0.0;
  if (a.x.size() != b.x.size() || a.lambda.size() != b.lambda.size()) {
    throw std::invalid_argument("max_state_difference: shape mismatch");
  }
  for (std::size_t i = 0; i < a.x.size(); ++i) {
    out = std::max(out, (a.x[i] - b.x[i]).cwiseAbs().maxCoeff());
  }
  for (std::size_t d = 0; d < a.lambda.size(); ++d) {
    out = std::max(out, (a.lambda[d] - b.lambda[d]).cwiseAbs().maxCoeff());
  }
  return out;
}

namespace {

nlohmann::json blocks_to_json(const std::vector<Eigen::VectorXd>& blocks) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& v : blocks) {
    nlohmann::json block = nlohmann::json::array();
    for (Eigen::Index k = 0; k < v.size(); ++k) block.push_back(v[k]);
    out.push_back(std::move(block));
  }
  return out;
}

std::vector<Eigen::VectorXd> blocks_from_json(const nlohmann::json& j) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(j.size());
  for (const auto& block : j) {
    Eigen::VectorXd v(block.size());
    Eigen::Index k = 0;
    for (const auto& value : block) v[k++] = value.get<double>();
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace

std::string state_to_json(const IterateState& state) {
  nlohmann::json j;
  j["x"] = blocks_to_json(state.x);
  j["lambda"] = blocks_to_json(state.lambda);
  j["iteration"] = state.iteration;
  return j.dump();
}

IterateState state_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("state: invalid JSON: ") + e.what());
  }
  IterateState state;
  state.x = blocks_from_json(j.at("x"));
  state.lambda = blocks_from_json(j.at("lambda"));
  state.iteration = j.at("iteration").get<long>();
  return state;
}

IterateState state_from_json(const std::string& text, const GraphProblem& problem) {
  IterateState state = state_from_json(text);
  if (static_cast<int>(state.x.size()) != problem.topology.node_count()) {
    throw std::invalid_argument("state: node block count mismatch");
  }
  for (int i = 0; i < problem.topology.node_count(); ++i) {
    if (state.x[i].size() != problem.dims[i]) {
      throw std::invalid_argument("state: x block dimension mismatch");
    }
  }
  if (static_cast<int>(state.lambda.size()) != problem.topology.directed_count()) {
    throw std::invalid_argument("state: lambda block count mismatch");
  }
  for (int d = 0; d < problem.topology.directed_count(); ++d) {
    if (state.lambda[d].size() != problem.constraint_dim(d / 2)) {
      throw std::invalid_argument("state: lambda block dimension mismatch");
    }
  }
  return state;
}

}  // namespace pdmm
