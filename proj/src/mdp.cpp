/*
 * Copyright (C) 2026 The teamcoord authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 */

#include "teamcoord/mdp.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace teamcoord {

std::string to_string(const AgentAction& action)
{
  switch (action.kind) {
    case AgentAction::Kind::MoveTo:
      return "MoveTo(" + std::to_string(action.target) + ")";
    case AgentAction::Kind::Stay:
      return "Stay";
    case AgentAction::Kind::Support:
      return "Support";
  }
  return "?";
}

int support_slot(int num_nodes) { return num_nodes; }

int slot_of(const AgentAction& action, NodeId current, int num_nodes)
{
  switch (action.kind) {
    case AgentAction::Kind::MoveTo:
      return action.target;
    case AgentAction::Kind::Stay:
      return current;
    case AgentAction::Kind::Support:
      return num_nodes;
  }
  return -1;
}

AgentAction action_of_slot(int slot, NodeId current, int num_nodes)
{
  if (slot == num_nodes)
    return AgentAction::support();
  if (slot == current)
    return AgentAction::stay();
  return AgentAction::move_to(slot);
}

InvalidAction::InvalidAction(int agent, const std::string& what)
  : std::invalid_argument("agent " + std::to_string(agent) + ": " + what), agent_(agent)
{
}

int TeamMask::first_invalid(std::span<const int> slots) const
{
  for (std::size_t k = 0; k < slots.size(); ++k) {
    const int s = slots[k];
    if (s < 0 || s > num_nodes || !agents[k][s])
      return static_cast<int>(k);
  }
  return -1;
}

std::vector<std::uint8_t> agent_mask(const EnvGraph& graph, NodeId node)
{
  const int n = graph.num_nodes();
  std::vector<std::uint8_t> m(n + 1, 0);
  m[node] = 1;
  for (NodeId j : graph.neighbors(node))
    m[j] = 1;
  m[n] = graph.is_supporter(node) ? 1 : 0;
  return m;
}

TeamMask mask(const EnvGraph& graph, const JointState& state)
{
  check_state(graph, state);
  TeamMask out;
  out.num_nodes = graph.num_nodes();
  out.agents.reserve(state.positions.size());
  for (NodeId p : state.positions)
    out.agents.push_back(agent_mask(graph, p));
  return out;
}

void check_state(const EnvGraph& graph, const JointState& state)
{
  if (state.positions.empty())
    throw std::invalid_argument("joint state has no agents");
  for (std::size_t k = 0; k < state.positions.size(); ++k) {
    const NodeId p = state.positions[k];
    if (p < 0 || p >= graph.num_nodes())
      throw std::invalid_argument("agent " + std::to_string(k) + " position " + std::to_string(p) +
                                  " is not a node");
  }
}

JointState start_state(const EnvGraph& graph) { return JointState{graph.starts()}; }

bool is_terminal(const EnvGraph& graph, std::span<const NodeId> positions)
{
  return std::all_of(positions.begin(), positions.end(), [&](NodeId p) { return graph.is_goal(p); });
}

bool is_terminal(const EnvGraph& graph, const JointState& state)
{
  check_state(graph, state);
  return is_terminal(graph, std::span<const NodeId>(state.positions));
}

int horizon(const EnvGraph& graph, int num_agents) { return 4 * graph.num_nodes() * num_agents; }

namespace {

/// Converts and checks a joint action, throwing InvalidAction on the first
/// offending agent.
std::vector<int> checked_slots(const EnvGraph& graph, const JointState& state, const JointAction& action)
{
  check_state(graph, state);
  if (action.actions.size() != state.positions.size())
    throw std::invalid_argument("joint action has " + std::to_string(action.actions.size()) +
                                " components for " + std::to_string(state.positions.size()) +
                                " agents");
  const int n = graph.num_nodes();
  std::vector<int> slots(action.actions.size());
  for (std::size_t k = 0; k < slots.size(); ++k) {
    const AgentAction& a = action.actions[k];
    const NodeId at = state.positions[k];
    const int s = slot_of(a, at, n);
    const bool valid = s >= 0 && s <= n && agent_mask(graph, at)[s] != 0;
    if (!valid)
      throw InvalidAction(static_cast<int>(k), to_string(a) + " is not valid at node " + std::to_string(at));
    slots[k] = s;
  }
  return slots;
}

} // namespace

JointState transition(const EnvGraph& graph, const JointState& state, const JointAction& action)
{
  const auto slots = checked_slots(graph, state, action);
  const int n = graph.num_nodes();
  JointState next = state;
  for (std::size_t k = 0; k < slots.size(); ++k)
    if (slots[k] != n)
      next.positions[k] = slots[k];
  return next;
}

double StepCost::total() const { return std::accumulate(per_agent.begin(), per_agent.end(), 0.0); }

double evaluate_step(const EnvGraph& graph,
                     std::span<const NodeId> positions,
                     std::span<const int> slots,
                     std::span<double> per_agent,
                     int& coordination,
                     int& unsupported_risky)
{
  const int n = graph.num_nodes();
  const int agents = static_cast<int>(positions.size());
  coordination = 0;
  unsupported_risky = 0;
  double total = 0.0;
  for (int k = 0; k < agents; ++k) {
    const int s = slots[k];
    const NodeId at = positions[k];
    double c = 0.0;
    if (s == n) {
      c = graph.support_action_cost();
    } else if (s != at) {
      const int e = graph.edge_index(at, s);
      c = graph.nominal_cost(e);
      bool supported = false;
      for (const EdgeSupport& sup : graph.edge_supports(e)) {
        for (int m = 0; m < agents; ++m) {
          if (m != k && slots[m] == n && positions[m] == sup.supporter) {
            // Several supporters never stack: keep the single best reduction.
            if (sup.reduced_cost < c)
              c = sup.reduced_cost;
            supported = true;
            break;
          }
        }
      }
      if (supported)
        ++coordination;
      else if (graph.is_risky(e))
        ++unsupported_risky;
    }
    per_agent[k] = c;
    total += c;
  }
  return total;
}

double team_step_cost(const EnvGraph& graph, std::span<const NodeId> positions, std::span<const int> slots)
{
  constexpr int kStackAgents = 16;
  double buffer[kStackAgents];
  std::vector<double> heap;
  std::span<double> per_agent;
  if (positions.size() <= kStackAgents) {
    per_agent = std::span<double>(buffer, positions.size());
  } else {
    heap.resize(positions.size());
    per_agent = heap;
  }
  int cc = 0, rc = 0;
  return evaluate_step(graph, positions, slots, per_agent, cc, rc);
}

StepCost step_cost(const EnvGraph& graph, const JointState& state, const JointAction& action)
{
  const auto slots = checked_slots(graph, state, action);
  StepCost out;
  out.per_agent.resize(slots.size());
  evaluate_step(graph, state.positions, slots, out.per_agent, out.coordination, out.unsupported_risky);
  return out;
}

void RewardConfig::check() const
{
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("reward gamma must lie in (0, 1)");
}

double combine_reward(const RewardConfig& config,
                      bool reached_goal,
                      double team_cost,
                      int coordination,
                      int unsupported_risky)
{
  const double r_goal = reached_goal ? config.goal_bonus : config.step_penalty;
  const double r_move = -team_cost;
  const double r_coord = config.alpha * coordination - config.beta * unsupported_risky;
  return config.w1 * r_goal + config.w2 * r_move + config.w3 * r_coord;
}

double combine_reward(const RewardConfig& config, bool reached_goal, const StepCost& cost)
{
  return combine_reward(config, reached_goal, cost.total(), cost.coordination, cost.unsupported_risky);
}

double shaped_reward(const EnvGraph& graph,
                     const JointState& state,
                     const JointAction& action,
                     const JointState& next_state,
                     const RewardConfig& config)
{
  const StepCost cost = step_cost(graph, state, action);
  return combine_reward(config, is_terminal(graph, next_state), cost);
}

//==============================================================================
Eigen::VectorXd EncodedState::flatten() const
{
  Eigen::VectorXd out(position_block.size() + adjacency_block.size() + support_block.size());
  out << position_block, adjacency_block, support_block;
  return out;
}

GraphFeatures graph_features(const EnvGraph& graph)
{
  const Eigen::Index n = graph.num_nodes();
  GraphFeatures f;
  f.adjacency_block = Eigen::VectorXd::Constant(n * n, kAbsentEdge);
  f.support_block = Eigen::VectorXd::Constant(n * n * n, kAbsentEdge);
  for (const Edge& e : graph.data().edges) {
    f.adjacency_block(e.u * n + e.v) = e.cost;
    f.adjacency_block(e.v * n + e.u) = e.cost;
    for (Eigen::Index i = 0; i < n; ++i) {
      f.support_block(i * n * n + e.u * n + e.v) = e.cost;
      f.support_block(i * n * n + e.v * n + e.u) = e.cost;
    }
  }
  for (const SupportRecord& s : graph.data().supports) {
    auto& a = f.support_block(s.supporter * n * n + s.u * n + s.v);
    a = std::min(a, s.reduced_cost);
    auto& b = f.support_block(s.supporter * n * n + s.v * n + s.u);
    b = std::min(b, s.reduced_cost);
  }
  return f;
}

EncodedState encode(const EnvGraph& graph, const JointState& state)
{
  check_state(graph, state);
  const Eigen::Index n = graph.num_nodes();
  const auto agents = static_cast<Eigen::Index>(state.positions.size());
  GraphFeatures f = graph_features(graph);
  EncodedState out;
  out.position_block = Eigen::VectorXd::Zero(n * agents);
  for (Eigen::Index k = 0; k < agents; ++k)
    out.position_block(k * n + state.positions[k]) = 1.0;
  out.adjacency_block = std::move(f.adjacency_block);
  out.support_block = std::move(f.support_block);
  return out;
}

//==============================================================================
std::uint64_t state_index(std::span<const NodeId> positions, int num_nodes)
{
  std::uint64_t index = 0;
  for (NodeId p : positions)
    index = index * static_cast<std::uint64_t>(num_nodes) + static_cast<std::uint64_t>(p);
  return index;
}

void decode_state_index(std::uint64_t index, int num_nodes, std::span<NodeId> positions)
{
  for (std::size_t k = positions.size(); k-- > 0;) {
    positions[k] = static_cast<NodeId>(index % static_cast<std::uint64_t>(num_nodes));
    index /= static_cast<std::uint64_t>(num_nodes);
  }
}

std::uint64_t joint_action_index(std::span<const int> slots, int num_nodes)
{
  std::uint64_t index = 0;
  for (int s : slots)
    index = index * static_cast<std::uint64_t>(num_nodes + 1) + static_cast<std::uint64_t>(s);
  return index;
}

void decode_joint_action_index(std::uint64_t index, int num_nodes, std::span<int> slots)
{
  const auto radix = static_cast<std::uint64_t>(num_nodes + 1);
  for (std::size_t k = slots.size(); k-- > 0;) {
    slots[k] = static_cast<int>(index % radix);
    index /= radix;
  }
}

std::optional<std::uint64_t> checked_power(std::uint64_t base, int exponent)
{
  std::uint64_t out = 1;
  for (int i = 0; i < exponent; ++i) {
    if (base != 0 && out > std::numeric_limits<std::uint64_t>::max() / base)
      return std::nullopt;
    out *= base;
  }
  return out;
}

ValidJointActions::ValidJointActions(const EnvGraph& graph, std::span<const NodeId> positions)
  : num_nodes_(graph.num_nodes()), count_(1)
{
  const int n = graph.num_nodes();
  per_agent_.reserve(positions.size());
  for (NodeId p : positions) {
    std::vector<int> slots;
    slots.reserve(graph.neighbors(p).size() + 2);
    bool placed_stay = false;
    for (NodeId j : graph.neighbors(p)) {
      if (!placed_stay && p < j) {
        slots.push_back(p);
        placed_stay = true;
      }
      slots.push_back(j);
    }
    if (!placed_stay)
      slots.push_back(p);
    if (graph.is_supporter(p))
      slots.push_back(n);
    count_ *= slots.size();
    per_agent_.push_back(std::move(slots));
  }
}

void ValidJointActions::slots(std::size_t k, std::span<int> out) const
{
  for (std::size_t a = per_agent_.size(); a-- > 0;) {
    const std::size_t width = per_agent_[a].size();
    out[a] = per_agent_[a][k % width];
    k /= width;
  }
}

std::uint64_t ValidJointActions::joint_index(std::size_t k) const
{
  std::uint64_t index = 0;
  std::uint64_t scale = 1;
  for (std::size_t a = per_agent_.size(); a-- > 0;) {
    const std::size_t width = per_agent_[a].size();
    index += scale * static_cast<std::uint64_t>(per_agent_[a][k % width]);
    k /= width;
    scale *= static_cast<std::uint64_t>(num_nodes_ + 1);
  }
  return index;
}

std::optional<std::size_t> ValidJointActions::find(std::uint64_t joint_index) const
{
  std::size_t k = 0;
  const auto radix = static_cast<std::uint64_t>(num_nodes_ + 1);
  std::vector<int> slots(per_agent_.size());
  decode_joint_action_index(joint_index, num_nodes_, slots);
  if (joint_index >= checked_power(radix, num_agents()).value_or(~0ULL))
    return std::nullopt;
  for (std::size_t a = 0; a < per_agent_.size(); ++a) {
    const auto& list = per_agent_[a];
    const auto it = std::lower_bound(list.begin(), list.end(), slots[a]);
    if (it == list.end() || *it != slots[a])
      return std::nullopt;
    k = k * list.size() + static_cast<std::size_t>(it - list.begin());
  }
  return k;
}

//==============================================================================
TeamEnv::TeamEnv(std::shared_ptr<const EnvGraph> graph, RewardConfig reward)
  : graph_(std::move(graph)), reward_(reward)
{
  reward_.check();
  reset();
}

void TeamEnv::reset()
{
  positions_ = graph_->starts();
  scratch_.assign(positions_.size(), 0.0);
  horizon_ = teamcoord::horizon(*graph_, static_cast<int>(positions_.size()));
  steps_ = 0;
  done_ = is_terminal(*graph_, std::span<const NodeId>(positions_));
}

void TeamEnv::reset(std::shared_ptr<const EnvGraph> graph)
{
  graph_ = std::move(graph);
  reset();
}

StepOutcome TeamEnv::step(std::span<const int> slots)
{
  if (done_)
    throw std::logic_error("step() called on a finished episode");
  const int n = graph_->num_nodes();
  if (slots.size() != positions_.size())
    throw std::invalid_argument("joint action size does not match team size");
  for (std::size_t k = 0; k < slots.size(); ++k) {
    const int s = slots[k];
    const NodeId at = positions_[k];
    const bool valid = s == at || (s == n && graph_->is_supporter(at)) ||
                       (s >= 0 && s < n && graph_->adjacent(at, s));
    if (!valid)
      throw InvalidAction(static_cast<int>(k), "slot " + std::to_string(s) + " is not valid at node " +
                                                 std::to_string(at));
  }

  int cc = 0, rc = 0;
  StepOutcome out;
  out.team_cost = evaluate_step(*graph_, positions_, slots, scratch_, cc, rc);
  for (std::size_t k = 0; k < slots.size(); ++k)
    if (slots[k] != n)
      positions_[k] = slots[k];
  ++steps_;
  out.terminal = is_terminal(*graph_, std::span<const NodeId>(positions_));
  out.truncated = !out.terminal && steps_ >= horizon_;
  out.reward = combine_reward(reward_, out.terminal, out.team_cost, cc, rc);
  done_ = out.terminal || out.truncated;
  return out;
}

} // namespace teamcoord
