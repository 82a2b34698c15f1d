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

#pragma once

#include "teamcoord/envgraph.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace teamcoord {

// Each agent has |V| + 1 action slots: slot j < |V| moves to node j (slot
// equal to the current node means Stay) and slot |V| is Support.

struct JointState
{
  std::vector<NodeId> positions;

  bool operator==(const JointState&) const = default;
};

struct AgentAction
{
  enum class Kind : std::uint8_t
  {
    MoveTo,
    Stay,
    Support
  };

  Kind kind = Kind::Stay;
  NodeId target = -1; ///< only meaningful for MoveTo

  static AgentAction move_to(NodeId node) { return {Kind::MoveTo, node}; }
  static AgentAction stay() { return {Kind::Stay, -1}; }
  static AgentAction support() { return {Kind::Support, -1}; }

  bool operator==(const AgentAction&) const = default;
};

struct JointAction
{
  std::vector<AgentAction> actions;

  bool operator==(const JointAction&) const = default;
};

std::string to_string(const AgentAction& action);

int support_slot(int num_nodes);
int slot_of(const AgentAction& action, NodeId current, int num_nodes);
AgentAction action_of_slot(int slot, NodeId current, int num_nodes);

/// Raised when an action is applied that the mask rejects.
class InvalidAction : public std::invalid_argument
{
public:
  InvalidAction(int agent, const std::string& what);
  int agent() const { return agent_; }

private:
  int agent_;
};

/// Per-agent validity over the |V| + 1 slots.
struct TeamMask
{
  int num_nodes = 0;
  std::vector<std::vector<std::uint8_t>> agents;

  bool allows(int agent, int slot) const { return agents[agent][slot] != 0; }
  /// Index of the first agent whose slot is rejected, or -1.
  int first_invalid(std::span<const int> slots) const;
  bool allows(std::span<const int> slots) const { return first_invalid(slots) < 0; }
};

/// Valid slots for one agent standing at `node`.
std::vector<std::uint8_t> agent_mask(const EnvGraph& graph, NodeId node);
TeamMask mask(const EnvGraph& graph, const JointState& state);

/// Throws std::invalid_argument unless every position is a node of `graph`.
void check_state(const EnvGraph& graph, const JointState& state);

JointState start_state(const EnvGraph& graph);
bool is_terminal(const EnvGraph& graph, const JointState& state);
bool is_terminal(const EnvGraph& graph, std::span<const NodeId> positions);

/// Episode length cap: 4 * |V| * N.
int horizon(const EnvGraph& graph, int num_agents);

JointState transition(const EnvGraph& graph, const JointState& state, const JointAction& action);

struct StepCost
{
  std::vector<double> per_agent;
  int coordination = 0;      ///< supported traversals this step
  int unsupported_risky = 0; ///< risky traversals made without support

  double total() const;
};

StepCost step_cost(const EnvGraph& graph, const JointState& state, const JointAction& action);

/// Unchecked slot-level cost kernel shared by the solvers. `per_agent` must
/// have one entry per agent. Returns the team total.
double evaluate_step(const EnvGraph& graph,
                     std::span<const NodeId> positions,
                     std::span<const int> slots,
                     std::span<double> per_agent,
                     int& coordination,
                     int& unsupported_risky);

/// Sum of per-agent costs for one step (no counts, no allocation).
double team_step_cost(const EnvGraph& graph, std::span<const NodeId> positions, std::span<const int> slots);

struct RewardConfig
{
  double goal_bonus = 10.0;
  double step_penalty = -0.01;
  double alpha = 2.0;
  double beta = 5.0;
  double w1 = 1.0;
  double w2 = 1.0;
  double w3 = 0.2;
  double gamma = 0.95;

  /// Throws std::invalid_argument when gamma is outside (0, 1).
  void check() const;
};

/// w1 * r_goal + w2 * r_move + w3 * (alpha * cc - beta * rc).
double combine_reward(const RewardConfig& config, bool reached_goal, const StepCost& cost);
double combine_reward(const RewardConfig& config,
                      bool reached_goal,
                      double team_cost,
                      int coordination,
                      int unsupported_risky);

double shaped_reward(const EnvGraph& graph,
                     const JointState& state,
                     const JointAction& action,
                     const JointState& next_state,
                     const RewardConfig& config);

/// Stand-in for a missing edge in the encoded state.
inline constexpr double kAbsentEdge = 1e3;

struct EncodedState
{
  Eigen::VectorXd position_block;  ///< |V| * N one-hot
  Eigen::VectorXd adjacency_block; ///< |V|^2, row-major (i, j)
  Eigen::VectorXd support_block;   ///< |V|^3, row-major (i, j, k)

  Eigen::VectorXd flatten() const;
};

/// Position-independent part of the encoding, computed once per graph.
struct GraphFeatures
{
  Eigen::VectorXd adjacency_block;
  Eigen::VectorXd support_block;
};

GraphFeatures graph_features(const EnvGraph& graph);
EncodedState encode(const EnvGraph& graph, const JointState& state);

// Mixed-radix indices with agent 0 as the most significant digit.
std::uint64_t state_index(std::span<const NodeId> positions, int num_nodes);
void decode_state_index(std::uint64_t index, int num_nodes, std::span<NodeId> positions);
std::uint64_t joint_action_index(std::span<const int> slots, int num_nodes);
void decode_joint_action_index(std::uint64_t index, int num_nodes, std::span<int> slots);

/// base^exponent, or nullopt if it overflows 64 bits.
std::optional<std::uint64_t> checked_power(std::uint64_t base, int exponent);

/// The valid joint actions at one configuration, in canonical order
/// (lexicographic over agents, each agent's slots ascending).
class ValidJointActions
{
public:
  ValidJointActions(const EnvGraph& graph, std::span<const NodeId> positions);

  std::size_t size() const { return count_; }
  int num_agents() const { return static_cast<int>(per_agent_.size()); }
  const std::vector<std::vector<int>>& per_agent() const { return per_agent_; }

  /// Slots of the k-th valid joint action.
  void slots(std::size_t k, std::span<int> out) const;
  std::uint64_t joint_index(std::size_t k) const;
  /// Position of a canonical joint-action index in this list.
  std::optional<std::size_t> find(std::uint64_t joint_index) const;

private:
  int num_nodes_;
  std::vector<std::vector<int>> per_agent_;
  std::size_t count_;
};

struct Rollout
{
  double true_cost = 0.0;
  std::vector<JointState> trajectory; ///< visited configurations, start first
  std::vector<JointAction> actions;
  bool reached_goal = false;
};

struct StepOutcome
{
  double reward = 0.0;
  double team_cost = 0.0;
  bool terminal = false;
  bool truncated = false;
};

/// Episodic wrapper: start configuration, horizon, shaped reward.
class TeamEnv
{
public:
  TeamEnv(std::shared_ptr<const EnvGraph> graph, RewardConfig reward);

  void reset();
  void reset(std::shared_ptr<const EnvGraph> graph);

  /// Applies one joint action given as slots. Throws InvalidAction.
  StepOutcome step(std::span<const int> slots);

  const EnvGraph& graph() const { return *graph_; }
  const std::shared_ptr<const EnvGraph>& graph_ptr() const { return graph_; }
  std::span<const NodeId> positions() const { return positions_; }
  int steps_taken() const { return steps_; }
  int horizon() const { return horizon_; }
  bool done() const { return done_; }

private:
  std::shared_ptr<const EnvGraph> graph_;
  RewardConfig reward_;
  std::vector<NodeId> positions_;
  std::vector<double> scratch_;
  int horizon_ = 0;
  int steps_ = 0;
  bool done_ = false;
};

} // namespace teamcoord
