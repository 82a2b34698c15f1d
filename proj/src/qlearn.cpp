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

#include "teamcoord/qlearn.hpp"

#include "binary_io.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

namespace teamcoord {

const std::vector<double>* QTable::find(std::uint64_t state) const
{
  const auto it = rows_.find(state);
  return it == rows_.end() ? nullptr : &it->second;
}

std::vector<double>& QTable::row(std::uint64_t state, std::size_t width)
{
  auto [it, inserted] = rows_.try_emplace(state);
  if (inserted) {
    it->second.assign(width, 0.0);
    entries_ += width;
  }
  return it->second;
}

double QTable::value(std::uint64_t state, std::size_t k) const
{
  const auto* r = find(state);
  return r == nullptr ? 0.0 : (*r)[k];
}

double QTable::max_value(std::uint64_t state) const
{
  const auto* r = find(state);
  if (r == nullptr || r->empty())
    return 0.0;
  return *std::max_element(r->begin(), r->end());
}

std::size_t QTable::approx_bytes() const
{
  // Node + bucket overhead of the hash map plus the row payloads.
  constexpr std::size_t per_row = 64;
  return rows_.size() * per_row + entries_ * sizeof(double);
}

bool QTable::operator==(const QTable& other) const
{
  return num_nodes_ == other.num_nodes_ && num_agents_ == other.num_agents_ && rows_ == other.rows_;
}

double EpsilonSchedule::at(int episode, int max_episodes) const
{
  const double span = decay_fraction * static_cast<double>(max_episodes);
  if (span <= 0.0)
    return final;
  const double t = static_cast<double>(episode) / span;
  if (t >= 1.0)
    return final;
  return initial + (final - initial) * t;
}

void QConfig::check() const
{
  reward.check();
  if (!(learning_rate > 0.0 && learning_rate <= 1.0))
    throw std::invalid_argument("learning_rate must lie in (0, 1]");
  for (double e : {epsilon.initial, epsilon.final})
    if (!(e >= 0.0 && e <= 1.0))
      throw std::invalid_argument("epsilon must lie in [0, 1]");
  if (convergence_window <= 0 || !(convergence_band > 0.0))
    throw std::invalid_argument("convergence window and band must be positive");
  if (max_episodes < 0)
    throw std::invalid_argument("max_episodes must be nonnegative");
}

namespace {

std::size_t greedy_index(const QTable& q, std::uint64_t state)
{
  const auto* r = q.find(state);
  if (r == nullptr)
    return 0;
  // max_element returns the first maximum: ties go to the lowest index.
  return static_cast<std::size_t>(std::max_element(r->begin(), r->end()) - r->begin());
}

/// Shaped, undiscounted return of the epsilon = 0 policy from the start.
double greedy_return(const QTable& q, const EnvGraph& graph, const RewardConfig& reward, bool& reached)
{
  const int n = graph.num_nodes();
  const int agents = graph.num_agents();
  std::vector<NodeId> positions = graph.starts();
  std::vector<int> slots(agents);
  std::vector<double> per_agent(agents);
  bool terminal = is_terminal(graph, std::span<const NodeId>(positions));
  double total = 0.0;
  const int cap = horizon(graph, agents);
  for (int t = 0; t < cap && !terminal; ++t) {
    const ValidJointActions actions(graph, positions);
    actions.slots(greedy_index(q, state_index(positions, n)), slots);
    int cc = 0, rc = 0;
    const double cost = evaluate_step(graph, positions, slots, per_agent, cc, rc);
    for (int a = 0; a < agents; ++a)
      if (slots[a] != n)
        positions[a] = slots[a];
    terminal = is_terminal(graph, std::span<const NodeId>(positions));
    total += combine_reward(reward, terminal, cost, cc, rc);
  }
  reached = terminal;
  return total;
}

} // namespace

std::size_t select_action(const QTable& q,
                          std::uint64_t state,
                          const ValidJointActions& actions,
                          double epsilon,
                          Rng& rng)
{
  if (rng.uniform01() < epsilon)
    return static_cast<std::size_t>(rng.below(actions.size()));
  return greedy_index(q, state);
}

JointAction select_action(const QTable& q, const EnvGraph& graph, const JointState& state, double epsilon, Rng& rng)
{
  check_state(graph, state);
  const ValidJointActions actions(graph, state.positions);
  const std::size_t k = select_action(q, state_index(state.positions, graph.num_nodes()), actions, epsilon, rng);
  std::vector<int> slots(state.positions.size());
  actions.slots(k, slots);
  JointAction out;
  for (std::size_t a = 0; a < slots.size(); ++a)
    out.actions.push_back(action_of_slot(slots[a], state.positions[a], graph.num_nodes()));
  return out;
}

double update(QTable& q,
              std::uint64_t state,
              const ValidJointActions& actions,
              std::size_t action,
              double shaped_reward,
              std::uint64_t next_state,
              bool terminal,
              const QConfig& config)
{
  const double bootstrap = terminal ? 0.0 : q.max_value(next_state);
  auto& r = q.row(state, actions.size());
  double& value = r[action];
  value += config.learning_rate * (shaped_reward + config.reward.gamma * bootstrap - value);
  return value;
}

bool returns_converged(const std::vector<double>& returns, int window, double band)
{
  if (window <= 0 || returns.size() < static_cast<std::size_t>(window))
    return false;
  const auto first = returns.end() - window;
  const auto [lo, hi] = std::minmax_element(first, returns.end());
  return *hi - *lo <= band;
}

std::size_t qtable_memory_estimate(const EnvGraph& graph, int num_agents)
{
  // Sum over configurations of prod_n |valid slots at v_n| factorises into
  // (sum_v |valid slots at v|)^N.
  std::uint64_t per_node_total = 0;
  for (NodeId v = 0; v < graph.num_nodes(); ++v)
    per_node_total += graph.neighbors(v).size() + 1 + (graph.is_supporter(v) ? 1 : 0);
  const auto entries = checked_power(per_node_total, num_agents);
  const auto states = checked_power(static_cast<std::uint64_t>(graph.num_nodes()), num_agents);
  if (!entries || !states || *entries > std::numeric_limits<std::size_t>::max() / 16)
    return std::numeric_limits<std::size_t>::max();
  return *entries * sizeof(double) + *states * 64;
}

QTrainResult train(const EnvGraph& graph, const QConfig& config)
{
  config.check();
  const int agents = graph.num_agents();
  const std::size_t estimate = qtable_memory_estimate(graph, agents);
  if (estimate > config.table_budget_bytes)
    throw QTableIntractable("Q-table intractable: full table needs ~" + std::to_string(estimate) +
                            " bytes, budget is " + std::to_string(config.table_budget_bytes));

  const int n = graph.num_nodes();
  const int cap = horizon(graph, agents);
  QTrainResult result{QTable(n, agents), {}, {}, std::nullopt};
  QTable& q = result.table;
  Rng rng(config.seed);

  std::vector<NodeId> positions(agents), next(agents);
  std::vector<int> slots(agents);
  std::vector<double> per_agent(agents);

  int reaching_streak = 0;
  for (int episode = 0; episode < config.max_episodes; ++episode) {
    if ((episode & 0x3f) == 0)
      config.deadline.check("Q-Learning");
    const double epsilon = config.epsilon.at(episode, config.max_episodes);
    positions = graph.starts();
    double episode_return = 0.0;
    bool terminal = is_terminal(graph, std::span<const NodeId>(positions));
    for (int t = 0; t < cap && !terminal; ++t) {
      const std::uint64_t s = state_index(positions, n);
      const ValidJointActions actions(graph, positions);
      const std::size_t k = select_action(q, s, actions, epsilon, rng);
      actions.slots(k, slots);

      int cc = 0, rc = 0;
      const double cost = evaluate_step(graph, positions, slots, per_agent, cc, rc);
      for (int a = 0; a < agents; ++a)
        next[a] = slots[a] == n ? positions[a] : slots[a];
      terminal = is_terminal(graph, std::span<const NodeId>(next));
      const double reward = combine_reward(config.reward, terminal, cost, cc, rc);

      update(q, s, actions, k, reward, state_index(next, n), terminal, config);
      episode_return += reward;
      positions.swap(next);
    }
    if (q.approx_bytes() > config.table_budget_bytes)
      throw QTableIntractable("Q-table intractable: grew past the budget during training");

    result.episode_returns.push_back(episode_return);
    // Exploration noise never settles while epsilon stays positive, so the
    // band is checked on the exploiting policy instead.
    // A flat return from a policy that never reaches the goal is not
    // convergence, so the window must also be all goal-reaching.
    bool reached = false;
    result.greedy_returns.push_back(greedy_return(q, graph, config.reward, reached));
    reaching_streak = reached ? reaching_streak + 1 : 0;
    if (reaching_streak >= config.convergence_window &&
        returns_converged(result.greedy_returns, config.convergence_window, config.convergence_band)) {
      result.converged_at = episode;
      break;
    }
  }
  return result;
}

Rollout greedy_rollout(const QTable& q, const EnvGraph& graph)
{
  const int n = graph.num_nodes();
  const int agents = graph.num_agents();
  if (q.num_nodes() != n || q.num_agents() != agents)
    throw std::invalid_argument("Q-table shape does not match the graph");

  Rollout out;
  std::vector<NodeId> positions = graph.starts();
  std::vector<int> slots(agents);
  out.trajectory.push_back(JointState{positions});
  out.reached_goal = is_terminal(graph, std::span<const NodeId>(positions));
  const int cap = horizon(graph, agents);
  for (int t = 0; t < cap && !out.reached_goal; ++t) {
    const ValidJointActions actions(graph, positions);
    actions.slots(greedy_index(q, state_index(positions, n)), slots);
    out.true_cost += team_step_cost(graph, positions, slots);

    JointAction action;
    for (int a = 0; a < agents; ++a) {
      action.actions.push_back(action_of_slot(slots[a], positions[a], n));
      if (slots[a] != n)
        positions[a] = slots[a];
    }
    out.actions.push_back(std::move(action));
    out.trajectory.push_back(JointState{positions});
    out.reached_goal = is_terminal(graph, std::span<const NodeId>(positions));
  }
  return out;
}

//==============================================================================
void dump_qtable(const QTable& q, const EnvGraph& graph, std::ostream& out)
{
  const int n = graph.num_nodes();
  std::vector<std::uint64_t> states;
  states.reserve(q.rows().size());
  for (const auto& [s, row] : q.rows())
    states.push_back(s);
  std::sort(states.begin(), states.end());

  binary::write_magic(out, "QTB1");
  binary::write_u64(out, q.num_entries());
  std::vector<NodeId> positions(q.num_agents());
  for (std::uint64_t s : states) {
    decode_state_index(s, n, positions);
    const ValidJointActions actions(graph, positions);
    const auto& row = *q.find(s);
    for (std::size_t k = 0; k < row.size(); ++k) {
      binary::write_u64(out, s);
      binary::write_u64(out, actions.joint_index(k));
      binary::write_f64(out, row[k]);
    }
  }
  if (!out)
    throw std::runtime_error("failed to write Q-table dump");
}

void dump_qtable(const QTable& q, const EnvGraph& graph, const std::filesystem::path& path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  dump_qtable(q, graph, out);
}

std::vector<QTableEntry> read_qtable_dump(std::istream& in)
{
  binary::expect_magic(in, "QTB1");
  const std::uint64_t count = binary::read_u64(in);
  std::vector<QTableEntry> entries;
  entries.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 20)));
  for (std::uint64_t i = 0; i < count; ++i) {
    QTableEntry e;
    e.state = binary::read_u64(in);
    e.action = binary::read_u64(in);
    e.value = binary::read_f64(in);
    entries.push_back(e);
  }
  return entries;
}

} // namespace teamcoord
