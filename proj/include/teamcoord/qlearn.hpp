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
#include "teamcoord/limits.hpp"
#include "teamcoord/mdp.hpp"
#include "teamcoord/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <unordered_map>
#include <vector>

namespace teamcoord {

/// Tabular action values over joint states. Rows are allocated on first
/// write and hold one value per *valid* joint action of that state, in
/// canonical order, so invalid pairs have no storage at all.
class QTable
{
public:
  QTable(int num_nodes, int num_agents) : num_nodes_(num_nodes), num_agents_(num_agents) {}

  int num_nodes() const { return num_nodes_; }
  int num_agents() const { return num_agents_; }

  /// Row for a state, or nullptr if never written (all values 0).
  const std::vector<double>* find(std::uint64_t state) const;
  /// Row for a state, allocating `width` zeros on first access.
  std::vector<double>& row(std::uint64_t state, std::size_t width);

  /// Q(s, a) for the k-th valid action, 0 when the row is absent.
  double value(std::uint64_t state, std::size_t k) const;
  /// max over valid actions of Q(s, .), 0 when the row is absent.
  double max_value(std::uint64_t state) const;

  std::size_t num_states() const { return rows_.size(); }
  std::size_t num_entries() const { return entries_; }
  std::size_t approx_bytes() const;

  const std::unordered_map<std::uint64_t, std::vector<double>>& rows() const { return rows_; }

  bool operator==(const QTable& other) const;

private:
  int num_nodes_;
  int num_agents_;
  std::unordered_map<std::uint64_t, std::vector<double>> rows_;
  std::size_t entries_ = 0;
};

struct EpsilonSchedule
{
  double initial = 1.0;
  double final = 0.05;
  /// Fraction of max_episodes over which epsilon decays linearly.
  double decay_fraction = 0.5;

  double at(int episode, int max_episodes) const;
};

struct QConfig
{
  double learning_rate = 0.1;
  EpsilonSchedule epsilon;
  RewardConfig reward;
  int convergence_window = 500;
  double convergence_band = 0.2;
  int max_episodes = 20'000;
  std::uint64_t seed = 0;
  std::size_t table_budget_bytes = kGiB;
  Deadline deadline;

  void check() const;
};

/// Masked epsilon-greedy choice. Returns the position of the chosen action in
/// `actions` (canonical order). Exactly one uniform draw decides between
/// exploring and exploiting; exploring draws one more index.
std::size_t select_action(const QTable& q,
                          std::uint64_t state,
                          const ValidJointActions& actions,
                          double epsilon,
                          Rng& rng);

/// Same as above but returns the joint action itself.
JointAction select_action(const QTable& q, const EnvGraph& graph, const JointState& state, double epsilon, Rng& rng);

/// One Bellman backup. `next_state` is ignored when `terminal`. Returns the
/// new Q(s, a).
double update(QTable& q,
              std::uint64_t state,
              const ValidJointActions& actions,
              std::size_t action,
              double shaped_reward,
              std::uint64_t next_state,
              bool terminal,
              const QConfig& config);

/// Returns true when the most recent `window` values span at most `band`.
bool returns_converged(const std::vector<double>& returns, int window, double band);

struct QTrainResult
{
  QTable table;
  std::vector<double> episode_returns; ///< shaped training returns
  std::vector<double> greedy_returns;  ///< shaped return of the greedy policy after each episode
  std::optional<int> converged_at; ///< episode index at which the rule fired
};

class QTableIntractable : public MemoryBudgetExceeded
{
public:
  using MemoryBudgetExceeded::MemoryBudgetExceeded;
};

/// Full-table size estimate in bytes (every valid pair of every state).
std::size_t qtable_memory_estimate(const EnvGraph& graph, int num_agents);

/// Throws QTableIntractable when the full table would exceed the budget and
/// TimeLimitExceeded when the config deadline passes.
QTrainResult train(const EnvGraph& graph, const QConfig& config);

/// Epsilon = 0 rollout for at most the horizon; cost is the unshaped team cost.
Rollout greedy_rollout(const QTable& q, const EnvGraph& graph);

/// Binary dump: "QTB1", u64 entry count, then per entry u64 state index,
/// u64 joint-action index, f64 value; little-endian, sorted by (state, action).
void dump_qtable(const QTable& q, const EnvGraph& graph, std::ostream& out);
void dump_qtable(const QTable& q, const EnvGraph& graph, const std::filesystem::path& path);

struct QTableEntry
{
  std::uint64_t state;
  std::uint64_t action;
  double value;

  bool operator==(const QTableEntry&) const = default;
};

std::vector<QTableEntry> read_qtable_dump(std::istream& in);

} // namespace teamcoord
