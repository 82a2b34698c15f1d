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

#include "teamcoord/jsg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <tuple>

namespace teamcoord {

namespace {

void check_team(const EnvGraph& graph, int num_agents)
{
  if (num_agents < 1)
    throw std::invalid_argument("num_agents must be positive");
  if (num_agents != graph.num_agents())
    throw std::invalid_argument("graph lists " + std::to_string(graph.num_agents()) + " start(s) but " +
                                std::to_string(num_agents) + " agents were requested");
}

std::size_t saturating_mul(std::size_t a, std::size_t b)
{
  if (a != 0 && b > std::numeric_limits<std::size_t>::max() / a)
    return std::numeric_limits<std::size_t>::max();
  return a * b;
}

std::size_t saturating_add(std::size_t a, std::size_t b)
{
  return b > std::numeric_limits<std::size_t>::max() - a ? std::numeric_limits<std::size_t>::max() : a + b;
}

} // namespace

JointState JointStateGraph::configuration(std::uint64_t v) const
{
  JointState s;
  s.positions.resize(num_agents_);
  decode_state_index(v, num_nodes_, s.positions);
  return s;
}

JointAction JointStateGraph::label(std::uint64_t from, const JsgArc& arc) const
{
  const JointState at = configuration(from);
  std::vector<int> slots(num_agents_);
  decode_joint_action_index(arc.label, num_nodes_, slots);
  JointAction out;
  for (int k = 0; k < num_agents_; ++k)
    out.actions.push_back(action_of_slot(slots[k], at.positions[k], num_nodes_));
  return out;
}

std::size_t jsg_memory_estimate(const EnvGraph& graph, int num_agents)
{
  const auto vertices = checked_power(static_cast<std::uint64_t>(graph.num_nodes()), num_agents);
  // Distinct successor configurations per vertex are prod_n (deg(v_n) + 1);
  // summed over all vertices this factorises to (2|E| + |V|)^N.
  const auto arcs =
    checked_power(2 * static_cast<std::uint64_t>(graph.num_edges()) + graph.num_nodes(), num_agents);
  if (!vertices || !arcs)
    return std::numeric_limits<std::size_t>::max();
  constexpr std::size_t per_vertex = sizeof(std::uint64_t) * 2 + 1; // offsets, reverse offsets, sink
  constexpr std::size_t per_arc = sizeof(JsgArc) + sizeof(std::uint64_t) + sizeof(double);
  return saturating_add(saturating_mul(*vertices, per_vertex), saturating_mul(*arcs, per_arc));
}

JointStateGraph build_jsg(const EnvGraph& graph, int num_agents, const JsgBuildOptions& options)
{
  check_team(graph, num_agents);
  const std::size_t estimate = jsg_memory_estimate(graph, num_agents);
  if (estimate > options.memory_budget_bytes)
    throw MemoryBudgetExceeded("JSG construction infeasible: needs ~" + std::to_string(estimate) +
                               " bytes, budget is " + std::to_string(options.memory_budget_bytes));

  const int n = graph.num_nodes();
  const std::uint64_t vertices = *checked_power(static_cast<std::uint64_t>(n), num_agents);

  JointStateGraph jsg;
  jsg.num_nodes_ = n;
  jsg.num_agents_ = num_agents;
  jsg.source_ = state_index(graph.starts(), n);
  jsg.offsets_.reserve(vertices + 1);
  jsg.offsets_.push_back(0);
  jsg.sink_.assign(vertices, 0);

  std::vector<NodeId> from(num_agents), to(num_agents);
  std::vector<int> slots(num_agents);
  std::vector<JsgArc> candidates;

  for (std::uint64_t v = 0; v < vertices; ++v) {
    if ((v & 0xff) == 0)
      options.deadline.check("JSG build");
    decode_state_index(v, n, from);
    jsg.sink_[v] = is_terminal(graph, std::span<const NodeId>(from)) ? 1 : 0;

    const ValidJointActions actions(graph, from);
    candidates.clear();
    candidates.reserve(actions.size());
    for (std::size_t k = 0; k < actions.size(); ++k) {
      actions.slots(k, slots);
      for (int a = 0; a < num_agents; ++a)
        to[a] = slots[a] == n ? from[a] : slots[a];
      const double cost = team_step_cost(graph, from, slots);
      candidates.push_back({state_index(to, n), cost, joint_action_index(slots, n)});
    }
    // Keep the cheapest label per destination; equal costs keep the lowest
    // canonical index.
    std::sort(candidates.begin(), candidates.end(), [](const JsgArc& a, const JsgArc& b) {
      return std::tie(a.to, a.cost, a.label) < std::tie(b.to, b.cost, b.label);
    });
    for (std::size_t i = 0; i < candidates.size(); ++i)
      if (i == 0 || candidates[i].to != candidates[i - 1].to)
        jsg.arcs_.push_back(candidates[i]);
    jsg.offsets_.push_back(jsg.arcs_.size());
  }
  return jsg;
}

//==============================================================================
JsgSolution solve(const JointStateGraph& jsg, const Deadline& deadline)
{
  const std::uint64_t vertices = jsg.num_vertices();

  // Reverse adjacency in CSR form.
  std::vector<std::uint64_t> rev_offsets(vertices + 1, 0);
  for (std::uint64_t v = 0; v < vertices; ++v)
    for (const JsgArc& arc : jsg.arcs_from(v))
      ++rev_offsets[arc.to + 1];
  for (std::uint64_t v = 0; v < vertices; ++v)
    rev_offsets[v + 1] += rev_offsets[v];
  struct RevArc
  {
    std::uint64_t from;
    double cost;
  };
  std::vector<RevArc> rev(rev_offsets.back());
  {
    std::vector<std::uint64_t> fill(rev_offsets.begin(), rev_offsets.end() - 1);
    for (std::uint64_t v = 0; v < vertices; ++v)
      for (const JsgArc& arc : jsg.arcs_from(v))
        rev[fill[arc.to]++] = {v, arc.cost};
  }

  // Uniform-cost search backwards from every sink; key is (cost, arcs).
  constexpr double inf = std::numeric_limits<double>::infinity();
  constexpr std::uint64_t no_hops = std::numeric_limits<std::uint64_t>::max();
  std::vector<double> dist(vertices, inf);
  std::vector<std::uint64_t> hops(vertices, no_hops);
  using Key = std::tuple<double, std::uint64_t, std::uint64_t>;
  std::priority_queue<Key, std::vector<Key>, std::greater<>> queue;
  for (std::uint64_t v = 0; v < vertices; ++v)
    if (jsg.is_sink(v)) {
      dist[v] = 0.0;
      hops[v] = 0;
      queue.push({0.0, 0, v});
    }

  std::size_t pops = 0;
  while (!queue.empty()) {
    const auto [d, h, v] = queue.top();
    queue.pop();
    if (d != dist[v] || h != hops[v])
      continue;
    if ((++pops & 0xfff) == 0)
      deadline.check("JSG search");
    if (v == jsg.source())
      break;
    for (std::uint64_t i = rev_offsets[v]; i < rev_offsets[v + 1]; ++i) {
      const auto [u, c] = rev[i];
      if (jsg.is_sink(u))
        continue;
      const double nd = d + c;
      const std::uint64_t nh = h + 1;
      if (nd < dist[u] || (nd == dist[u] && nh < hops[u])) {
        dist[u] = nd;
        hops[u] = nh;
        queue.push({nd, nh, u});
      }
    }
  }

  const std::uint64_t source = jsg.source();
  if (!std::isfinite(dist[source]))
    throw Unsolvable("no terminal configuration is reachable from the start");

  JsgSolution solution;
  solution.optimal_cost = dist[source];

  // Walk forward choosing the smallest next configuration on an optimal
  // (cost, arcs) continuation.
  std::uint64_t at = source;
  while (!jsg.is_sink(at)) {
    const double tol = 1e-9 * std::max(1.0, std::abs(dist[at]));
    const JsgArc* chosen = nullptr;
    for (const JsgArc& arc : jsg.arcs_from(at)) {
      if (hops[arc.to] == no_hops || hops[arc.to] + 1 != hops[at])
        continue;
      if (std::abs(arc.cost + dist[arc.to] - dist[at]) <= tol) {
        chosen = &arc;
        break;
      }
    }
    if (chosen == nullptr)
      throw std::logic_error("JSG path reconstruction failed");
    solution.arcs.push_back({jsg.configuration(at), jsg.configuration(chosen->to), chosen->cost,
                             jsg.label(at, *chosen)});
    at = chosen->to;
  }
  return solution;
}

//==============================================================================
namespace {

class BruteForce
{
public:
  BruteForce(const EnvGraph& graph, int num_agents, int horizon, const BruteForceOptions& options)
    : graph_(graph), agents_(num_agents), horizon_(horizon), options_(options)
  {
    const auto configs = checked_power(static_cast<std::uint64_t>(graph.num_nodes()), num_agents);
    const std::uint64_t depth = static_cast<std::uint64_t>(horizon) + 1;
    if (!configs || *configs > options.max_memo_entries / depth)
      throw SearchBudgetExceeded("brute-force search space exceeds the configured budget");
    configs_ = *configs;
    best_at_.assign(configs_ * depth, std::numeric_limits<double>::infinity());
  }

  double run()
  {
    std::vector<NodeId> start = graph_.starts();
    dfs(start, 0, 0.0);
    return best_;
  }

private:
  // True when this configuration was already reached no later and no dearer.
  bool dominated(std::uint64_t config, int depth, double cost) const
  {
    const std::size_t row = config * static_cast<std::size_t>(horizon_ + 1);
    for (int d = 0; d <= depth; ++d)
      if (best_at_[row + d] <= cost)
        return true;
    return false;
  }

  void dfs(std::vector<NodeId>& positions, int depth, double cost)
  {
    if (cost >= best_)
      return;
    if (is_terminal(graph_, std::span<const NodeId>(positions))) {
      best_ = cost;
      return;
    }
    if (depth == horizon_)
      return;
    const std::uint64_t config = state_index(positions, graph_.num_nodes());
    if (dominated(config, depth, cost))
      return;
    best_at_[config * static_cast<std::size_t>(horizon_ + 1) + depth] = cost;
    if (++expansions_ > options_.max_expansions)
      throw SearchBudgetExceeded("brute-force expansion budget exhausted");

    const int n = graph_.num_nodes();
    const ValidJointActions actions(graph_, positions);
    std::vector<int> slots(agents_);
    std::vector<NodeId> next(agents_);
    for (std::size_t k = 0; k < actions.size(); ++k) {
      actions.slots(k, slots);
      const double step = team_step_cost(graph_, positions, slots);
      for (int a = 0; a < agents_; ++a)
        next[a] = slots[a] == n ? positions[a] : slots[a];
      dfs(next, depth + 1, cost + step);
    }
  }

  const EnvGraph& graph_;
  int agents_;
  int horizon_;
  BruteForceOptions options_;
  std::uint64_t configs_ = 0;
  std::vector<double> best_at_;
  std::uint64_t expansions_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
};

} // namespace

double brute_force_optimal(const EnvGraph& graph, int num_agents, int horizon, const BruteForceOptions& options)
{
  check_team(graph, num_agents);
  if (horizon < 1)
    throw std::invalid_argument("horizon must be positive");
  const double best = BruteForce(graph, num_agents, horizon, options).run();
  if (!std::isfinite(best))
    throw Unsolvable("no terminal configuration within the horizon");
  return best;
}

} // namespace teamcoord
