#pragma once

#include "teamcoord/envgraph.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <vector>

namespace teamcoord::testing {

/// Reference instance: 0 -(1.0)- 1 -(2.0, 0.5 from node 0)- 2, kappa 0.2,
/// two agents starting at 0, goal {2}.
inline GraphData star_data(std::vector<NodeId> starts = {0, 0})
{
  GraphData g;
  g.num_nodes = 3;
  g.edges = {{0, 1, 1.0}, {1, 2, 2.0}};
  g.supports = {{0, 1, 2, 0.5}};
  g.support_action_cost = 0.2;
  g.starts = std::move(starts);
  g.goals = {2};
  return g;
}

inline EnvGraph star_graph(std::vector<NodeId> starts = {0, 0}) { return EnvGraph(star_data(std::move(starts))); }

/// 0 - 1 - 2 with unit costs, one agent from 0 to 2.
inline GraphData path_data()
{
  GraphData g;
  g.num_nodes = 3;
  g.edges = {{0, 1, 1.0}, {1, 2, 1.0}};
  g.support_action_cost = 0.2;
  g.starts = {0};
  g.goals = {2};
  return g;
}

inline EnvGraph with_starts(const EnvGraph& graph, std::vector<NodeId> starts)
{
  GraphData d = graph.data();
  d.starts = std::move(starts);
  return EnvGraph(std::move(d));
}

inline EnvGraph without_supports(const EnvGraph& graph)
{
  GraphData d = graph.data();
  d.supports.clear();
  return EnvGraph(std::move(d));
}

/// Minimum nominal cost over all simple paths, by exhaustive DFS.
inline double brute_force_path_cost(const EnvGraph& graph, NodeId src, NodeId dst)
{
  double best = std::numeric_limits<double>::infinity();
  std::vector<char> on_path(graph.num_nodes(), 0);
  std::function<void(NodeId, double)> dfs = [&](NodeId at, double cost) {
    if (at == dst) {
      best = std::min(best, cost);
      return;
    }
    on_path[at] = 1;
    for (const Edge& e : graph.data().edges) {
      NodeId next = -1;
      if (e.u == at)
        next = e.v;
      else if (e.v == at)
        next = e.u;
      if (next >= 0 && !on_path[next])
        dfs(next, cost + e.cost);
    }
    on_path[at] = 0;
  };
  dfs(src, 0.0);
  return best;
}

} // namespace teamcoord::testing
