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

#include "teamcoord/baselines.hpp"

#include "teamcoord/limits.hpp"

#include <cmath>
#include <limits>
#include <map>

namespace teamcoord {

SolutionRecord naive_solve(const EnvGraph& graph)
{
  const Stopwatch clock;
  SolutionRecord record;
  record.solver = "naive";
  // Co-located agents share one search.
  std::map<NodeId, double> nearest;
  for (NodeId start : graph.starts()) {
    auto it = nearest.find(start);
    if (it == nearest.end()) {
      double best = std::numeric_limits<double>::infinity();
      for (NodeId goal : graph.goals())
        best = std::min(best, shortest_path(graph, start, goal).cost);
      it = nearest.emplace(start, best).first;
    }
    record.true_cost += it->second;
  }
  record.reached_goal = std::isfinite(record.true_cost);
  record.wall_time_seconds = clock.seconds();
  return record;
}

double optimality_ratio(double cost, double jsg_optimal)
{
  if (!(jsg_optimal > 0.0) || !std::isfinite(jsg_optimal))
    throw std::invalid_argument("optimality_ratio needs a positive finite optimum");
  if (!std::isfinite(cost))
    throw std::invalid_argument("optimality_ratio needs a finite cost");
  if (cost < jsg_optimal * (1.0 - 1e-9))
    throw OptimalityViolation("solution beats proven optimum (" + std::to_string(cost) + " < " +
                              std::to_string(jsg_optimal) + ")");
  return std::min(1.0, jsg_optimal / cost);
}

} // namespace teamcoord
