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

#include <optional>
#include <stdexcept>
#include <string>

namespace teamcoord {

struct SolutionRecord
{
  std::string solver;
  double true_cost = 0.0;
  double wall_time_seconds = 0.0;
  bool reached_goal = false;
  std::optional<double> optimality_ratio;
};

/// Every agent walks its own nominal shortest path to the nearest goal.
/// No support is used, so risky edges are paid in full.
SolutionRecord naive_solve(const EnvGraph& graph);

/// A solution cheaper than the proven optimum.
class OptimalityViolation : public std::logic_error
{
public:
  using std::logic_error::logic_error;
};

/// jsg_optimal / cost, in (0, 1]. Costs within 1e-9 relative of the optimum
/// count as optimal; anything cheaper throws OptimalityViolation.
double optimality_ratio(double cost, double jsg_optimal);

} // namespace teamcoord
