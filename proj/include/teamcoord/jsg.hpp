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

#include <cstdint>
#include <span>
#include <vector>

namespace teamcoord {

/// Arc of the joint state graph. `label` is the canonical joint-action index
/// of the cheapest joint action between the two configurations.
struct JsgArc
{
  std::uint64_t to;
  double cost;
  std::uint64_t label;
};

struct JsgBuildOptions
{
  std::size_t memory_budget_bytes = 2 * kGiB;
  Deadline deadline;
};

/// Explicit product graph over all team configurations. Vertex ids are the
/// mixed-radix state indices from mdp.hpp.
class JointStateGraph
{
public:
  int num_nodes() const { return num_nodes_; }
  int num_agents() const { return num_agents_; }
  std::uint64_t num_vertices() const { return offsets_.size() - 1; }
  std::size_t num_arcs() const { return arcs_.size(); }
  std::uint64_t source() const { return source_; }
  bool is_sink(std::uint64_t v) const { return sink_[v] != 0; }

  std::span<const JsgArc> arcs_from(std::uint64_t v) const
  {
    return {arcs_.data() + offsets_[v], arcs_.data() + offsets_[v + 1]};
  }

  JointState configuration(std::uint64_t v) const;
  JointAction label(std::uint64_t from, const JsgArc& arc) const;

private:
  friend JointStateGraph build_jsg(const EnvGraph&, int, const JsgBuildOptions&);

  int num_nodes_ = 0;
  int num_agents_ = 0;
  std::uint64_t source_ = 0;
  std::vector<std::uint64_t> offsets_;
  std::vector<JsgArc> arcs_;
  std::vector<std::uint8_t> sink_;
};

/// Storage the JSG (including the reverse index used by `solve`) would need,
/// or SIZE_MAX when the count overflows.
std::size_t jsg_memory_estimate(const EnvGraph& graph, int num_agents);

/// Throws MemoryBudgetExceeded ("JSG construction infeasible") before
/// allocating when the estimate exceeds the budget, and TimeLimitExceeded
/// when the deadline passes mid-build.
JointStateGraph build_jsg(const EnvGraph& graph, int num_agents, const JsgBuildOptions& options = {});

class Unsolvable : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct LabeledArc
{
  JointState from;
  JointState to;
  double cost = 0.0;
  JointAction label;
};

struct JsgSolution
{
  double optimal_cost = 0.0;
  std::vector<LabeledArc> arcs;
};

/// Minimum-cost path from the source to any sink. Among equal costs the path
/// with fewer arcs wins, then the lexicographically smallest configuration
/// sequence.
JsgSolution solve(const JointStateGraph& jsg, const Deadline& deadline = {});

struct BruteForceOptions
{
  /// Upper bound on configurations * (horizon + 1) memo entries.
  std::uint64_t max_memo_entries = 20'000'000;
  std::uint64_t max_expansions = 200'000'000;
};

class SearchBudgetExceeded : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Depth-first enumeration of joint-action sequences of length <= horizon
/// with cost pruning. Independent of the JSG; used as a test oracle.
double brute_force_optimal(const EnvGraph& graph,
                           int num_agents,
                           int horizon,
                           const BruteForceOptions& options = {});

} // namespace teamcoord
