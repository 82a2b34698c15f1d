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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace teamcoord {

using NodeId = std::int32_t;

inline constexpr double kDefaultSupportActionCost = 0.2;

struct Edge
{
  NodeId u = 0;
  NodeId v = 0;
  double cost = 0.0;

  bool operator==(const Edge&) const = default;
};

/// An agent standing at `supporter` and taking the support action lowers the
/// traversal cost of edge {u, v} to `reduced_cost`.
struct SupportRecord
{
  NodeId supporter = 0;
  NodeId u = 0;
  NodeId v = 0;
  double reduced_cost = 0.0;

  bool operator==(const SupportRecord&) const = default;
};

/// Plain description of an environment graph, exactly as stored on disk.
/// Nothing here is checked; see `validate` and `EnvGraph`.
struct GraphData
{
  int num_nodes = 0;
  std::vector<Edge> edges;
  std::vector<SupportRecord> supports;
  double support_action_cost = kDefaultSupportActionCost;
  std::vector<NodeId> starts;
  std::vector<NodeId> goals;

  bool operator==(const GraphData&) const = default;
};

/// Lists every violated invariant. An empty result means the data is valid.
std::vector<std::string> validate(const GraphData& data);

class GraphValidationError : public std::runtime_error
{
public:
  explicit GraphValidationError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

private:
  std::vector<std::string> violations_;
};

class GraphParseError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class InfeasibleDensity : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// Support offered to one edge by one node.
struct EdgeSupport
{
  NodeId supporter;
  double reduced_cost;
};

/// Validated, immutable environment graph with lookup tables for the solvers.
class EnvGraph
{
public:
  /// Throws GraphValidationError when `validate(data)` is non-empty.
  explicit EnvGraph(GraphData data);

  const GraphData& data() const { return data_; }
  int num_nodes() const { return data_.num_nodes; }
  int num_agents() const { return static_cast<int>(data_.starts.size()); }
  double support_action_cost() const { return data_.support_action_cost; }
  const std::vector<NodeId>& starts() const { return data_.starts; }
  const std::vector<NodeId>& goals() const { return data_.goals; }
  std::size_t num_edges() const { return data_.edges.size(); }

  /// Sorted neighbour list of `node`.
  const std::vector<NodeId>& neighbors(NodeId node) const { return adjacency_[node]; }
  bool adjacent(NodeId a, NodeId b) const { return edge_index(a, b) >= 0; }

  /// Index into data().edges, or -1 when {a, b} is not an edge.
  int edge_index(NodeId a, NodeId b) const { return edge_lookup_[a * data_.num_nodes + b]; }
  double nominal_cost(int edge) const { return data_.edges[edge].cost; }

  /// Support offered to an edge, sorted by supporter.
  const std::vector<EdgeSupport>& edge_supports(int edge) const { return edge_supports_[edge]; }
  bool is_risky(int edge) const { return !edge_supports_[edge].empty(); }

  /// True when `node` appears as the supporter of at least one record.
  bool is_supporter(NodeId node) const { return supporter_flag_[node] != 0; }

  bool is_goal(NodeId node) const { return goal_flag_[node] != 0; }

  bool operator==(const EnvGraph& other) const { return data_ == other.data_; }

private:
  GraphData data_;
  std::vector<std::vector<NodeId>> adjacency_;
  std::vector<int> edge_lookup_;
  std::vector<std::vector<EdgeSupport>> edge_supports_;
  std::vector<std::uint8_t> supporter_flag_;
  std::vector<std::uint8_t> goal_flag_;
};

enum class Density
{
  Sparse,
  Moderate,
  Dense
};

std::string_view to_string(Density density);
/// Accepts "sparse", "moderate", "dense" (case-sensitive).
std::optional<Density> parse_density(std::string_view text);

/// Number of edges a generated graph of the given class has.
/// Throws InfeasibleDensity when the class cannot be realised on `num_nodes`.
int density_edge_count(int num_nodes, Density density);

struct GenerateOptions
{
  int num_nodes = 5;
  Density density = Density::Sparse;
  double risky_fraction = 0.3;
  int num_agents = 2;
  std::uint64_t seed = 0;
};

/// Random connected graph with risky edges. A pure function of its options;
/// the draw order is documented in envgraph.cpp.
EnvGraph generate(const GenerateOptions& options);

void save(const EnvGraph& graph, std::ostream& out);
void save(const EnvGraph& graph, const std::filesystem::path& path);
std::string to_json_string(const EnvGraph& graph);

/// Parses and validates. Throws GraphParseError or GraphValidationError.
EnvGraph load(std::istream& in);
EnvGraph load(const std::filesystem::path& path);
EnvGraph load_from_string(std::string_view text);

struct PathResult
{
  double cost = 0.0;
  std::vector<NodeId> path;
};

/// Dijkstra over nominal costs (support records ignored).
PathResult shortest_path(const EnvGraph& graph, NodeId src, NodeId dst);

} // namespace teamcoord
