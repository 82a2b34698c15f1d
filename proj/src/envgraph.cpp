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

#include "teamcoord/envgraph.hpp"

#include "teamcoord/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>
#include <utility>

namespace teamcoord {

namespace {

std::string join(const std::vector<std::string>& items)
{
  std::string out;
  for (const auto& item : items) {
    if (!out.empty())
      out += "; ";
    out += item;
  }
  return out;
}

bool valid_node(long long id, int n) { return id >= 0 && id < n; }

bool finite_nonnegative(double x) { return std::isfinite(x) && x >= 0.0; }

std::pair<NodeId, NodeId> ordered(NodeId a, NodeId b)
{
  return a < b ? std::pair{a, b} : std::pair{b, a};
}

} // namespace

//==============================================================================
std::vector<std::string> validate(const GraphData& g)
{
  std::vector<std::string> v;
  const int n = g.num_nodes;
  if (n <= 0) {
    v.push_back("num_nodes must be positive");
    return v;
  }

  std::set<std::pair<NodeId, NodeId>> pairs;
  std::vector<std::vector<NodeId>> adj(n);
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    const Edge& e = g.edges[i];
    const std::string where = "edges[" + std::to_string(i) + "]: ";
    if (!valid_node(e.u, n) || !valid_node(e.v, n)) {
      v.push_back(where + "endpoint out of range");
      continue;
    }
    if (e.u == e.v)
      v.push_back(where + "self-loop");
    if (!finite_nonnegative(e.cost))
      v.push_back(where + "cost must be finite and nonnegative");
    if (!pairs.insert(ordered(e.u, e.v)).second)
      v.push_back(where + "duplicate edge");
    if (e.u != e.v) {
      adj[e.u].push_back(e.v);
      adj[e.v].push_back(e.u);
    }
  }

  std::set<std::tuple<NodeId, NodeId, NodeId>> seen_supports;
  for (std::size_t i = 0; i < g.supports.size(); ++i) {
    const SupportRecord& s = g.supports[i];
    const std::string where = "supports[" + std::to_string(i) + "]: ";
    if (!valid_node(s.supporter, n))
      v.push_back(where + "supporter out of range");
    if (!finite_nonnegative(s.reduced_cost))
      v.push_back(where + "reduced_cost must be finite and nonnegative");
    const Edge* edge = nullptr;
    for (const Edge& e : g.edges) {
      if (ordered(e.u, e.v) == ordered(s.u, s.v)) {
        edge = &e;
        break;
      }
    }
    if (edge == nullptr) {
      v.push_back(where + "support references missing edge");
      continue;
    }
    if (s.reduced_cost >= edge->cost)
      v.push_back(where + "reduced_cost >= nominal_cost");
    const auto [a, b] = ordered(s.u, s.v);
    if (!seen_supports.insert({s.supporter, a, b}).second)
      v.push_back(where + "duplicate support record");
  }

  if (!finite_nonnegative(g.support_action_cost))
    v.push_back("support_action_cost must be finite and nonnegative");

  if (g.starts.empty())
    v.push_back("starts must name at least one agent");
  for (std::size_t i = 0; i < g.starts.size(); ++i)
    if (!valid_node(g.starts[i], n))
      v.push_back("starts[" + std::to_string(i) + "]: node out of range");

  if (g.goals.empty())
    v.push_back("goals must be nonempty");
  for (std::size_t i = 0; i < g.goals.size(); ++i)
    if (!valid_node(g.goals[i], n))
      v.push_back("goals[" + std::to_string(i) + "]: node out of range");

  // Connectivity by flood fill from node 0.
  std::vector<char> seen(n, 0);
  std::vector<NodeId> stack{0};
  seen[0] = 1;
  int reached = 1;
  while (!stack.empty()) {
    const NodeId x = stack.back();
    stack.pop_back();
    for (NodeId y : adj[x])
      if (!seen[y]) {
        seen[y] = 1;
        ++reached;
        stack.push_back(y);
      }
  }
  if (reached != n)
    v.push_back("graph is not connected");

  return v;
}

GraphValidationError::GraphValidationError(std::vector<std::string> violations)
  : std::runtime_error("invalid graph: " + join(violations)),
    violations_(std::move(violations))
{
}

//==============================================================================
EnvGraph::EnvGraph(GraphData data) : data_(std::move(data))
{
  if (auto violations = validate(data_); !violations.empty())
    throw GraphValidationError(std::move(violations));

  const int n = data_.num_nodes;
  adjacency_.assign(n, {});
  edge_lookup_.assign(static_cast<std::size_t>(n) * n, -1);
  for (std::size_t i = 0; i < data_.edges.size(); ++i) {
    const Edge& e = data_.edges[i];
    adjacency_[e.u].push_back(e.v);
    adjacency_[e.v].push_back(e.u);
    edge_lookup_[e.u * n + e.v] = static_cast<int>(i);
    edge_lookup_[e.v * n + e.u] = static_cast<int>(i);
  }
  for (auto& list : adjacency_)
    std::sort(list.begin(), list.end());

  edge_supports_.assign(data_.edges.size(), {});
  supporter_flag_.assign(n, 0);
  for (const SupportRecord& s : data_.supports) {
    edge_supports_[edge_index(s.u, s.v)].push_back({s.supporter, s.reduced_cost});
    supporter_flag_[s.supporter] = 1;
  }
  for (auto& list : edge_supports_)
    std::sort(list.begin(), list.end(), [](const EdgeSupport& a, const EdgeSupport& b) {
      return a.supporter < b.supporter;
    });

  goal_flag_.assign(n, 0);
  for (NodeId g : data_.goals)
    goal_flag_[g] = 1;
}

//==============================================================================
std::string_view to_string(Density density)
{
  switch (density) {
    case Density::Sparse:
      return "sparse";
    case Density::Moderate:
      return "moderate";
    case Density::Dense:
      return "dense";
  }
  return "unknown";
}

std::optional<Density> parse_density(std::string_view text)
{
  if (text == "sparse")
    return Density::Sparse;
  if (text == "moderate")
    return Density::Moderate;
  if (text == "dense")
    return Density::Dense;
  return std::nullopt;
}

int density_edge_count(int n, Density density)
{
  if (n < 2)
    throw InfeasibleDensity("generated graphs need at least 2 nodes");
  const long long tree = n - 1;
  const long long possible = static_cast<long long>(n) * (n - 1) / 2;
  // Integer ceilings: ceil(k/10 * x) == (k*x + 9) / 10.
  switch (density) {
    case Density::Sparse:
      return static_cast<int>(std::min(possible, (12 * tree + 9) / 10));
    case Density::Moderate:
      return static_cast<int>(std::max(tree, (4 * possible + 9) / 10));
    case Density::Dense: {
      const long long count = (7 * possible + 9) / 10;
      // A dense graph must contain at least one cycle.
      if (count <= tree)
        throw InfeasibleDensity("dense band infeasible for " + std::to_string(n) +
                                " nodes: only " + std::to_string(possible) +
                                " possible edge(s)");
      return static_cast<int>(count);
    }
  }
  throw InfeasibleDensity("unknown density class");
}

// Draw order (all from one Rng seeded with options.seed):
//   1. shuffle the node list; node perm[i] (i >= 1) attaches to perm[below(i)]
//   2. list the remaining pairs (u < v) lexicographically, shuffle, and keep
//      as many as the density band needs
//   3. sort edges by (u, v); shuffle edge indices and mark the first
//      round(risky_fraction * E) as risky
//   4. for each edge in order: cost ~ U[1.8, 2.2] if risky else U[0.8, 1.2];
//      risky edges then draw one supporter (below(k) over the candidate list)
//      and reduced_cost ~ U[0.4, 0.6]
//   5. start = below(n); goal = below(n - 1), skipping the start
EnvGraph generate(const GenerateOptions& options)
{
  const int n = options.num_nodes;
  if (options.num_agents < 1)
    throw std::invalid_argument("num_agents must be positive");
  if (!(options.risky_fraction >= 0.0 && options.risky_fraction <= 1.0))
    throw std::invalid_argument("risky_fraction must lie in [0, 1]");
  const int edge_count = density_edge_count(n, options.density);

  Rng rng(options.seed);

  std::vector<NodeId> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(std::span(perm));

  std::vector<std::vector<char>> linked(n, std::vector<char>(n, 0));
  std::vector<std::pair<NodeId, NodeId>> pairs;
  for (int i = 1; i < n; ++i) {
    const NodeId a = perm[i];
    const NodeId b = perm[rng.below(i)];
    pairs.push_back(ordered(a, b));
    linked[a][b] = linked[b][a] = 1;
  }

  std::vector<std::pair<NodeId, NodeId>> extras;
  for (NodeId u = 0; u < n; ++u)
    for (NodeId w = u + 1; w < n; ++w)
      if (!linked[u][w])
        extras.emplace_back(u, w);
  rng.shuffle(std::span(extras));
  const std::size_t extra_count = static_cast<std::size_t>(edge_count - (n - 1));
  pairs.insert(pairs.end(), extras.begin(), extras.begin() + extra_count);
  std::sort(pairs.begin(), pairs.end());

  std::vector<std::vector<NodeId>> adj(n);
  for (const auto& [a, b] : pairs) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  for (auto& list : adj)
    std::sort(list.begin(), list.end());

  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span(order));
  const auto risky_count =
    static_cast<std::size_t>(std::floor(options.risky_fraction * static_cast<double>(pairs.size()) + 0.5));
  std::vector<char> risky(pairs.size(), 0);
  for (std::size_t i = 0; i < risky_count; ++i)
    risky[order[i]] = 1;

  GraphData g;
  g.num_nodes = n;
  g.support_action_cost = kDefaultSupportActionCost;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto [a, b] = pairs[i];
    if (!risky[i]) {
      g.edges.push_back({a, b, rng.uniform(0.8, 1.2)});
      continue;
    }
    g.edges.push_back({a, b, rng.uniform(1.8, 2.2)});

    std::vector<NodeId> candidates;
    for (NodeId x = 0; x < n; ++x) {
      if (x == a || x == b)
        continue;
      const bool near = std::binary_search(adj[a].begin(), adj[a].end(), x) ||
                        std::binary_search(adj[b].begin(), adj[b].end(), x);
      if (near)
        candidates.push_back(x);
    }
    if (candidates.empty())
      for (NodeId x = 0; x < n; ++x)
        if (x != a && x != b)
          candidates.push_back(x);
    if (candidates.empty())
      candidates = {a, b};
    const NodeId supporter = candidates[rng.below(candidates.size())];
    g.supports.push_back({supporter, a, b, rng.uniform(0.4, 0.6)});
  }

  const auto start = static_cast<NodeId>(rng.below(n));
  auto goal = static_cast<NodeId>(rng.below(n - 1));
  if (goal >= start)
    ++goal;
  g.starts.assign(options.num_agents, start);
  g.goals = {goal};
  return EnvGraph(std::move(g));
}

//==============================================================================
namespace {

using nlohmann::json;

json to_json(const GraphData& g)
{
  json edges = json::array();
  for (const Edge& e : g.edges)
    edges.push_back({{"u", e.u}, {"v", e.v}, {"cost", e.cost}});
  json supports = json::array();
  for (const SupportRecord& s : g.supports)
    supports.push_back(
      {{"supporter", s.supporter}, {"u", s.u}, {"v", s.v}, {"reduced_cost", s.reduced_cost}});
  json out = json::object();
  out["num_nodes"] = g.num_nodes;
  out["edges"] = std::move(edges);
  out["supports"] = std::move(supports);
  out["support_action_cost"] = g.support_action_cost;
  out["starts"] = g.starts;
  out["goals"] = g.goals;
  return out;
}

[[noreturn]] void parse_fail(const std::string& where, const std::string& what)
{
  throw GraphParseError(where + ": " + what);
}

void require_keys(const json& obj, const std::vector<std::string>& keys, const std::string& where)
{
  if (!obj.is_object())
    parse_fail(where, "expected an object");
  for (const auto& [key, value] : obj.items())
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      parse_fail(where, "unknown field \"" + key + "\"");
  for (const auto& key : keys)
    if (!obj.contains(key))
      parse_fail(where, "missing field \"" + key + "\"");
}

long long get_int(const json& value, const std::string& where)
{
  if (!value.is_number_integer())
    parse_fail(where, "expected an integer");
  return value.get<long long>();
}

NodeId get_node(const json& value, const std::string& where)
{
  const long long x = get_int(value, where);
  if (x < std::numeric_limits<NodeId>::min() || x > std::numeric_limits<NodeId>::max())
    parse_fail(where, "integer out of range");
  return static_cast<NodeId>(x);
}

double get_real(const json& value, const std::string& where)
{
  if (!value.is_number())
    parse_fail(where, "expected a number");
  return value.get<double>();
}

const json& get_array(const json& value, const std::string& where)
{
  if (!value.is_array())
    parse_fail(where, "expected an array");
  return value;
}

std::string line_context(std::string_view text, std::size_t byte)
{
  std::size_t line = 1, column = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

GraphData from_json(const json& root)
{
  require_keys(root, {"num_nodes", "edges", "supports", "support_action_cost", "starts", "goals"},
               "graph");
  GraphData g;
  const long long n = get_int(root["num_nodes"], "num_nodes");
  if (n > std::numeric_limits<int>::max())
    parse_fail("num_nodes", "integer out of range");
  g.num_nodes = static_cast<int>(n);

  std::set<std::pair<NodeId, NodeId>> pairs;
  const json& edges = get_array(root["edges"], "edges");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::string where = "edges[" + std::to_string(i) + "]";
    require_keys(edges[i], {"u", "v", "cost"}, where);
    Edge e{get_node(edges[i]["u"], where + ".u"), get_node(edges[i]["v"], where + ".v"),
           get_real(edges[i]["cost"], where + ".cost")};
    if (!pairs.insert(ordered(e.u, e.v)).second)
      parse_fail(where, "duplicate edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) + ")");
    g.edges.push_back(e);
  }

  const json& supports = get_array(root["supports"], "supports");
  for (std::size_t i = 0; i < supports.size(); ++i) {
    const std::string where = "supports[" + std::to_string(i) + "]";
    require_keys(supports[i], {"supporter", "u", "v", "reduced_cost"}, where);
    g.supports.push_back({get_node(supports[i]["supporter"], where + ".supporter"),
                          get_node(supports[i]["u"], where + ".u"),
                          get_node(supports[i]["v"], where + ".v"),
                          get_real(supports[i]["reduced_cost"], where + ".reduced_cost")});
  }

  g.support_action_cost = get_real(root["support_action_cost"], "support_action_cost");

  const json& starts = get_array(root["starts"], "starts");
  for (std::size_t i = 0; i < starts.size(); ++i)
    g.starts.push_back(get_node(starts[i], "starts[" + std::to_string(i) + "]"));
  const json& goals = get_array(root["goals"], "goals");
  for (std::size_t i = 0; i < goals.size(); ++i)
    g.goals.push_back(get_node(goals[i], "goals[" + std::to_string(i) + "]"));
  return g;
}

} // namespace

std::string to_json_string(const EnvGraph& graph)
{
  return to_json(graph.data()).dump(2) + "\n";
}

void save(const EnvGraph& graph, std::ostream& out)
{
  out << to_json_string(graph);
  if (!out)
    throw std::runtime_error("failed to write graph");
}

void save(const EnvGraph& graph, const std::filesystem::path& path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  save(graph, out);
}

EnvGraph load_from_string(std::string_view text)
{
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw GraphParseError("malformed JSON at " + line_context(text, e.byte) + ": " + e.what());
  }
  return EnvGraph(from_json(root));
}

EnvGraph load(std::istream& in)
{
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return load_from_string(buffer.str());
}

EnvGraph load(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open " + path.string());
  return load(in);
}

//==============================================================================
PathResult shortest_path(const EnvGraph& graph, NodeId src, NodeId dst)
{
  const int n = graph.num_nodes();
  if (src < 0 || src >= n || dst < 0 || dst >= n)
    throw std::out_of_range("shortest_path: node id out of range");

  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n, inf);
  std::vector<NodeId> parent(n, -1);
  using Entry = std::pair<double, NodeId>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  dist[src] = 0.0;
  queue.push({0.0, src});
  while (!queue.empty()) {
    const auto [d, x] = queue.top();
    queue.pop();
    if (d > dist[x])
      continue;
    if (x == dst)
      break;
    for (NodeId y : graph.neighbors(x)) {
      const double nd = d + graph.nominal_cost(graph.edge_index(x, y));
      if (nd < dist[y]) {
        dist[y] = nd;
        parent[y] = x;
        queue.push({nd, y});
      }
    }
  }

  PathResult result;
  result.cost = dist[dst];
  for (NodeId x = dst; x != -1; x = parent[x])
    result.path.push_back(x);
  std::reverse(result.path.begin(), result.path.end());
  return result;
}

} // namespace teamcoord
