#include "teamcoord/jsg.hpp"

#include "fixtures.hpp"
#include "teamcoord/baselines.hpp"
#include "teamcoord/rng.hpp"

#include <gtest/gtest.h>

using namespace teamcoord;
using teamcoord::testing::star_graph;
using teamcoord::testing::with_starts;
using teamcoord::testing::without_supports;

namespace {

/// Cost of walking the labelled arcs through the mdp cost rules.
double replay(const EnvGraph& g, const JsgSolution& sol)
{
  JointState s = start_state(g);
  double total = 0.0;
  for (const LabeledArc& arc : sol.arcs) {
    EXPECT_EQ(arc.from, s);
    total += step_cost(g, s, arc.label).total();
    s = transition(g, s, arc.label);
    EXPECT_EQ(arc.to, s);
  }
  EXPECT_TRUE(is_terminal(g, s));
  return total;
}

} // namespace

TEST(JsgBuild, StarHasNineVertices)
{
  const JointStateGraph jsg = build_jsg(star_graph(), 2);
  EXPECT_EQ(jsg.num_vertices(), 9u);
  EXPECT_EQ(jsg.source(), 0u);
  EXPECT_TRUE(jsg.is_sink(8));
  EXPECT_FALSE(jsg.is_sink(5));
}

TEST(JsgBuild, SupportedArcIsRetained)
{
  const JointStateGraph jsg = build_jsg(star_graph(), 2);
  const std::uint64_t from = 0 * 3 + 1; // [0, 1]
  const std::uint64_t to = 0 * 3 + 2;   // [0, 2]
  int found = 0;
  for (const JsgArc& arc : jsg.arcs_from(from))
    if (arc.to == to) {
      ++found;
      EXPECT_NEAR(arc.cost, 0.7, 1e-15);
      const JointAction label = jsg.label(from, arc);
      EXPECT_EQ(label.actions[0], AgentAction::support());
      EXPECT_EQ(label.actions[1], AgentAction::move_to(2));
    }
  EXPECT_EQ(found, 1);
}

TEST(JsgBuild, SingleAgentMirrorsTheGraph)
{
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const EnvGraph g = generate({6, Density::Moderate, 0.4, 1, seed});
    const JointStateGraph jsg = build_jsg(g, 1);
    ASSERT_EQ(jsg.num_vertices(), 6u);
    for (NodeId v = 0; v < 6; ++v) {
      // Neighbours plus the Stay self-loop.
      ASSERT_EQ(jsg.arcs_from(v).size(), g.neighbors(v).size() + 1);
      for (const JsgArc& arc : jsg.arcs_from(v)) {
        if (arc.to == static_cast<std::uint64_t>(v))
          ASSERT_EQ(arc.cost, 0.0);
        else
          ASSERT_EQ(arc.cost, g.nominal_cost(g.edge_index(v, static_cast<NodeId>(arc.to))));
      }
    }
  }
}

TEST(JsgBuild, DegreeBoundAndVertexCount)
{
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const EnvGraph g = generate({5, Density::Dense, 0.4, 2, seed});
    const JointStateGraph jsg = build_jsg(g, 2);
    ASSERT_EQ(jsg.num_vertices(), 25u);
    for (std::uint64_t v = 0; v < jsg.num_vertices(); ++v) {
      const JointState c = jsg.configuration(v);
      std::size_t bound = 1;
      for (NodeId p : c.positions)
        bound *= g.neighbors(p).size() + 2;
      ASSERT_LE(jsg.arcs_from(v).size(), bound);
    }
  }
}

TEST(JsgBuild, MemoryBudgetRefusal)
{
  const EnvGraph g = generate({12, Density::Dense, 0.3, 8, 1});
  try {
    build_jsg(g, 8);
    FAIL();
  } catch (const MemoryBudgetExceeded& e) {
    EXPECT_NE(std::string(e.what()).find("JSG construction infeasible"), std::string::npos);
  }
  JsgBuildOptions tiny;
  tiny.memory_budget_bytes = 16;
  EXPECT_THROW(build_jsg(star_graph(), 2, tiny), MemoryBudgetExceeded);
}

TEST(JsgBuild, AgentCountMustMatchStarts)
{
  EXPECT_THROW(build_jsg(star_graph(), 3), std::invalid_argument);
}

//==============================================================================
TEST(JsgSolve, StarSingleAgent)
{
  const EnvGraph g = star_graph({0});
  const JsgSolution sol = solve(build_jsg(g, 1));
  EXPECT_NEAR(sol.optimal_cost, 3.0, 1e-12);
  ASSERT_EQ(sol.arcs.size(), 2u);
  EXPECT_EQ(sol.arcs[0].to.positions[0], 1);
  EXPECT_EQ(sol.arcs[1].to.positions[0], 2);
}

TEST(JsgSolve, StarTwoAgents)
{
  const EnvGraph g = star_graph();
  const JsgSolution sol = solve(build_jsg(g, 2));
  EXPECT_NEAR(sol.optimal_cost, 4.7, 1e-12);
  EXPECT_NEAR(replay(g, sol), sol.optimal_cost, 1e-12);
  ASSERT_EQ(sol.arcs.size(), 4u);
  bool supported = false;
  for (const LabeledArc& arc : sol.arcs)
    for (const AgentAction& a : arc.label.actions)
      supported |= a.kind == AgentAction::Kind::Support;
  EXPECT_TRUE(supported);
}

TEST(JsgSolve, StartAtGoalCostsNothing)
{
  const EnvGraph g = star_graph({2, 2});
  const JsgSolution sol = solve(build_jsg(g, 2));
  EXPECT_EQ(sol.optimal_cost, 0.0);
  EXPECT_TRUE(sol.arcs.empty());
}

TEST(JsgSolve, Deterministic)
{
  const EnvGraph g = generate({5, Density::Moderate, 0.4, 2, 4});
  const JsgSolution a = solve(build_jsg(g, 2));
  const JsgSolution b = solve(build_jsg(g, 2));
  ASSERT_EQ(a.arcs.size(), b.arcs.size());
  EXPECT_EQ(a.optimal_cost, b.optimal_cost);
  for (std::size_t i = 0; i < a.arcs.size(); ++i) {
    EXPECT_EQ(a.arcs[i].to, b.arcs[i].to);
    EXPECT_EQ(a.arcs[i].label, b.arcs[i].label);
  }
}

TEST(JsgSolve, NeverWorseThanNaive)
{
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const EnvGraph g = generate({6, Density::Sparse, 0.4, 2, seed});
    const JsgSolution sol = solve(build_jsg(g, 2));
    ASSERT_LE(sol.optimal_cost, naive_solve(g).true_cost + 1e-12);
    ASSERT_NEAR(replay(g, sol), sol.optimal_cost, 1e-9);
  }
}

TEST(JsgSolve, RemovingSupportNeverHelps)
{
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const EnvGraph g = generate({5, Density::Moderate, 0.5, 2, seed});
    const double with = solve(build_jsg(g, 2)).optimal_cost;
    const double without = solve(build_jsg(without_supports(g), 2)).optimal_cost;
    ASSERT_LE(with, without + 1e-12);
  }
}

TEST(JsgSolve, TeamNoWorseThanIndependentShortestPaths)
{
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const EnvGraph g = generate({5, Density::Sparse, 0.4, 3, seed});
    const double single = shortest_path(g, g.starts()[0], g.goals()[0]).cost;
    ASSERT_LE(solve(build_jsg(g, 3)).optimal_cost, 3 * single + 1e-12);
  }
}

TEST(JsgSolve, DeadlineIsEnforced)
{
  JsgBuildOptions opts;
  opts.deadline = Deadline::after(0.0);
  EXPECT_THROW(build_jsg(generate({6, Density::Dense, 0.3, 2, 0}), 2, opts), TimeLimitExceeded);
}

//==============================================================================
TEST(BruteForce, StarValues)
{
  EXPECT_NEAR(brute_force_optimal(star_graph(), 2, 12), 4.7, 1e-12);
  EXPECT_NEAR(brute_force_optimal(star_graph({0}), 1, 12), 3.0, 1e-12);
  EXPECT_EQ(brute_force_optimal(star_graph({2}), 1, 12), 0.0);
}

TEST(BruteForce, RefusesOversizedSearch)
{
  BruteForceOptions opts;
  opts.max_memo_entries = 10;
  EXPECT_THROW(brute_force_optimal(star_graph(), 2, 12, opts), SearchBudgetExceeded);
}

TEST(BruteForce, AgreesWithJsgOnTwoAgents)
{
  int checked = 0;
  for (int n : {3, 4, 5})
    for (Density d : {Density::Sparse, Density::Moderate, Density::Dense})
      for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const EnvGraph g = generate({n, d, 0.4, 2, seed});
        const double jsg = solve(build_jsg(g, 2)).optimal_cost;
        const double oracle = brute_force_optimal(g, 2, horizon(g, 2));
        ASSERT_NEAR(jsg, oracle, 1e-9) << "n=" << n << " seed=" << seed;
        ++checked;
      }
  EXPECT_EQ(checked, 72);
}

TEST(BruteForce, AgreesWithJsgWithScatteredStarts)
{
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const EnvGraph base = generate({5, Density::Moderate, 0.5, 2, seed});
    Rng rng(seed + 100);
    const EnvGraph g = with_starts(base, {static_cast<NodeId>(rng.below(5)), static_cast<NodeId>(rng.below(5))});
    ASSERT_NEAR(solve(build_jsg(g, 2)).optimal_cost, brute_force_optimal(g, 2, horizon(g, 2)), 1e-9);
  }
}

TEST(BruteForce, AgreesWithJsgOnThreeAgents)
{
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const EnvGraph g = generate({4, Density::Moderate, 0.5, 3, seed});
    ASSERT_NEAR(solve(build_jsg(g, 3)).optimal_cost, brute_force_optimal(g, 3, horizon(g, 3)), 1e-9);
  }
}
