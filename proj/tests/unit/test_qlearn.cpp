#include "teamcoord/qlearn.hpp"

#include "fixtures.hpp"
#include "teamcoord/jsg.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace teamcoord;
using teamcoord::testing::star_graph;

namespace {

std::uint64_t idx(const EnvGraph& g, std::vector<NodeId> pos) { return state_index(pos, g.num_nodes()); }

} // namespace

TEST(Epsilon, LinearDecayThenFlat)
{
  const EpsilonSchedule e;
  EXPECT_DOUBLE_EQ(e.at(0, 100), 1.0);
  EXPECT_NEAR(e.at(25, 100), 0.525, 1e-12);
  EXPECT_DOUBLE_EQ(e.at(50, 100), 0.05);
  EXPECT_DOUBLE_EQ(e.at(99, 100), 0.05);
}

TEST(SelectAction, MaskedArgmax)
{
  // Agent at node 0 of the star: valid slots {0 stay, 1, 3 support}.
  const EnvGraph g = star_graph({0});
  QTable q(3, 1);
  const std::vector<NodeId> pos{0};
  const ValidJointActions actions(g, pos);
  auto& row = q.row(idx(g, {0}), actions.size());
  row = {3.0, 1.0, 2.0};
  Rng rng(1);
  EXPECT_EQ(select_action(q, idx(g, {0}), actions, 0.0, rng), 0u);
  row = {3.0, 5.0, 2.0};
  EXPECT_EQ(select_action(q, idx(g, {0}), actions, 0.0, rng), 1u);
}

TEST(SelectAction, TiesGoToTheLowestIndex)
{
  const EnvGraph g = star_graph();
  QTable q(3, 2);
  Rng rng(2);
  const JointAction a = select_action(q, g, start_state(g), 0.0, rng);
  EXPECT_EQ(a.actions[0], AgentAction::stay());
  EXPECT_EQ(a.actions[1], AgentAction::stay());
}

TEST(SelectAction, FullExplorationRespectsTheMask)
{
  const EnvGraph g = generate({6, Density::Moderate, 0.4, 2, 3});
  QTable q(6, 2);
  Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const JointState s{{static_cast<NodeId>(rng.below(6)), static_cast<NodeId>(rng.below(6))}};
    const JointAction a = select_action(q, g, s, 1.0, rng);
    ASSERT_NO_THROW(transition(g, s, a));
  }
}

TEST(Update, Arithmetic)
{
  const EnvGraph g = star_graph({0});
  const std::vector<NodeId> pos{0}, next{1};
  const ValidJointActions actions(g, pos);
  const ValidJointActions next_actions(g, next);
  QConfig cfg;
  const auto s = idx(g, {0});
  const auto s2 = idx(g, {1});

  QTable q(3, 1);
  EXPECT_NEAR(update(q, s, actions, 1, 1.0, s2, false, cfg), 0.1, 1e-15);

  QTable q2(3, 1);
  q2.row(s, actions.size())[1] = 0.1;
  q2.row(s2, next_actions.size()) = {0.1, 0.0, 0.0};
  EXPECT_NEAR(update(q2, s, actions, 1, 1.0, s2, false, cfg), 0.1995, 1e-15);

  QTable q3(3, 1);
  q3.row(s2, next_actions.size()) = {100.0, 100.0, 100.0};
  cfg.learning_rate = 1.0;
  EXPECT_NEAR(update(q3, s, actions, 1, 10.0, s2, true, cfg), 10.0, 1e-15);
}

TEST(QTable, StoresOnlyValidPairs)
{
  const EnvGraph g = star_graph();
  QConfig cfg;
  cfg.max_episodes = 200;
  const QTrainResult r = train(g, cfg);
  for (const auto& [state, row] : r.table.rows()) {
    std::vector<NodeId> pos(2);
    decode_state_index(state, 3, pos);
    ASSERT_EQ(row.size(), ValidJointActions(g, pos).size());
  }
}

TEST(Train, ZeroEpisodes)
{
  QConfig cfg;
  cfg.max_episodes = 0;
  const QTrainResult r = train(star_graph(), cfg);
  EXPECT_TRUE(r.episode_returns.empty());
  EXPECT_FALSE(r.converged_at.has_value());
  EXPECT_EQ(r.table.num_entries(), 0u);
}

TEST(Train, Reproducible)
{
  QConfig cfg;
  cfg.max_episodes = 500;
  cfg.seed = 9;
  const EnvGraph g = generate({5, Density::Sparse, 0.4, 2, 2});
  const QTrainResult a = train(g, cfg);
  const QTrainResult b = train(g, cfg);
  EXPECT_EQ(a.table, b.table);
  EXPECT_EQ(a.episode_returns, b.episode_returns);
}

TEST(Train, StarConvergesToTheOptimum)
{
  const EnvGraph g = star_graph();
  const QTrainResult r = train(g, QConfig{});
  EXPECT_TRUE(r.converged_at.has_value());
  const Rollout roll = greedy_rollout(r.table, g);
  EXPECT_TRUE(roll.reached_goal);
  EXPECT_NEAR(roll.true_cost, 4.7, 1e-9);
  EXPECT_NEAR(roll.true_cost, brute_force_optimal(g, 2, horizon(g, 2)), 1e-9);
}

TEST(Train, SingleAgentPathMatchesDijkstra)
{
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const EnvGraph g = generate({6, Density::Moderate, 0.3, 1, seed});
    QConfig cfg;
    cfg.seed = seed;
    const Rollout roll = greedy_rollout(train(g, cfg).table, g);
    ASSERT_TRUE(roll.reached_goal);
    ASSERT_NEAR(roll.true_cost, shortest_path(g, g.starts()[0], g.goals()[0]).cost, 1e-9);
  }
}

TEST(Train, RefusesIntractableTables)
{
  const EnvGraph g = generate({20, Density::Dense, 0.3, 6, 1});
  try {
    train(g, QConfig{});
    FAIL();
  } catch (const QTableIntractable& e) {
    EXPECT_NE(std::string(e.what()).find("Q-table intractable"), std::string::npos);
  }
}

TEST(Convergence, Window)
{
  std::vector<double> r(499, 1.0);
  EXPECT_FALSE(returns_converged(r, 500, 0.2));
  r.push_back(1.2);
  EXPECT_TRUE(returns_converged(r, 500, 0.2));
  r.push_back(0.99);
  EXPECT_FALSE(returns_converged(r, 500, 0.2));
}

TEST(Rollout, UntrainedTableStaysFinite)
{
  const EnvGraph g = star_graph();
  const Rollout roll = greedy_rollout(QTable(3, 2), g);
  EXPECT_FALSE(roll.reached_goal);
  EXPECT_EQ(roll.true_cost, 0.0);
  EXPECT_EQ(static_cast<int>(roll.actions.size()), horizon(g, 2));
}

TEST(Rollout, Deterministic)
{
  const EnvGraph g = star_graph();
  QConfig cfg;
  cfg.max_episodes = 300;
  const QTable t = train(g, cfg).table;
  const Rollout a = greedy_rollout(t, g);
  const Rollout b = greedy_rollout(t, g);
  EXPECT_EQ(a.trajectory, b.trajectory);
  EXPECT_EQ(a.true_cost, b.true_cost);
}

TEST(Dump, RoundTripSortedEntries)
{
  const EnvGraph g = star_graph();
  QConfig cfg;
  cfg.max_episodes = 100;
  const QTable t = train(g, cfg).table;
  std::stringstream buf;
  dump_qtable(t, g, buf);
  const std::string bytes = buf.str();
  ASSERT_GE(bytes.size(), 12u);
  EXPECT_EQ(bytes.substr(0, 4), "QTB1");
  EXPECT_EQ(bytes.size(), 12u + 24u * t.num_entries());

  const auto entries = read_qtable_dump(buf);
  ASSERT_EQ(entries.size(), t.num_entries());
  for (std::size_t i = 1; i < entries.size(); ++i)
    ASSERT_TRUE(std::tie(entries[i - 1].state, entries[i - 1].action) <
                std::tie(entries[i].state, entries[i].action));
  for (const QTableEntry& e : entries) {
    std::vector<NodeId> pos(2);
    decode_state_index(e.state, 3, pos);
    const ValidJointActions actions(g, pos);
    const auto k = actions.find(e.action);
    ASSERT_TRUE(k.has_value());
    ASSERT_EQ(t.value(e.state, *k), e.value);
  }
}

TEST(Dump, RejectsBadMagic)
{
  std::stringstream buf("XXXX\0\0\0\0\0\0\0\0");
  EXPECT_THROW(read_qtable_dump(buf), std::runtime_error);
}
