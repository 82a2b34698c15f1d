#include "teamcoord/mdp.hpp"

#include "fixtures.hpp"
#include "teamcoord/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

using namespace teamcoord;
using teamcoord::testing::star_graph;

namespace {

using A = AgentAction;

JointAction ja(std::initializer_list<AgentAction> a) { return JointAction{std::vector<AgentAction>(a)}; }
JointState js(std::initializer_list<NodeId> p) { return JointState{std::vector<NodeId>(p)}; }

/// Path 0-1-2 where node 0 supports edge (1, 2).
EnvGraph supported_path()
{
  GraphData d = teamcoord::testing::path_data();
  d.edges[1].cost = 2.0;
  d.supports = {{0, 1, 2, 0.5}};
  return EnvGraph(d);
}

std::vector<AgentAction> valid_actions(const EnvGraph& g, NodeId at)
{
  std::vector<AgentAction> out;
  const auto m = agent_mask(g, at);
  for (int s = 0; s <= g.num_nodes(); ++s)
    if (m[s])
      out.push_back(action_of_slot(s, at, g.num_nodes()));
  return out;
}

} // namespace

TEST(Slots, RoundTrip)
{
  EXPECT_EQ(support_slot(3), 3);
  EXPECT_EQ(slot_of(A::stay(), 1, 3), 1);
  EXPECT_EQ(slot_of(A::support(), 1, 3), 3);
  EXPECT_EQ(slot_of(A::move_to(2), 1, 3), 2);
  EXPECT_EQ(action_of_slot(1, 1, 3), A::stay());
  EXPECT_EQ(action_of_slot(0, 1, 3), A::move_to(0));
  EXPECT_EQ(action_of_slot(3, 1, 3), A::support());
}

TEST(Mask, NonSupporterInTheMiddle)
{
  const EnvGraph g = supported_path();
  const auto v = valid_actions(g, 1);
  EXPECT_EQ(v, (std::vector<AgentAction>{A::move_to(0), A::stay(), A::move_to(2)}));
}

TEST(Mask, SupporterNode)
{
  const EnvGraph g = supported_path();
  const auto v = valid_actions(g, 0);
  EXPECT_EQ(v, (std::vector<AgentAction>{A::stay(), A::move_to(1), A::support()}));
}

TEST(Mask, OneInvalidComponentInvalidatesTheTeam)
{
  const EnvGraph g = star_graph();
  const TeamMask m = mask(g, js({0, 0}));
  const std::vector<int> bad_first{2, 0};
  EXPECT_EQ(m.first_invalid(bad_first), 0);
  EXPECT_FALSE(m.allows(std::span<const int>(bad_first)));
  const std::vector<int> ok{1, 3};
  EXPECT_TRUE(m.allows(std::span<const int>(ok)));
  EXPECT_THROW(transition(g, js({0, 0}), ja({A::move_to(2), A::stay()})), InvalidAction);
}

TEST(Transition, Examples)
{
  const EnvGraph g = star_graph();
  EXPECT_EQ(transition(g, js({0, 0}), ja({A::move_to(1), A::stay()})), js({1, 0}));
  EXPECT_EQ(transition(g, js({0, 1}), ja({A::support(), A::move_to(2)})), js({0, 2}));

  const EnvGraph single = star_graph({1});
  const JointState back = transition(single, transition(single, js({1}), ja({A::move_to(0)})), ja({A::move_to(1)}));
  EXPECT_EQ(back, js({1}));
}

TEST(Transition, ErrorNamesTheAgent)
{
  const EnvGraph g = star_graph();
  try {
    transition(g, js({0, 1}), ja({A::stay(), A::support()}));
    FAIL();
  } catch (const InvalidAction& e) {
    EXPECT_EQ(e.agent(), 1);
    EXPECT_NE(std::string(e.what()).find("agent 1"), std::string::npos) << e.what();
  }
}

TEST(Transition, MaskSoundnessExhaustive)
{
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const EnvGraph g = generate({5, Density::Moderate, 0.4, 2, seed});
    const int n = g.num_nodes();
    for (NodeId a = 0; a < n; ++a)
      for (NodeId b = 0; b < n; ++b) {
        const JointState s = js({a, b});
        const TeamMask m = mask(g, s);
        for (int sa = 0; sa <= n; ++sa)
          for (int sb = 0; sb <= n; ++sb) {
            const JointAction act{{action_of_slot(sa, a, n), action_of_slot(sb, b, n)}};
            if (m.allows(0, sa) && m.allows(1, sb))
              ASSERT_NO_THROW(transition(g, s, act));
            else
              ASSERT_THROW(transition(g, s, act), InvalidAction);
          }
      }
  }
}

//==============================================================================
TEST(StepCost, SupportedCrossing)
{
  const EnvGraph g = star_graph();
  const StepCost c = step_cost(g, js({0, 1}), ja({A::support(), A::move_to(2)}));
  ASSERT_EQ(c.per_agent.size(), 2u);
  EXPECT_DOUBLE_EQ(c.per_agent[0], 0.2);
  EXPECT_DOUBLE_EQ(c.per_agent[1], 0.5);
  EXPECT_EQ(c.coordination, 1);
  EXPECT_EQ(c.unsupported_risky, 0);
  EXPECT_NEAR(c.total(), 0.7, 1e-15);
}

TEST(StepCost, UnsupportedCrossing)
{
  const EnvGraph g = star_graph();
  const StepCost c = step_cost(g, js({0, 1}), ja({A::stay(), A::move_to(2)}));
  EXPECT_EQ(c.per_agent, (std::vector<double>{0.0, 2.0}));
  EXPECT_EQ(c.coordination, 0);
  EXPECT_EQ(c.unsupported_risky, 1);
}

TEST(StepCost, AllStay)
{
  const EnvGraph g = star_graph();
  const StepCost c = step_cost(g, js({1, 2}), ja({A::stay(), A::stay()}));
  EXPECT_EQ(c.per_agent, (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(c.coordination, 0);
  EXPECT_EQ(c.unsupported_risky, 0);
}

TEST(StepCost, AgentCannotSupportItself)
{
  // A single agent at the supporter node can take Support but nobody moves.
  const EnvGraph g = star_graph({0});
  const StepCost c = step_cost(g, js({0}), ja({A::support()}));
  EXPECT_DOUBLE_EQ(c.per_agent[0], 0.2);
  EXPECT_EQ(c.coordination, 0);
}

TEST(StepCost, OneSupporterCoversSeveralTraversers)
{
  const EnvGraph g = star_graph({0, 1, 1});
  const StepCost c = step_cost(g, js({0, 1, 1}), ja({A::support(), A::move_to(2), A::move_to(2)}));
  EXPECT_EQ(c.per_agent, (std::vector<double>{0.2, 0.5, 0.5}));
  EXPECT_EQ(c.coordination, 2);
  EXPECT_EQ(c.unsupported_risky, 0);
}

TEST(StepCost, SupportsDoNotStack)
{
  const EnvGraph g = star_graph({0, 0, 1});
  const StepCost c = step_cost(g, js({0, 0, 1}), ja({A::support(), A::support(), A::move_to(2)}));
  EXPECT_EQ(c.per_agent, (std::vector<double>{0.2, 0.2, 0.5}));
  EXPECT_EQ(c.coordination, 1);
}

TEST(StepCost, SymmetricUnderAgentPermutation)
{
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const EnvGraph g = generate({5, Density::Dense, 0.5, 3, seed});
    Rng rng(seed);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<NodeId> pos(3);
      std::vector<AgentAction> act(3);
      for (int i = 0; i < 3; ++i) {
        pos[i] = static_cast<NodeId>(rng.below(5));
        const auto v = valid_actions(g, pos[i]);
        act[i] = v[rng.below(v.size())];
      }
      const StepCost base = step_cost(g, JointState{pos}, JointAction{act});
      std::vector<int> perm{0, 1, 2};
      while (std::next_permutation(perm.begin(), perm.end())) {
        std::vector<NodeId> pp(3);
        std::vector<AgentAction> pa(3);
        for (int i = 0; i < 3; ++i) {
          pp[i] = pos[perm[i]];
          pa[i] = act[perm[i]];
        }
        const StepCost c = step_cost(g, JointState{pp}, JointAction{pa});
        for (int i = 0; i < 3; ++i)
          ASSERT_DOUBLE_EQ(c.per_agent[i], base.per_agent[perm[i]]);
        ASSERT_EQ(c.coordination, base.coordination);
        ASSERT_EQ(c.unsupported_risky, base.unsupported_risky);
      }
    }
  }
}

TEST(StepCost, SupportNeverRaisesTraversalCost)
{
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const EnvGraph g = generate({6, Density::Moderate, 0.5, 2, seed});
    for (const Edge& e : g.data().edges)
      for (const SupportRecord& s : g.data().supports) {
        if (g.edge_index(s.u, s.v) != g.edge_index(e.u, e.v))
          continue;
        const StepCost with = step_cost(g, js({s.supporter, e.u}), ja({A::support(), A::move_to(e.v)}));
        const StepCost without = step_cost(g, js({s.supporter, e.u}), ja({A::stay(), A::move_to(e.v)}));
        ASSERT_LE(with.per_agent[1], without.per_agent[1]);
        ASSERT_DOUBLE_EQ(without.per_agent[1], e.cost);
      }
  }
}

TEST(StepCost, KernelAgreesWithStepCost)
{
  const EnvGraph g = star_graph();
  const std::vector<NodeId> pos{0, 1};
  const std::vector<int> slots{3, 2};
  EXPECT_NEAR(team_step_cost(g, pos, slots), 0.7, 1e-15);
}

//==============================================================================
TEST(Reward, UnsupportedNonTerminal)
{
  const EnvGraph g = star_graph();
  const double r = shaped_reward(g, js({0, 1}), ja({A::stay(), A::move_to(2)}), js({0, 2}), RewardConfig{});
  EXPECT_NEAR(r, -3.01, 1e-12);
}

TEST(Reward, TerminalDoubleCrossing)
{
  const EnvGraph g = star_graph();
  const double r = shaped_reward(g, js({1, 1}), ja({A::move_to(2), A::move_to(2)}), js({2, 2}), RewardConfig{});
  EXPECT_NEAR(r, 4.0, 1e-12);
}

TEST(Reward, AllStay)
{
  const EnvGraph g = star_graph();
  const double r = shaped_reward(g, js({0, 1}), ja({A::stay(), A::stay()}), js({0, 1}), RewardConfig{});
  EXPECT_NEAR(r, -0.01, 1e-15);
}

TEST(Reward, GammaChecked)
{
  RewardConfig c;
  c.gamma = 1.0;
  EXPECT_THROW(c.check(), std::invalid_argument);
  c.gamma = 0.0;
  EXPECT_THROW(c.check(), std::invalid_argument);
  c.gamma = 0.95;
  EXPECT_NO_THROW(c.check());
}

//==============================================================================
TEST(Encode, StarBlocks)
{
  const EnvGraph g = star_graph();
  const EncodedState e = encode(g, js({0, 1}));
  Eigen::VectorXd pos(6);
  pos << 1, 0, 0, 0, 1, 0;
  EXPECT_EQ(e.position_block, pos);
  ASSERT_EQ(e.adjacency_block.size(), 9);
  EXPECT_EQ(e.adjacency_block[1 * 3 + 2], 2.0);
  EXPECT_EQ(e.adjacency_block[0 * 3 + 2], kAbsentEdge);
  ASSERT_EQ(e.support_block.size(), 27);
  EXPECT_EQ(e.support_block[(0 * 3 + 1) * 3 + 2], 0.5);
  EXPECT_EQ(e.support_block[(1 * 3 + 1) * 3 + 2], 2.0);
  EXPECT_EQ(e.flatten().size(), 6 + 9 + 27);
  EXPECT_TRUE(e.flatten().allFinite());
}

TEST(Encode, StatesDifferOnlyInPositions)
{
  const EnvGraph g = generate({5, Density::Moderate, 0.4, 2, 3});
  const EncodedState a = encode(g, js({0, 1}));
  const EncodedState b = encode(g, js({4, 2}));
  EXPECT_NE(a.position_block, b.position_block);
  EXPECT_EQ(a.adjacency_block, b.adjacency_block);
  EXPECT_EQ(a.support_block, b.support_block);
}

//==============================================================================
TEST(Terminal, Examples)
{
  const EnvGraph g = star_graph();
  EXPECT_TRUE(is_terminal(g, js({2, 2})));
  EXPECT_FALSE(is_terminal(g, js({2, 1})));

  GraphData d = teamcoord::testing::star_data();
  d.goals = {1, 2};
  const EnvGraph two_goals(d);
  EXPECT_TRUE(is_terminal(two_goals, js({1, 2})));
}

TEST(Horizon, FourTimesNodesTimesAgents) { EXPECT_EQ(horizon(star_graph(), 2), 24); }

TEST(Indices, MixedRadixRoundTrip)
{
  const std::vector<NodeId> pos{2, 0, 1};
  EXPECT_EQ(state_index(pos, 3), 2u * 9 + 0 * 3 + 1);
  std::vector<NodeId> back(3);
  decode_state_index(state_index(pos, 3), 3, back);
  EXPECT_EQ(back, pos);

  const std::vector<int> slots{3, 1};
  EXPECT_EQ(joint_action_index(slots, 3), 3u * 4 + 1);
  std::vector<int> sb(2);
  decode_joint_action_index(13, 3, sb);
  EXPECT_EQ(sb, slots);
}

TEST(Indices, CheckedPower)
{
  EXPECT_EQ(checked_power(3, 2), 9u);
  EXPECT_EQ(checked_power(10, 0), 1u);
  EXPECT_FALSE(checked_power(1u << 20, 4).has_value());
}

TEST(ValidJointActions, CanonicalOrder)
{
  const EnvGraph g = star_graph();
  const std::vector<NodeId> pos{0, 1};
  const ValidJointActions v(g, pos);
  // agent 0 at node 0: {0 stay, 1, 3 support}; agent 1 at node 1: {0, 1 stay, 2}
  ASSERT_EQ(v.size(), 9u);
  EXPECT_EQ(v.per_agent()[0], (std::vector<int>{0, 1, 3}));
  EXPECT_EQ(v.per_agent()[1], (std::vector<int>{0, 1, 2}));
  std::vector<int> s(2);
  v.slots(7, s);
  EXPECT_EQ(s, (std::vector<int>{3, 1}));
  std::uint64_t last = 0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const std::uint64_t idx = v.joint_index(k);
    if (k > 0)
      EXPECT_GT(idx, last);
    last = idx;
    EXPECT_EQ(v.find(idx), k);
  }
  EXPECT_FALSE(v.find(joint_action_index(std::vector<int>{2, 0}, 3)).has_value());
}

TEST(TeamEnv, EpisodeOnStar)
{
  auto g = std::make_shared<const EnvGraph>(star_graph());
  TeamEnv env(g, RewardConfig{});
  env.reset();
  EXPECT_EQ(env.horizon(), 24);
  StepOutcome o = env.step(std::vector<int>{0, 1});
  EXPECT_NEAR(o.team_cost, 1.0, 1e-15);
  o = env.step(std::vector<int>{3, 2});
  EXPECT_NEAR(o.team_cost, 0.7, 1e-15);
  EXPECT_FALSE(o.terminal);
  o = env.step(std::vector<int>{1, 2});
  o = env.step(std::vector<int>{2, 2});
  EXPECT_TRUE(o.terminal);
  EXPECT_TRUE(env.done());
  EXPECT_NEAR(o.reward, 10.0 - 2.0 - 1.0, 1e-12);
}

TEST(TeamEnv, TruncatesAtHorizon)
{
  auto g = std::make_shared<const EnvGraph>(star_graph({0}));
  TeamEnv env(g, RewardConfig{});
  env.reset();
  StepOutcome o;
  for (int i = 0; i < env.horizon(); ++i)
    o = env.step(std::vector<int>{0});
  EXPECT_TRUE(o.truncated);
  EXPECT_FALSE(o.terminal);
  EXPECT_TRUE(env.done());
}

TEST(TeamEnv, RejectsInvalidSlots)
{
  auto g = std::make_shared<const EnvGraph>(star_graph());
  TeamEnv env(g, RewardConfig{});
  env.reset();
  EXPECT_THROW(env.step(std::vector<int>{2, 0}), InvalidAction);
  EXPECT_EQ(env.steps_taken(), 0);
}
