#pragma once

#include "teamcoord/ppo.hpp"
#include "teamcoord/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace teamcoord::testing {

inline std::vector<std::uint8_t> random_mask(int n, Rng& rng)
{
  std::vector<std::uint8_t> m(n);
  for (auto& v : m)
    v = rng.uniform01() < 0.5 ? 1 : 0;
  m[rng.below(n)] = 1;
  return m;
}

/// A random batch on a small policy. `spread` sets how far stored
/// log-probabilities sit from the current ones, so ratios land on both
/// sides of the clip band.
inline TrajectoryBatch random_batch(const MlpPolicy<double>& policy, int steps, double spread, Rng& rng)
{
  const PolicyShape& s = policy.shape();
  TrajectoryBatch b;
  b.resize(steps, s.input, s.num_agents, s.slots());
  for (int t = 0; t < steps; ++t) {
    for (int i = 0; i < s.input; ++i)
      b.inputs(i, t) = rng.uniform(-1.0, 1.0);
    for (int k = 0; k < s.num_agents; ++k) {
      const auto m = random_mask(s.slots(), rng);
      std::copy(m.begin(), m.end(), b.masks.begin() + (t * s.num_agents + k) * s.slots());
      std::vector<int> valid;
      for (int i = 0; i < s.slots(); ++i)
        if (m[i])
          valid.push_back(i);
      b.actions[t * s.num_agents + k] = valid[rng.below(valid.size())];
    }
    b.advantages[t] = rng.uniform(-2.0, 2.0);
    b.returns[t] = rng.uniform(-3.0, 3.0);
  }
  // Stored log-probs relative to the current policy.
  std::vector<std::size_t> all(steps);
  std::iota(all.begin(), all.end(), std::size_t{0});
  for (int t = 0; t < steps; ++t) {
    TeamMask mask{s.num_nodes, {}};
    for (int k = 0; k < s.num_agents; ++k)
      mask.agents.emplace_back(b.masks.begin() + (t * s.num_agents + k) * s.slots(),
                               b.masks.begin() + (t * s.num_agents + k + 1) * s.slots());
    const PolicyOutput out = policy_forward(policy, b.inputs.col(t), mask);
    double lp = 0.0;
    for (int k = 0; k < s.num_agents; ++k)
      lp += std::log(out.probabilities[k][b.actions[t * s.num_agents + k]]);
    b.log_probs[t] = lp + rng.uniform(-spread, spread);
  }
  return b;
}

inline MlpPolicy<double> small_policy(Rng& rng, int nodes = 3, int agents = 2, int hidden = 6)
{
  MlpPolicy<double> p(policy_shape(nodes, agents, hidden));
  for (Eigen::Index i = 0; i < p.parameters().size(); ++i)
    p.parameters()[i] = rng.uniform(-0.5, 0.5);
  return p;
}

} // namespace teamcoord::testing
