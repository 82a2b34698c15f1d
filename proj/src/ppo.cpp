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

#include "teamcoord/ppo.hpp"

#include "binary_io.hpp"
#include "teamcoord/qlearn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>

namespace teamcoord {

std::size_t PolicyShape::num_parameters() const
{
  const auto h1 = static_cast<std::size_t>(hidden1);
  const auto h2 = static_cast<std::size_t>(hidden2);
  const auto out = static_cast<std::size_t>(heads());
  return h1 * static_cast<std::size_t>(input) + h1 + h2 * h1 + h2 + out * h2 + out + h2 + 1;
}

int policy_input_size(int num_nodes, int num_agents)
{
  const int v = num_nodes;
  return v * num_agents + v * v + v * v * v + v;
}

PolicyShape policy_shape(int num_nodes, int num_agents, int hidden)
{
  if (num_nodes < 1 || num_agents < 1 || hidden < 1)
    throw std::invalid_argument("policy shape needs positive sizes");
  return {num_nodes, num_agents, policy_input_size(num_nodes, num_agents), hidden, hidden};
}

namespace {

template <typename Map>
void orthogonal(Map w, double gain, Rng& rng)
{
  const Eigen::Index rows = w.rows(), cols = w.cols();
  const Eigen::Index big = std::max(rows, cols), small = std::min(rows, cols);
  Eigen::MatrixXd a(big, small);
  for (Eigen::Index j = 0; j < small; ++j)
    for (Eigen::Index i = 0; i < big; ++i)
      a(i, j) = rng.normal();
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
  // Sign fix so the result is uniform over orthogonal matrices.
  for (Eigen::Index k = 0; k < small; ++k)
    if (qr.matrixQR()(k, k) < 0.0)
      q.col(k) *= -1.0;
  if (rows >= cols)
    w = gain * q;
  else
    w = gain * q.transpose();
}

} // namespace

MlpPolicy<double> init_policy(const PolicyShape& shape, Rng& rng)
{
  MlpPolicy<double> p(shape);
  orthogonal(p.w1(), std::sqrt(2.0), rng);
  orthogonal(p.w2(), std::sqrt(2.0), rng);
  orthogonal(p.wa(), 0.01, rng);
  orthogonal(p.wv(), 1.0, rng);
  return p;
}

//==============================================================================
Eigen::VectorXd graph_input(const EnvGraph& graph)
{
  const int v = graph.num_nodes();
  const GraphFeatures f = graph_features(graph);
  Eigen::VectorXd out(v * v + v * v * v + v);
  out << f.adjacency_block / kAbsentEdge, f.support_block / kAbsentEdge, Eigen::VectorXd::Zero(v);
  for (NodeId g : graph.goals())
    out[v * v + v * v * v + g] = 1.0;
  return out;
}

void write_policy_input(const Eigen::VectorXd& graph_part,
                        std::span<const NodeId> positions,
                        int num_nodes,
                        Eigen::Ref<Eigen::VectorXd> out)
{
  const Eigen::Index pos = Eigen::Index(num_nodes) * static_cast<Eigen::Index>(positions.size());
  out.head(pos).setZero();
  for (std::size_t a = 0; a < positions.size(); ++a)
    out[Eigen::Index(a) * num_nodes + positions[a]] = 1.0;
  out.tail(graph_part.size()) = graph_part;
}

Eigen::VectorXd policy_input(const EnvGraph& graph, std::span<const NodeId> positions)
{
  Eigen::VectorXd out(policy_input_size(graph.num_nodes(), static_cast<int>(positions.size())));
  write_policy_input(graph_input(graph), positions, graph.num_nodes(), out);
  return out;
}

template <typename Scalar>
void masked_softmax(std::span<const Scalar> logits, std::span<const std::uint8_t> mask, std::span<Scalar> probs)
{
  Scalar top = -std::numeric_limits<Scalar>::infinity();
  for (std::size_t i = 0; i < logits.size(); ++i)
    if (mask[i])
      top = std::max(top, logits[i]);
  if (!std::isfinite(top))
    throw std::invalid_argument("masked_softmax needs at least one valid finite entry");
  Scalar sum = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = mask[i] ? std::exp(logits[i] - top) : Scalar(0);
    sum += probs[i];
  }
  for (Scalar& p : probs)
    p /= sum;
}

template void masked_softmax<float>(std::span<const float>, std::span<const std::uint8_t>, std::span<float>);
template void masked_softmax<double>(std::span<const double>, std::span<const std::uint8_t>, std::span<double>);

namespace {

struct Activations
{
  Eigen::MatrixXd h1;
  Eigen::MatrixXd h2;
  Eigen::MatrixXd logits;
  Eigen::RowVectorXd values;
};

void forward_batch(const MlpPolicy<double>& p, const Eigen::MatrixXd& x, Activations& a)
{
  a.h1.noalias() = p.w1() * x;
  a.h1.colwise() += p.b1();
  a.h1 = a.h1.array().tanh().matrix();
  a.h2.noalias() = p.w2() * a.h1;
  a.h2.colwise() += p.b2();
  a.h2 = a.h2.array().tanh().matrix();
  a.logits.noalias() = p.wa() * a.h2;
  a.logits.colwise() += p.ba();
  a.values.noalias() = p.wv() * a.h2;
  a.values.array() += p.bv();
}

/// log-sum-exp over the valid entries of one head.
double masked_lse(const double* z, const std::uint8_t* mask, int n)
{
  double top = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i)
    if (mask[i])
      top = std::max(top, z[i]);
  double sum = 0.0;
  for (int i = 0; i < n; ++i)
    if (mask[i])
      sum += std::exp(z[i] - top);
  return top + std::log(sum);
}

} // namespace

PolicyOutput policy_forward(const MlpPolicy<double>& policy, const Eigen::VectorXd& input, const TeamMask& mask)
{
  const PolicyShape& s = policy.shape();
  if (input.size() != s.input || static_cast<int>(mask.agents.size()) != s.num_agents || mask.num_nodes != s.num_nodes)
    throw std::invalid_argument("policy_forward: input or mask does not match the policy shape");
  Activations a;
  forward_batch(policy, input, a);
  PolicyOutput out;
  out.value = a.values[0];
  for (int k = 0; k < s.num_agents; ++k) {
    Eigen::VectorXd p(s.slots());
    masked_softmax<double>({a.logits.data() + k * s.slots(), std::size_t(s.slots())}, mask.agents[k],
                           {p.data(), std::size_t(s.slots())});
    out.probabilities.push_back(std::move(p));
  }
  return out;
}

//==============================================================================
void PpoConfig::check() const
{
  reward.check();
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0))
    throw std::invalid_argument("clip_epsilon must lie in (0, 1)");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0))
    throw std::invalid_argument("gae_lambda must lie in [0, 1]");
  if (!(learning_rate > 0.0) || !(max_grad_norm > 0.0))
    throw std::invalid_argument("learning_rate and max_grad_norm must be positive");
  if (rollout_length < 1 || epochs_per_update < 1 || minibatch_size < 1 || hidden < 1)
    throw std::invalid_argument("rollout_length, epochs_per_update, minibatch_size and hidden must be positive");
  if (total_env_steps < 0)
    throw std::invalid_argument("total_env_steps must be nonnegative");
  if (convergence_window < 1 || divergence_patience < 1)
    throw std::invalid_argument("convergence_window and divergence_patience must be positive");
}

void TrajectoryBatch::resize(std::size_t steps, int input_size, int agents, int slots)
{
  num_agents = agents;
  num_slots = slots;
  inputs.resize(input_size, static_cast<Eigen::Index>(steps));
  masks.assign(steps * agents * slots, 0);
  actions.assign(steps * agents, 0);
  log_probs.assign(steps, 0.0);
  rewards.assign(steps, 0.0);
  values.assign(steps, 0.0);
  bootstrap.assign(steps, 0.0);
  ends.assign(steps, 0);
  advantages.assign(steps, 0.0);
  returns.assign(steps, 0.0);
}

void compute_advantages(TrajectoryBatch& batch, double gamma, double lambda, bool normalize)
{
  const std::size_t n = batch.size();
  batch.advantages.assign(n, 0.0);
  batch.returns.assign(n, 0.0);
  double running = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double delta = batch.rewards[i] + gamma * batch.bootstrap[i] - batch.values[i];
    const bool continues = !batch.ends[i] && i + 1 < n;
    running = delta + (continues ? gamma * lambda * running : 0.0);
    batch.advantages[i] = running;
    batch.returns[i] = running + batch.values[i];
  }
  if (!normalize || n == 0)
    return;
  const double mean = std::accumulate(batch.advantages.begin(), batch.advantages.end(), 0.0) / double(n);
  double var = 0.0;
  for (double a : batch.advantages)
    var += (a - mean) * (a - mean);
  const double sd = std::sqrt(var / double(n));
  for (double& a : batch.advantages)
    a = (a - mean) / (sd + 1e-8);
}

LossTerms ppo_loss(const MlpPolicy<double>& policy,
                   const TrajectoryBatch& batch,
                   std::span<const std::size_t> steps,
                   const PpoConfig& config,
                   Eigen::VectorXd* gradient)
{
  const PolicyShape& s = policy.shape();
  const int slots = s.slots();
  const auto count = static_cast<Eigen::Index>(steps.size());
  if (count == 0)
    throw std::invalid_argument("ppo_loss needs at least one step");
  if (batch.num_agents != s.num_agents || batch.num_slots != slots || batch.inputs.rows() != s.input)
    throw std::invalid_argument("ppo_loss: batch does not match the policy shape");

  Eigen::MatrixXd x(s.input, count);
  for (Eigen::Index b = 0; b < count; ++b)
    x.col(b) = batch.inputs.col(static_cast<Eigen::Index>(steps[b]));
  Activations act;
  forward_batch(policy, x, act);

  const double inv = 1.0 / static_cast<double>(count);
  const double eps = config.clip_epsilon;
  Eigen::MatrixXd dz = Eigen::MatrixXd::Zero(s.heads(), count);
  Eigen::RowVectorXd dv(count);
  std::vector<double> logp(slots), prob(slots);

  LossTerms terms;
  int clipped = 0;
  for (Eigen::Index b = 0; b < count; ++b) {
    const std::size_t step = steps[b];
    double joint = 0.0;
    double entropy = 0.0;
    for (int k = 0; k < s.num_agents; ++k) {
      const double* z = act.logits.col(b).data() + k * slots;
      const std::uint8_t* m = batch.masks.data() + (step * s.num_agents + k) * slots;
      const double lse = masked_lse(z, m, slots);
      double h = 0.0;
      for (int i = 0; i < slots; ++i) {
        if (m[i]) {
          logp[i] = z[i] - lse;
          prob[i] = std::exp(logp[i]);
          h -= prob[i] * logp[i];
        } else {
          logp[i] = 0.0;
          prob[i] = 0.0;
        }
      }
      joint += logp[batch.actions[step * s.num_agents + k]];
      entropy += h;
      // Entropy part of dL/dz: -c_e * dH/dz with dH/dz_i = -p_i (log p_i + H).
      for (int i = 0; i < slots; ++i)
        if (m[i])
          dz(k * slots + i, b) = config.entropy_coef * inv * prob[i] * (logp[i] + h);
    }

    const double ratio = std::exp(joint - batch.log_probs[step]);
    const double adv = batch.advantages[step];
    const double unclipped = ratio * adv;
    const double clipped_term = std::clamp(ratio, 1.0 - eps, 1.0 + eps) * adv;
    const bool left = unclipped <= clipped_term;
    terms.policy -= std::min(unclipped, clipped_term);
    if (std::abs(ratio - 1.0) > eps)
      ++clipped;
    terms.entropy += entropy;

    // Policy part: d(-surrogate)/d(log pi) = -A r on the unclipped branch,
    // zero on the (constant) clipped one.
    const double dlogp = left ? -adv * ratio * inv : 0.0;
    if (dlogp != 0.0) {
      for (int k = 0; k < s.num_agents; ++k) {
        const double* z = act.logits.col(b).data() + k * slots;
        const std::uint8_t* m = batch.masks.data() + (step * s.num_agents + k) * slots;
        const double lse = masked_lse(z, m, slots);
        const int chosen = batch.actions[step * s.num_agents + k];
        for (int i = 0; i < slots; ++i)
          if (m[i])
            dz(k * slots + i, b) += dlogp * ((i == chosen ? 1.0 : 0.0) - std::exp(z[i] - lse));
      }
    }

    const double err = act.values[b] - batch.returns[step];
    terms.value += err * err;
    dv[b] = config.value_coef * 2.0 * err * inv;
  }
  terms.policy *= inv;
  terms.value *= inv;
  terms.entropy *= inv;
  terms.clip_fraction = clipped * inv;
  terms.total = terms.policy + config.value_coef * terms.value - config.entropy_coef * terms.entropy;

  if (gradient == nullptr)
    return terms;

  MlpPolicy<double> g(s);
  g.wa().noalias() = dz * act.h2.transpose();
  g.ba() = dz.rowwise().sum();
  g.wv().noalias() = dv * act.h2.transpose();
  g.bv() = dv.sum();

  Eigen::MatrixXd d2 = policy.wa().transpose() * dz;
  d2.noalias() += policy.wv().transpose() * dv;
  d2.array() *= 1.0 - act.h2.array().square();
  g.w2().noalias() = d2 * act.h1.transpose();
  g.b2() = d2.rowwise().sum();

  Eigen::MatrixXd d1 = policy.w2().transpose() * d2;
  d1.array() *= 1.0 - act.h1.array().square();
  g.w1().noalias() = d1 * x.transpose();
  g.b1() = d1.rowwise().sum();

  *gradient = std::move(g.parameters());
  return terms;
}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, const PpoConfig& config)
{
  if (m.size() != params.size()) {
    m = Eigen::VectorXd::Zero(params.size());
    v = Eigen::VectorXd::Zero(params.size());
    t = 0;
  }
  ++t;
  const double b1 = config.adam_beta1, b2 = config.adam_beta2;
  m = b1 * m + (1.0 - b1) * grad;
  v = b2 * v + (1.0 - b2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
  params.array() -=
    config.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + config.adam_epsilon);
}

double clip_gradient_norm(Eigen::VectorXd& grad, double max_norm)
{
  const double norm = grad.norm();
  if (norm > max_norm)
    grad *= max_norm / norm;
  return norm;
}

//==============================================================================
EnvGraph GraphSampler::sample(std::uint64_t k) const
{
  if (densities.empty())
    throw std::invalid_argument("GraphSampler needs at least one density class");
  const Density d = densities[k % densities.size()];
  return generate({num_nodes, d, risky_fraction, num_agents, mix_seed({seed, k})});
}

namespace {

/// Everything about the current graph that stays fixed for an episode.
struct EpisodeGraph
{
  EnvGraph graph;
  Eigen::VectorXd graph_part;
  std::vector<std::vector<std::uint8_t>> node_masks;
  int horizon = 0;

  explicit EpisodeGraph(EnvGraph g)
    : graph(std::move(g)), graph_part(graph_input(graph)), horizon(teamcoord::horizon(graph, graph.num_agents()))
  {
    for (NodeId v = 0; v < graph.num_nodes(); ++v)
      node_masks.push_back(agent_mask(graph, v));
  }
};

int sample_slot(const double* probs, int n, Rng& rng)
{
  const double u = rng.uniform01();
  double acc = 0.0;
  int last = -1;
  for (int i = 0; i < n; ++i) {
    if (probs[i] <= 0.0)
      continue;
    acc += probs[i];
    last = i;
    if (u < acc)
      return i;
  }
  return last;
}

PpoTrainResult run_training(const std::function<EnvGraph(std::uint64_t)>& next_graph,
                            int num_nodes,
                            int num_agents,
                            const PpoConfig& config)
{
  config.check();
  const PolicyShape shape = policy_shape(num_nodes, num_agents, config.hidden);
  Rng init_rng(mix_seed({config.seed, 1}));
  Rng rng(mix_seed({config.seed, 2}));
  PpoTrainResult result{init_policy(shape, init_rng), {}, {}, std::nullopt, 0};
  MlpPolicy<double>& policy = result.policy;
  if (config.total_env_steps == 0)
    return result;

  const int slots = shape.slots();
  const double gamma = config.reward.gamma;
  std::uint64_t episode_index = 0;
  auto load_graph = [&]() {
    EnvGraph g = next_graph(episode_index++);
    if (g.num_nodes() != num_nodes || g.num_agents() != num_agents)
      throw std::invalid_argument("training graph does not match the policy shape");
    return EpisodeGraph(std::move(g));
  };

  EpisodeGraph env = load_graph();
  std::vector<NodeId> positions = env.graph.starts();
  std::vector<NodeId> next(num_agents);
  std::vector<int> chosen(num_agents);
  std::vector<double> per_agent(num_agents);
  std::vector<double> probs(slots);
  int episode_steps = 0;
  double episode_return = 0.0;

  TrajectoryBatch batch;
  Adam adam;
  Activations act;
  Eigen::VectorXd x(shape.input);
  Eigen::VectorXd grad;
  std::vector<std::size_t> order;

  DivergenceGuard guard(config.divergence_patience, config.divergence_fraction);

  // Starting on a terminal configuration: nothing to learn from it.
  auto skip_terminal_starts = [&]() {
    for (int tries = 0; is_terminal(env.graph, std::span<const NodeId>(positions)); ++tries) {
      if (tries > 1000)
        throw std::invalid_argument("every training graph starts at a goal");
      env = load_graph();
      positions = env.graph.starts();
    }
  };
  skip_terminal_starts();

  while (result.env_steps < config.total_env_steps) {
    config.deadline.check("PPO");
    const auto length = static_cast<std::size_t>(
      std::min<std::int64_t>(config.rollout_length, config.total_env_steps - result.env_steps));
    batch.resize(length, shape.input, num_agents, slots);
    double finished_sum = 0.0;
    int finished = 0;
    bool converged = false;

    for (std::size_t t = 0; t < length; ++t) {
      write_policy_input(env.graph_part, positions, num_nodes, x);
      batch.inputs.col(static_cast<Eigen::Index>(t)) = x;
      forward_batch(policy, x, act);
      batch.values[t] = act.values[0];

      double joint = 0.0;
      for (int k = 0; k < num_agents; ++k) {
        const auto& m = env.node_masks[positions[k]];
        std::copy(m.begin(), m.end(), batch.masks.begin() + (t * num_agents + k) * slots);
        masked_softmax<double>({act.logits.data() + k * slots, std::size_t(slots)}, m, probs);
        chosen[k] = sample_slot(probs.data(), slots, rng);
        batch.actions[t * num_agents + k] = chosen[k];
        joint += std::log(probs[chosen[k]]);
      }
      batch.log_probs[t] = joint;

      int cc = 0, rc = 0;
      const double cost = evaluate_step(env.graph, positions, chosen, per_agent, cc, rc);
      for (int k = 0; k < num_agents; ++k)
        next[k] = chosen[k] == num_nodes ? positions[k] : chosen[k];
      const bool terminal = is_terminal(env.graph, std::span<const NodeId>(next));
      const double reward = combine_reward(config.reward, terminal, cost, cc, rc);
      batch.rewards[t] = reward;
      episode_return += reward;
      ++episode_steps;
      ++result.env_steps;
      positions.swap(next);

      const bool truncated = !terminal && episode_steps >= env.horizon;
      if (terminal) {
        batch.bootstrap[t] = 0.0;
      } else if (truncated || t + 1 == length) {
        write_policy_input(env.graph_part, positions, num_nodes, x);
        forward_batch(policy, x, act);
        batch.bootstrap[t] = act.values[0];
      }
      if (terminal || truncated) {
        batch.ends[t] = 1;
        result.episode_returns.push_back(episode_return);
        finished_sum += episode_return;
        ++finished;
        if (returns_converged(result.episode_returns, config.convergence_window, config.convergence_band)) {
          result.converged_at = static_cast<int>(result.episode_returns.size()) - 1;
          converged = true;
        }
        episode_return = 0.0;
        episode_steps = 0;
        env = load_graph();
        positions = env.graph.starts();
        skip_terminal_starts();
      }
      if (converged)
        break;
    }
    if (converged)
      break;
    for (std::size_t t = 0; t + 1 < length; ++t)
      if (!batch.ends[t])
        batch.bootstrap[t] = batch.values[t + 1];

    compute_advantages(batch, gamma, config.gae_lambda, true);
    order.resize(length);
    for (int epoch = 0; epoch < config.epochs_per_update; ++epoch) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      rng.shuffle(std::span<std::size_t>(order));
      for (std::size_t start = 0; start < length; start += config.minibatch_size) {
        const std::size_t stop = std::min(length, start + std::size_t(config.minibatch_size));
        ppo_loss(policy, batch, std::span<const std::size_t>(order.data() + start, stop - start), config, &grad);
        clip_gradient_norm(grad, config.max_grad_norm);
        adam.step(policy.parameters(), grad, config);
      }
    }

    if (finished > 0) {
      const double mean = finished_sum / finished;
      result.update_mean_returns.push_back(mean);
      guard.observe(mean);
    }
  }
  return result;
}

} // namespace

void DivergenceGuard::observe(double mean)
{
  if (mean > best_) {
    best_ = mean;
    streak_ = 0;
  } else if (mean < best_ - fraction_ * std::abs(best_)) {
    if (++streak_ >= patience_)
      throw PpoDiverged("PPO did not converge: mean return " + std::to_string(mean) + " vs best " +
                        std::to_string(best_) + " for " + std::to_string(streak_) + " updates");
  } else {
    streak_ = 0;
  }
}

PpoTrainResult train_ppo(const EnvGraph& graph, const PpoConfig& config)
{
  return run_training([&](std::uint64_t) { return graph; }, graph.num_nodes(), graph.num_agents(), config);
}

PpoTrainResult train_ppo(const GraphSampler& sampler, const PpoConfig& config)
{
  return run_training([&](std::uint64_t k) { return sampler.sample(k); }, sampler.num_nodes, sampler.num_agents,
                      config);
}

template <typename Scalar>
Rollout act_greedy(const MlpPolicy<Scalar>& policy, const EnvGraph& graph)
{
  using Vector = typename MlpPolicy<Scalar>::Vector;
  const PolicyShape& s = policy.shape();
  const int n = graph.num_nodes();
  const int agents = graph.num_agents();
  if (s.num_nodes != n || s.num_agents != agents || s.input != policy_input_size(n, agents))
    throw std::invalid_argument("policy was built for " + std::to_string(s.num_nodes) + " nodes and " +
                                std::to_string(s.num_agents) + " agents, graph has " + std::to_string(n) +
                                " and " + std::to_string(agents));

  // The graph block of the input is fixed for the episode, so its share of
  // the first layer is computed once; each step only adds the columns of
  // the occupied position one-hots.
  const Vector graph_part = graph_input(graph).cast<Scalar>();
  const auto w1 = policy.w1();
  const Vector base = w1.rightCols(graph_part.size()) * graph_part + policy.b1();
  std::vector<std::vector<std::uint8_t>> node_masks;
  for (NodeId v = 0; v < n; ++v)
    node_masks.push_back(agent_mask(graph, v));

  Rollout out;
  std::vector<NodeId> positions = graph.starts();
  std::vector<int> slots(agents);
  out.trajectory.push_back(JointState{positions});
  out.reached_goal = is_terminal(graph, std::span<const NodeId>(positions));
  Vector h1(s.hidden1), h2(s.hidden2), logits(s.heads());
  const int cap = horizon(graph, agents);
  for (int t = 0; t < cap && !out.reached_goal; ++t) {
    h1 = base;
    for (int k = 0; k < agents; ++k)
      h1 += w1.col(Eigen::Index(k) * n + positions[k]);
    h1 = h1.array().tanh();
    h2.noalias() = policy.w2() * h1;
    h2 = (h2 + policy.b2()).array().tanh();
    logits.noalias() = policy.wa() * h2;
    logits += policy.ba();

    JointAction action;
    for (int k = 0; k < agents; ++k) {
      const auto& m = node_masks[positions[k]];
      int best = -1;
      for (int i = 0; i < s.slots(); ++i)
        if (m[i] && (best < 0 || logits[k * s.slots() + i] > logits[k * s.slots() + best]))
          best = i;
      slots[k] = best;
    }
    out.true_cost += team_step_cost(graph, positions, slots);
    for (int k = 0; k < agents; ++k) {
      action.actions.push_back(action_of_slot(slots[k], positions[k], n));
      if (slots[k] != n)
        positions[k] = slots[k];
    }
    out.actions.push_back(std::move(action));
    // The policy is deterministic and sees only the configuration, so a
    // repeat means a cycle that never reaches the goal.
    const bool repeat = std::any_of(out.trajectory.begin(), out.trajectory.end(),
                                    [&](const JointState& seen) { return seen.positions == positions; });
    out.trajectory.push_back(JointState{positions});
    out.reached_goal = is_terminal(graph, std::span<const NodeId>(positions));
    if (repeat)
      break;
  }
  return out;
}

template Rollout act_greedy<float>(const MlpPolicy<float>&, const EnvGraph&);
template Rollout act_greedy<double>(const MlpPolicy<double>&, const EnvGraph&);

//==============================================================================
void save_policy(const MlpPolicy<double>& policy, std::ostream& out)
{
  const PolicyShape& s = policy.shape();
  binary::write_magic(out, "MLP1");
  const std::uint32_t sizes[] = {std::uint32_t(s.input), std::uint32_t(s.hidden1), std::uint32_t(s.hidden2),
                                 std::uint32_t(s.heads()), 1u};
  binary::write_u32(out, 5);
  for (std::uint32_t v : sizes)
    binary::write_u32(out, v);
  binary::write_u32(out, std::uint32_t(s.num_agents));
  binary::write_u32(out, std::uint32_t(s.num_nodes));
  for (Eigen::Index i = 0; i < policy.parameters().size(); ++i)
    binary::write_f64(out, policy.parameters()[i]);
  if (!out)
    throw std::runtime_error("failed to write policy checkpoint");
}

void save_policy(const MlpPolicy<double>& policy, const std::filesystem::path& path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  save_policy(policy, out);
}

MlpPolicy<double> load_policy(std::istream& in)
{
  binary::expect_magic(in, "MLP1");
  if (binary::read_u32(in) != 5)
    throw std::runtime_error("policy checkpoint: unexpected layer count");
  std::uint32_t sizes[5];
  for (auto& v : sizes)
    v = binary::read_u32(in);
  const auto agents = static_cast<int>(binary::read_u32(in));
  const auto nodes = static_cast<int>(binary::read_u32(in));
  if (nodes < 1 || agents < 1 || sizes[0] != std::uint32_t(policy_input_size(nodes, agents)) ||
      sizes[3] != std::uint32_t(agents * (nodes + 1)) || sizes[4] != 1 || sizes[1] == 0 || sizes[2] == 0)
    throw std::runtime_error("policy checkpoint: inconsistent header");
  const PolicyShape shape{nodes, agents, int(sizes[0]), int(sizes[1]), int(sizes[2])};
  MlpPolicy<double> policy(shape);
  for (Eigen::Index i = 0; i < policy.parameters().size(); ++i)
    policy.parameters()[i] = binary::read_f64(in);
  if (!policy.parameters().allFinite())
    throw std::runtime_error("policy checkpoint: non-finite parameter");
  return policy;
}

MlpPolicy<double> load_policy(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open " + path.string());
  return load_policy(in);
}

} // namespace teamcoord
