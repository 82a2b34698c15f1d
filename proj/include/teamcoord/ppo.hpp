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

#include "teamcoord/limits.hpp"
#include "teamcoord/mdp.hpp"
#include "teamcoord/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace teamcoord {

/// Layer sizes of the actor-critic. Heads: one block of |V| + 1 logits per
/// agent, then a scalar value.
struct PolicyShape
{
  int num_nodes = 0;
  int num_agents = 0;
  int input = 0;
  int hidden1 = 0;
  int hidden2 = 0;

  int slots() const { return num_nodes + 1; }
  int heads() const { return num_agents * slots(); }
  std::size_t num_parameters() const;

  bool operator==(const PolicyShape&) const = default;
};

/// Input length: positions |V|*N, adjacency |V|^2, support |V|^3, goals |V|.
int policy_input_size(int num_nodes, int num_agents);
PolicyShape policy_shape(int num_nodes, int num_agents, int hidden = 128);

/// Feed-forward actor-critic with a tanh trunk. All parameters live in one
/// flat vector; the accessors are row-major views into it, in the order
/// trunk1 (W, b), trunk2 (W, b), actor (W, b), critic (W, b).
template <typename Scalar>
class MlpPolicy
{
public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MatrixMap = Eigen::Map<RowMatrix>;
  using ConstMatrixMap = Eigen::Map<const RowMatrix>;
  using VectorMap = Eigen::Map<Vector>;
  using ConstVectorMap = Eigen::Map<const Vector>;

  explicit MlpPolicy(const PolicyShape& shape)
    : shape_(shape), params_(Vector::Zero(static_cast<Eigen::Index>(shape.num_parameters())))
  {
  }

  const PolicyShape& shape() const { return shape_; }
  Vector& parameters() { return params_; }
  const Vector& parameters() const { return params_; }

  ConstMatrixMap w1() const { return cmat(offset_w1(), shape_.hidden1, shape_.input); }
  ConstVectorMap b1() const { return cvec(offset_b1(), shape_.hidden1); }
  ConstMatrixMap w2() const { return cmat(offset_w2(), shape_.hidden2, shape_.hidden1); }
  ConstVectorMap b2() const { return cvec(offset_b2(), shape_.hidden2); }
  ConstMatrixMap wa() const { return cmat(offset_wa(), shape_.heads(), shape_.hidden2); }
  ConstVectorMap ba() const { return cvec(offset_ba(), shape_.heads()); }
  ConstMatrixMap wv() const { return cmat(offset_wv(), 1, shape_.hidden2); }
  Scalar bv() const { return params_[offset_bv()]; }

  MatrixMap w1() { return mat(offset_w1(), shape_.hidden1, shape_.input); }
  VectorMap b1() { return vec(offset_b1(), shape_.hidden1); }
  MatrixMap w2() { return mat(offset_w2(), shape_.hidden2, shape_.hidden1); }
  VectorMap b2() { return vec(offset_b2(), shape_.hidden2); }
  MatrixMap wa() { return mat(offset_wa(), shape_.heads(), shape_.hidden2); }
  VectorMap ba() { return vec(offset_ba(), shape_.heads()); }
  MatrixMap wv() { return mat(offset_wv(), 1, shape_.hidden2); }
  Scalar& bv() { return params_[offset_bv()]; }

  template <typename Other>
  MlpPolicy<Other> cast() const
  {
    MlpPolicy<Other> out(shape_);
    out.parameters() = params_.template cast<Other>();
    return out;
  }

  Eigen::Index offset_w1() const { return 0; }
  Eigen::Index offset_b1() const { return offset_w1() + Eigen::Index(shape_.hidden1) * shape_.input; }
  Eigen::Index offset_w2() const { return offset_b1() + shape_.hidden1; }
  Eigen::Index offset_b2() const { return offset_w2() + Eigen::Index(shape_.hidden2) * shape_.hidden1; }
  Eigen::Index offset_wa() const { return offset_b2() + shape_.hidden2; }
  Eigen::Index offset_ba() const { return offset_wa() + Eigen::Index(shape_.heads()) * shape_.hidden2; }
  Eigen::Index offset_wv() const { return offset_ba() + shape_.heads(); }
  Eigen::Index offset_bv() const { return offset_wv() + shape_.hidden2; }

private:
  ConstMatrixMap cmat(Eigen::Index at, Eigen::Index r, Eigen::Index c) const { return {params_.data() + at, r, c}; }
  ConstVectorMap cvec(Eigen::Index at, Eigen::Index n) const { return {params_.data() + at, n}; }
  MatrixMap mat(Eigen::Index at, Eigen::Index r, Eigen::Index c) { return {params_.data() + at, r, c}; }
  VectorMap vec(Eigen::Index at, Eigen::Index n) { return {params_.data() + at, n}; }

  PolicyShape shape_;
  Vector params_;
};

/// Orthogonal initialization: gain sqrt(2) on the trunk, 0.01 on the actor
/// and 1 on the critic; zero biases.
MlpPolicy<double> init_policy(const PolicyShape& shape, Rng& rng);

//==============================================================================
/// Graph-dependent part of the policy input: adjacency and support blocks
/// divided by the absent-edge sentinel, then a goal indicator over nodes.
Eigen::VectorXd graph_input(const EnvGraph& graph);

/// Full input for one configuration.
Eigen::VectorXd policy_input(const EnvGraph& graph, std::span<const NodeId> positions);
void write_policy_input(const Eigen::VectorXd& graph_part,
                        std::span<const NodeId> positions,
                        int num_nodes,
                        Eigen::Ref<Eigen::VectorXd> out);

/// Softmax restricted to valid entries. Invalid entries get exactly 0.
/// At least one entry must be valid.
template <typename Scalar>
void masked_softmax(std::span<const Scalar> logits, std::span<const std::uint8_t> mask, std::span<Scalar> probs);

struct PolicyOutput
{
  std::vector<Eigen::VectorXd> probabilities; ///< one vector of |V| + 1 per agent
  double value = 0.0;
};

PolicyOutput policy_forward(const MlpPolicy<double>& policy, const Eigen::VectorXd& input, const TeamMask& mask);

//==============================================================================
struct PpoConfig
{
  double clip_epsilon = 0.2;
  double learning_rate = 3e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double max_grad_norm = 0.5;
  double gae_lambda = 0.95;
  int rollout_length = 2048;
  int epochs_per_update = 10;
  int minibatch_size = 256;
  std::int64_t total_env_steps = 200'000;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  int hidden = 128;
  RewardConfig reward; ///< gamma is taken from here
  int convergence_window = 500;
  double convergence_band = 0.2;
  int divergence_patience = 5;
  double divergence_fraction = 0.5;
  std::uint64_t seed = 0;
  Deadline deadline;

  void check() const;
};

/// Steps stored column-wise. `bootstrap` is the value used for the next
/// state: 0 after a terminal step, V(s') otherwise.
struct TrajectoryBatch
{
  int num_agents = 0;
  int num_slots = 0;
  Eigen::MatrixXd inputs;            ///< input size x steps
  std::vector<std::uint8_t> masks;   ///< steps x agents x slots
  std::vector<int> actions;          ///< steps x agents
  std::vector<double> log_probs;     ///< joint log-probability at collection time
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<double> bootstrap;
  std::vector<std::uint8_t> ends;    ///< episode ended after this step
  std::vector<double> advantages;
  std::vector<double> returns;

  std::size_t size() const { return rewards.size(); }
  void resize(std::size_t steps, int input_size, int num_agents, int num_slots);
};

/// Generalised advantage estimation. Fills `advantages` and `returns`
/// (advantage + value, before normalisation); when `normalize` is set the
/// advantages are then shifted and scaled to zero mean and unit variance.
void compute_advantages(TrajectoryBatch& batch, double gamma, double lambda, bool normalize);

struct LossTerms
{
  double total = 0.0;
  double policy = 0.0;  ///< negated clipped surrogate
  double value = 0.0;   ///< mean squared value error (unscaled)
  double entropy = 0.0; ///< mean joint entropy
  double clip_fraction = 0.0;
};

/// Composite loss over the given steps of `batch`:
///   -mean(min(r A, clip(r, 1 - eps, 1 + eps) A)) + c_v mean((V - R)^2) - c_e mean(H).
/// When `gradient` is non-null it receives the exact gradient with respect to
/// the flat parameters. At the kinks of min and clip the left branch
/// (the unclipped term) is differentiated.
LossTerms ppo_loss(const MlpPolicy<double>& policy,
                   const TrajectoryBatch& batch,
                   std::span<const std::size_t> steps,
                   const PpoConfig& config,
                   Eigen::VectorXd* gradient);

/// First and second moment state for the optimiser.
struct Adam
{
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::int64_t t = 0;

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, const PpoConfig& config);
};

/// Scales `grad` down to `max_norm` if needed; returns the norm before.
double clip_gradient_norm(Eigen::VectorXd& grad, double max_norm);

//==============================================================================
/// Source of training graphs for the multi-graph paradigm. Density classes
/// are cycled so the mix is equal.
struct GraphSampler
{
  int num_nodes = 5;
  int num_agents = 2;
  std::vector<Density> densities{Density::Sparse, Density::Moderate, Density::Dense};
  double risky_fraction = 0.3;
  std::uint64_t seed = 0;

  EnvGraph sample(std::uint64_t k) const;
};

class PpoDiverged : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Tracks per-update mean returns; observe() throws PpoDiverged once the
/// mean has stayed more than `fraction` of |best| below the best for
/// `patience` updates in a row.
class DivergenceGuard
{
public:
  DivergenceGuard(int patience, double fraction) : patience_(patience), fraction_(fraction) {}

  void observe(double mean);
  double best() const { return best_; }
  int streak() const { return streak_; }

private:
  int patience_;
  double fraction_;
  double best_ = -std::numeric_limits<double>::infinity();
  int streak_ = 0;
};

struct PpoTrainResult
{
  MlpPolicy<double> policy;
  std::vector<double> episode_returns;
  std::vector<double> update_mean_returns;
  std::optional<int> converged_at; ///< episode index
  std::int64_t env_steps = 0;
};

/// Single-graph paradigm. Throws PpoDiverged ("PPO did not converge") when
/// the per-update mean return stays more than `divergence_fraction` below
/// its best for `divergence_patience` updates in a row.
PpoTrainResult train_ppo(const EnvGraph& graph, const PpoConfig& config);

/// Multi-graph paradigm: a fresh graph from `sampler` at every episode reset.
PpoTrainResult train_ppo(const GraphSampler& sampler, const PpoConfig& config);

/// Per-agent argmax over the masked distribution for at most the horizon,
/// stopping early when a configuration repeats; cost is the unshaped team
/// cost. Throws std::invalid_argument when the
/// policy was built for a different |V| or N.
template <typename Scalar>
Rollout act_greedy(const MlpPolicy<Scalar>& policy, const EnvGraph& graph);

//==============================================================================
/// "MLP1", u32 layer count, u32 sizes (input, hidden1, hidden2, heads, 1),
/// u32 N, u32 |V|, then every weight matrix (row-major) and bias as
/// little-endian f64 in parameter order.
void save_policy(const MlpPolicy<double>& policy, std::ostream& out);
void save_policy(const MlpPolicy<double>& policy, const std::filesystem::path& path);
MlpPolicy<double> load_policy(std::istream& in);
MlpPolicy<double> load_policy(const std::filesystem::path& path);

} // namespace teamcoord
