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
#include "teamcoord/ppo.hpp"
#include "teamcoord/qlearn.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace teamcoord {

enum class Solver
{
  Jsg,
  QLearn,
  Ppo,
  Naive
};

std::string_view to_string(Solver solver);
/// Accepts "jsg", "qlearn", "ppo", "naive".
std::optional<Solver> parse_solver(std::string_view text);

enum class Outcome
{
  Solved,
  FailedMemory,
  FailedTimeout,
  FailedDiverged
};

std::string_view to_string(Outcome outcome);
std::optional<Outcome> parse_outcome(std::string_view text);

class ConfigError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct SuiteConfig
{
  std::vector<int> node_counts{5, 10, 15, 20, 25};
  std::vector<int> agent_counts{2, 3, 4};
  std::vector<Density> densities{Density::Sparse, Density::Moderate, Density::Dense};
  int instances_per_cell = 15;
  double risky_fraction = 0.3;
  std::vector<Solver> solvers{Solver::Jsg, Solver::QLearn, Solver::Ppo, Solver::Naive};
  double time_limit_seconds = 300.0;
  std::size_t memory_limit_bytes = 2 * kGiB;
  std::uint64_t master_seed = 0;
  RewardConfig reward;
  /// Worker threads; each run stays single-threaded.
  int threads = 1;

  /// Throws ConfigError.
  void check() const;
};

/// Strict JSON: every key optional, unknown keys rejected. Throws ConfigError.
SuiteConfig load_suite_config(std::istream& in);
SuiteConfig load_suite_config(const std::filesystem::path& path);
SuiteConfig suite_config_from_string(std::string_view text);

/// mix_seed(master, nodes, agents, density index, instance).
std::uint64_t instance_seed(std::uint64_t master_seed, int nodes, int agents, Density density, int instance);

struct BenchRecord
{
  int nodes = 0;
  int agents = 0;
  Density density = Density::Sparse;
  int instance = 0;
  Solver solver = Solver::Jsg;
  Outcome outcome = Outcome::Solved;
  std::optional<double> true_cost;
  std::optional<double> optimality_ratio;
  std::optional<double> wall_time_seconds;
  std::optional<double> train_time_seconds;     ///< RL only
  std::optional<double> inference_time_seconds; ///< multi-graph evaluation only
  std::uint64_t seed = 0;

  bool solved() const { return outcome == Outcome::Solved; }
};

/// Sort key: (nodes, agents, density, instance, solver).
bool record_less(const BenchRecord& a, const BenchRecord& b);

struct SolveOptions
{
  double time_limit_seconds = 300.0;
  std::size_t memory_limit_bytes = 2 * kGiB;
  RewardConfig reward;
  std::uint64_t seed = 0;
};

/// One solver on one graph under limits. Failures become the outcome; the
/// ratio is left empty. JSG records time build + search, RL records time
/// training + greedy rollout.
BenchRecord run_solver(const EnvGraph& graph, Solver solver, const SolveOptions& options);

/// Every (cell, instance, solver) of the grid, sorted. Ratios are filled
/// from the JSG record of the same instance when that one solved.
std::vector<BenchRecord> run_suite(const SuiteConfig& config);

/// Writes the time columns only when `timing` is set; otherwise they are
/// left blank so the file is a pure function of the configuration.
void emit_csv(const std::vector<BenchRecord>& records, std::ostream& out, bool timing = true);
void emit_csv(const std::vector<BenchRecord>& records, const std::filesystem::path& path, bool timing = true);

/// Parses a file written by emit_csv. Throws std::runtime_error.
std::vector<BenchRecord> read_csv(std::istream& in);
std::vector<BenchRecord> read_csv(const std::filesystem::path& path);

/// solver,inverse_time,ratio for every solved record with a ratio and a time.
void emit_pareto(const std::vector<BenchRecord>& records, std::ostream& out);
void emit_pareto(const std::vector<BenchRecord>& records, const std::filesystem::path& path);

/// Record as a JSON object (printed by the `solve` command).
std::string record_json(const BenchRecord& record);

//==============================================================================
struct MultiEvalOptions
{
  int num_nodes = 5;
  int num_agents = 2;
  std::vector<Density> densities{Density::Sparse, Density::Moderate, Density::Dense};
  double risky_fraction = 0.3;
  std::uint64_t held_out_seed = 999;
  int count = 15;
  bool include_naive = true;
  /// Each timed call repeats until this much time has passed; the mean per
  /// call is reported.
  double min_timing_seconds = 2e-3;
};

struct MultiEvalReport
{
  std::vector<BenchRecord> records;
  double mean_ratio = 0.0;       ///< policy; unreached goals count as 0
  double naive_mean_ratio = 0.0;
  double mean_inference_seconds = 0.0;
  double mean_jsg_seconds = 0.0; ///< build + search
  int reached = 0;
};

/// Training configuration used for the multi-graph policy (5 nodes, N = 2).
PpoConfig multi_graph_config();

/// Held-out graph k is GraphSampler{..., held_out_seed}.sample(k). The
/// policy runs in single precision. Throws std::invalid_argument when the
/// policy does not fit num_nodes and num_agents.
MultiEvalReport run_multi_eg_eval(const MlpPolicy<double>& policy, const MultiEvalOptions& options);

} // namespace teamcoord
