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

#include "teamcoord/baselines.hpp"
#include "teamcoord/bench.hpp"
#include "teamcoord/envgraph.hpp"
#include "teamcoord/ppo.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <tuple>
#include <vector>

using namespace teamcoord;
namespace fs = std::filesystem;

namespace {

std::vector<Density> parse_densities(const std::vector<std::string>& names)
{
  std::vector<Density> out;
  for (const std::string& n : names) {
    const auto d = parse_density(n);
    if (!d)
      throw CLI::ValidationError("--density", "unknown density \"" + n + "\"");
    out.push_back(*d);
  }
  return out;
}

/// Class whose edge count is closest to the graph's (exact for generated graphs).
Density infer_density(const EnvGraph& g)
{
  Density best = Density::Sparse;
  long gap = -1;
  for (Density d : {Density::Sparse, Density::Moderate, Density::Dense}) {
    try {
      const long diff = std::labs(static_cast<long>(density_edge_count(g.num_nodes(), d)) -
                                  static_cast<long>(g.num_edges()));
      if (gap < 0 || diff < gap) {
        best = d;
        gap = diff;
      }
    } catch (const InfeasibleDensity&) {
    }
  }
  return best;
}

const auto kDensityCheck = CLI::IsMember({"sparse", "moderate", "dense"});

//==============================================================================
struct GenArgs
{
  int nodes = 5;
  int agents = 2;
  std::string density = "sparse";
  double risky = 0.3;
  std::uint64_t seed = 0;
  int count = 1;
  std::string out = "-";
};

int run_gen(const GenArgs& a)
{
  const auto density = parse_density(a.density);
  if (a.count == 1) {
    const EnvGraph g = generate({a.nodes, *density, a.risky, a.agents, a.seed});
    if (a.out == "-")
      save(g, std::cout);
    else
      save(g, fs::path(a.out));
    return 0;
  }
  if (a.out == "-")
    throw CLI::ValidationError("--out", "a directory is needed when --count > 1");
  fs::create_directories(a.out);
  for (int i = 0; i < a.count; ++i) {
    const EnvGraph g = generate({a.nodes, *density, a.risky, a.agents, a.seed + static_cast<std::uint64_t>(i)});
    save(g, fs::path(a.out) / ("graph_" + std::to_string(i) + ".json"));
  }
  return 0;
}

//==============================================================================
struct SolveArgs
{
  std::string graph;
  std::string solver = "jsg";
  double time_limit = 300.0;
  double memory_gib = 2.0;
  std::uint64_t seed = 0;
};

int run_solve(const SolveArgs& a)
{
  const EnvGraph g = load(fs::path(a.graph));
  SolveOptions o;
  o.time_limit_seconds = a.time_limit;
  o.memory_limit_bytes = static_cast<std::size_t>(a.memory_gib * static_cast<double>(kGiB));
  o.seed = a.seed;
  BenchRecord r = run_solver(g, *parse_solver(a.solver), o);
  r.density = infer_density(g);
  if (r.solver != Solver::Jsg && r.solved()) {
    // Ratio against the optimum when the JSG fits the same limits.
    const BenchRecord opt = run_solver(g, Solver::Jsg, o);
    if (opt.solved() && *opt.true_cost > 0.0)
      r.optimality_ratio = optimality_ratio(*r.true_cost, *opt.true_cost);
  }
  std::cout << record_json(r) << '\n';
  return r.solved() ? 0 : 2;
}

//==============================================================================
struct SuiteArgs
{
  std::string config;
  std::string out = "-";
  std::string pareto;
  int threads = 0;
  bool no_timing = false;
};

int run_suite_cmd(const SuiteArgs& a)
{
  SuiteConfig c = load_suite_config(fs::path(a.config));
  if (a.threads > 0)
    c.threads = a.threads;
  const std::vector<BenchRecord> records = run_suite(c);
  if (a.out == "-")
    emit_csv(records, std::cout, !a.no_timing);
  else
    emit_csv(records, fs::path(a.out), !a.no_timing);
  if (!a.pareto.empty())
    emit_pareto(records, fs::path(a.pareto));
  return 0;
}

//==============================================================================
struct TrainArgs
{
  int nodes = 5;
  int agents = 2;
  std::vector<std::string> densities{"sparse", "moderate", "dense"};
  double risky = 0.3;
  std::uint64_t sampler_seed = 1;
  std::uint64_t seed = 0;
  std::int64_t steps = -1;
  double time_limit = 7200.0;
  std::string out;
};

int run_train_multi(const TrainArgs& a)
{
  PpoConfig cfg = multi_graph_config();
  cfg.seed = a.seed;
  if (a.steps >= 0)
    cfg.total_env_steps = a.steps;
  cfg.deadline = Deadline::after(a.time_limit);
  const GraphSampler sampler{a.nodes, a.agents, parse_densities(a.densities), a.risky, a.sampler_seed};
  const Stopwatch clock;
  const PpoTrainResult r = train_ppo(sampler, cfg);
  save_policy(r.policy, fs::path(a.out));
  std::printf("trained %lld env steps, %zu episodes in %.1f s -> %s\n", static_cast<long long>(r.env_steps),
              r.episode_returns.size(), clock.seconds(), a.out.c_str());
  if (!r.update_mean_returns.empty())
    std::printf("last update mean return %.4f\n", r.update_mean_returns.back());
  return 0;
}

//==============================================================================
struct EvalArgs
{
  std::string checkpoint;
  int count = 15;
  std::uint64_t held_out_seed = 999;
  std::vector<std::string> densities{"sparse", "moderate", "dense"};
  double risky = 0.3;
  bool no_naive = false;
  std::string out;
};

int run_eval_multi(const EvalArgs& a)
{
  const MlpPolicy<double> policy = load_policy(fs::path(a.checkpoint));
  MultiEvalOptions o;
  o.num_nodes = policy.shape().num_nodes;
  o.num_agents = policy.shape().num_agents;
  o.count = a.count;
  o.held_out_seed = a.held_out_seed;
  o.densities = parse_densities(a.densities);
  o.risky_fraction = a.risky;
  o.include_naive = !a.no_naive;
  const MultiEvalReport rep = run_multi_eg_eval(policy, o);
  if (!a.out.empty())
    emit_csv(rep.records, fs::path(a.out));
  std::printf("graphs %d  reached %d  mean ratio %.6f", a.count, rep.reached, rep.mean_ratio);
  if (o.include_naive)
    std::printf("  naive mean ratio %.6f", rep.naive_mean_ratio);
  std::printf("\nmean inference %.3g s  mean jsg build+search %.3g s\n", rep.mean_inference_seconds,
              rep.mean_jsg_seconds);
  return 0;
}

//==============================================================================
struct ReportArgs
{
  std::vector<std::string> inputs;
  std::string pareto;
};

int run_report(const ReportArgs& a)
{
  std::vector<BenchRecord> all;
  for (const std::string& in : a.inputs) {
    std::vector<BenchRecord> r = read_csv(fs::path(in));
    all.insert(all.end(), r.begin(), r.end());
  }
  if (!a.pareto.empty())
    emit_pareto(all, fs::path(a.pareto));

  struct Cell
  {
    int runs = 0, solved = 0, rated = 0, timed = 0;
    double ratio = 0.0, time = 0.0;
  };
  std::map<std::tuple<int, int, Density, Solver>, Cell> cells;
  for (const BenchRecord& r : all) {
    Cell& c = cells[{r.nodes, r.agents, r.density, r.solver}];
    ++c.runs;
    if (!r.solved())
      continue;
    ++c.solved;
    if (r.optimality_ratio) {
      ++c.rated;
      c.ratio += *r.optimality_ratio;
    }
    if (r.wall_time_seconds) {
      ++c.timed;
      c.time += *r.wall_time_seconds;
    }
  }
  std::printf("%5s %6s %-8s %-6s %7s %10s %12s\n", "nodes", "agents", "density", "solver", "solved", "mean_ratio",
              "mean_time_s");
  for (const auto& [key, c] : cells) {
    const auto& [n, k, d, s] = key;
    std::string ratio = c.rated ? std::to_string(c.ratio / c.rated) : "--";
    char time[32] = "--";
    if (c.timed)
      std::snprintf(time, sizeof time, "%.4g", c.time / c.timed);
    std::printf("%5d %6d %-8s %-6s %3d/%-3d %10s %12s\n", n, k, std::string(to_string(d)).c_str(),
                std::string(to_string(s)).c_str(), c.solved, c.runs, ratio.c_str(), time);
  }
  return 0;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"teamcoord: coordinated multi-agent traversal with support actions"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate graph files");
  g->add_option("-n,--nodes", gen.nodes, "Number of nodes")->check(CLI::Range(2, 100000));
  g->add_option("-a,--agents", gen.agents, "Number of agents")->check(CLI::PositiveNumber);
  g->add_option("-d,--density", gen.density, "sparse | moderate | dense")->check(kDensityCheck);
  g->add_option("--risky-fraction", gen.risky, "Fraction of risky edges")->check(CLI::Range(0.0, 1.0));
  g->add_option("-s,--seed", gen.seed, "Generator seed (graph i uses seed + i)");
  g->add_option("-c,--count", gen.count, "Number of graphs")->check(CLI::PositiveNumber);
  g->add_option("-o,--out", gen.out, "Output file, '-' for stdout, or a directory when --count > 1");

  SolveArgs solve;
  auto* s = app.add_subcommand("solve", "Solve one graph with one solver and print a JSON record");
  s->add_option("graph", solve.graph, "Graph file")->required()->check(CLI::ExistingFile);
  s->add_option("--solver", solve.solver, "jsg | qlearn | ppo | naive")
    ->check(CLI::IsMember({"jsg", "qlearn", "ppo", "naive"}));
  s->add_option("--time-limit", solve.time_limit, "Seconds")->check(CLI::PositiveNumber);
  s->add_option("--memory-gib", solve.memory_gib, "Memory budget in GiB")->check(CLI::PositiveNumber);
  s->add_option("--seed", solve.seed, "Seed for the learning solvers");

  SuiteArgs suite;
  auto* su = app.add_subcommand("suite", "Run a benchmark suite from a JSON config");
  su->add_option("config", suite.config, "Suite config file")->required()->check(CLI::ExistingFile);
  su->add_option("-o,--out", suite.out, "CSV output, '-' for stdout");
  su->add_option("--pareto", suite.pareto, "Also write the pareto file here");
  su->add_option("-j,--threads", suite.threads, "Override the worker count")->check(CLI::NonNegativeNumber);
  su->add_flag("--no-timing", suite.no_timing, "Leave time columns blank (byte-reproducible output)");

  TrainArgs train;
  auto* t = app.add_subcommand("train-multi", "Train one policy over many generated graphs");
  t->add_option("-n,--nodes", train.nodes, "Nodes per graph")->check(CLI::Range(2, 100000));
  t->add_option("-a,--agents", train.agents, "Agents")->check(CLI::PositiveNumber);
  t->add_option("-d,--density", train.densities, "Density classes, cycled")->check(kDensityCheck);
  t->add_option("--risky-fraction", train.risky, "Fraction of risky edges")->check(CLI::Range(0.0, 1.0));
  t->add_option("--sampler-seed", train.sampler_seed, "Seed of the training graph stream");
  t->add_option("--seed", train.seed, "Policy seed");
  t->add_option("--steps", train.steps, "Environment steps (default: built-in budget)");
  t->add_option("--time-limit", train.time_limit, "Seconds")->check(CLI::PositiveNumber);
  t->add_option("-o,--out", train.out, "Checkpoint path")->required();

  EvalArgs eval;
  auto* e = app.add_subcommand("eval-multi", "Evaluate a checkpoint on held-out graphs");
  e->add_option("checkpoint", eval.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  e->add_option("-c,--count", eval.count, "Held-out graphs")->check(CLI::NonNegativeNumber);
  e->add_option("--held-out-seed", eval.held_out_seed, "Seed of the held-out graph stream");
  e->add_option("-d,--density", eval.densities, "Density classes, cycled")->check(kDensityCheck);
  e->add_option("--risky-fraction", eval.risky, "Fraction of risky edges")->check(CLI::Range(0.0, 1.0));
  e->add_flag("--no-naive", eval.no_naive, "Skip the naive baseline");
  e->add_option("-o,--out", eval.out, "CSV output");

  ReportArgs report;
  auto* r = app.add_subcommand("report", "Summarise result CSVs and emit the pareto file");
  r->add_option("csv", report.inputs, "Result CSV files")->required()->check(CLI::ExistingFile);
  r->add_option("--pareto", report.pareto, "Pareto output file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*g)
      return run_gen(gen);
    if (*s)
      return run_solve(solve);
    if (*su)
      return run_suite_cmd(suite);
    if (*t)
      return run_train_multi(train);
    if (*e)
      return run_eval_multi(eval);
    if (*r)
      return run_report(report);
  } catch (const CLI::Error& err) {
    return app.exit(err);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
  return 0;
}
