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

#include "teamcoord/bench.hpp"

#include "teamcoord/baselines.hpp"
#include "teamcoord/jsg.hpp"
#include "teamcoord/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <new>
#include <sstream>
#include <thread>
#include <tuple>

namespace teamcoord {

using json = nlohmann::json;

std::string_view to_string(Solver solver)
{
  switch (solver) {
    case Solver::Jsg:
      return "jsg";
    case Solver::QLearn:
      return "qlearn";
    case Solver::Ppo:
      return "ppo";
    case Solver::Naive:
      return "naive";
  }
  return "unknown";
}

std::optional<Solver> parse_solver(std::string_view text)
{
  for (Solver s : {Solver::Jsg, Solver::QLearn, Solver::Ppo, Solver::Naive})
    if (text == to_string(s))
      return s;
  return std::nullopt;
}

std::string_view to_string(Outcome outcome)
{
  switch (outcome) {
    case Outcome::Solved:
      return "solved";
    case Outcome::FailedMemory:
      return "failed-memory";
    case Outcome::FailedTimeout:
      return "failed-timeout";
    case Outcome::FailedDiverged:
      return "failed-diverged";
  }
  return "unknown";
}

std::optional<Outcome> parse_outcome(std::string_view text)
{
  for (Outcome o : {Outcome::Solved, Outcome::FailedMemory, Outcome::FailedTimeout, Outcome::FailedDiverged})
    if (text == to_string(o))
      return o;
  return std::nullopt;
}

//==============================================================================
void SuiteConfig::check() const
{
  if (node_counts.empty() || agent_counts.empty() || densities.empty() || solvers.empty())
    throw ConfigError("suite lists must be nonempty");
  for (int n : node_counts)
    if (n < 2)
      throw ConfigError("node counts must be at least 2");
  for (int a : agent_counts)
    if (a < 1)
      throw ConfigError("agent counts must be positive");
  if (instances_per_cell < 0)
    throw ConfigError("instances_per_cell must be nonnegative");
  if (!(risky_fraction >= 0.0 && risky_fraction <= 1.0))
    throw ConfigError("risky_fraction must lie in [0, 1]");
  if (!(time_limit_seconds > 0.0))
    throw ConfigError("time_limit_seconds must be positive");
  if (memory_limit_bytes == 0)
    throw ConfigError("memory_limit_bytes must be positive");
  if (threads < 1)
    throw ConfigError("threads must be positive");
  try {
    reward.check();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

namespace {

[[noreturn]] void config_fail(const std::string& where, const std::string& what)
{
  throw ConfigError(where + ": " + what);
}

void allow_keys(const json& obj, const std::vector<std::string>& keys, const std::string& where)
{
  if (!obj.is_object())
    config_fail(where, "expected an object");
  for (const auto& [key, value] : obj.items())
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      config_fail(where, "unknown field \"" + key + "\"");
}

long long get_int(const json& value, const std::string& where)
{
  if (!value.is_number_integer())
    config_fail(where, "expected an integer");
  return value.get<long long>();
}

double get_real(const json& value, const std::string& where)
{
  if (!value.is_number())
    config_fail(where, "expected a number");
  return value.get<double>();
}

std::vector<int> get_ints(const json& value, const std::string& where)
{
  if (!value.is_array())
    config_fail(where, "expected an array");
  std::vector<int> out;
  for (std::size_t i = 0; i < value.size(); ++i) {
    const long long x = get_int(value[i], where + "[" + std::to_string(i) + "]");
    if (x < 0 || x > 1'000'000)
      config_fail(where + "[" + std::to_string(i) + "]", "integer out of range");
    out.push_back(static_cast<int>(x));
  }
  return out;
}

template <class T, class Parse>
std::vector<T> get_names(const json& value, const std::string& where, Parse parse)
{
  if (!value.is_array())
    config_fail(where, "expected an array");
  std::vector<T> out;
  for (std::size_t i = 0; i < value.size(); ++i) {
    const std::string at = where + "[" + std::to_string(i) + "]";
    if (!value[i].is_string())
      config_fail(at, "expected a string");
    const auto parsed = parse(value[i].get<std::string>());
    if (!parsed)
      config_fail(at, "unknown name \"" + value[i].get<std::string>() + "\"");
    out.push_back(*parsed);
  }
  return out;
}

RewardConfig reward_from_json(const json& obj)
{
  allow_keys(obj, {"goal_bonus", "step_penalty", "alpha", "beta", "w1", "w2", "w3", "gamma"}, "reward");
  RewardConfig r;
  const std::pair<const char*, double*> fields[] = {
    {"goal_bonus", &r.goal_bonus}, {"step_penalty", &r.step_penalty}, {"alpha", &r.alpha}, {"beta", &r.beta},
    {"w1", &r.w1}, {"w2", &r.w2}, {"w3", &r.w3}, {"gamma", &r.gamma}};
  for (const auto& [key, slot] : fields)
    if (obj.contains(key))
      *slot = get_real(obj[key], std::string("reward.") + key);
  return r;
}

} // namespace

SuiteConfig suite_config_from_string(std::string_view text)
{
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("suite config: ") + e.what());
  }
  allow_keys(root,
             {"node_counts", "agent_counts", "densities", "instances_per_cell", "risky_fraction", "solvers",
              "time_limit_seconds", "memory_limit_bytes", "master_seed", "reward", "threads"},
             "suite");
  SuiteConfig c;
  if (root.contains("node_counts"))
    c.node_counts = get_ints(root["node_counts"], "node_counts");
  if (root.contains("agent_counts"))
    c.agent_counts = get_ints(root["agent_counts"], "agent_counts");
  if (root.contains("densities"))
    c.densities = get_names<Density>(root["densities"], "densities", parse_density);
  if (root.contains("instances_per_cell"))
    c.instances_per_cell = static_cast<int>(std::clamp(get_int(root["instances_per_cell"], "instances_per_cell"),
                                                       -1LL, 1'000'000LL));
  if (root.contains("risky_fraction"))
    c.risky_fraction = get_real(root["risky_fraction"], "risky_fraction");
  if (root.contains("solvers"))
    c.solvers = get_names<Solver>(root["solvers"], "solvers", parse_solver);
  if (root.contains("time_limit_seconds"))
    c.time_limit_seconds = get_real(root["time_limit_seconds"], "time_limit_seconds");
  if (root.contains("memory_limit_bytes")) {
    const long long m = get_int(root["memory_limit_bytes"], "memory_limit_bytes");
    if (m <= 0)
      config_fail("memory_limit_bytes", "must be positive");
    c.memory_limit_bytes = static_cast<std::size_t>(m);
  }
  if (root.contains("master_seed")) {
    if (!root["master_seed"].is_number_unsigned())
      config_fail("master_seed", "expected a nonnegative integer");
    c.master_seed = root["master_seed"].get<std::uint64_t>();
  }
  if (root.contains("reward"))
    c.reward = reward_from_json(root["reward"]);
  if (root.contains("threads"))
    c.threads = static_cast<int>(std::clamp(get_int(root["threads"], "threads"), 0LL, 1024LL));
  c.check();
  return c;
}

SuiteConfig load_suite_config(std::istream& in)
{
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return suite_config_from_string(buffer.str());
}

SuiteConfig load_suite_config(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open " + path.string());
  return load_suite_config(in);
}

std::uint64_t instance_seed(std::uint64_t master_seed, int nodes, int agents, Density density, int instance)
{
  return mix_seed({master_seed, static_cast<std::uint64_t>(nodes), static_cast<std::uint64_t>(agents),
                   static_cast<std::uint64_t>(density), static_cast<std::uint64_t>(instance)});
}

bool record_less(const BenchRecord& a, const BenchRecord& b)
{
  return std::tuple(a.nodes, a.agents, a.density, a.instance, a.solver) <
         std::tuple(b.nodes, b.agents, b.density, b.instance, b.solver);
}

//==============================================================================
namespace {

BenchRecord failed(BenchRecord r, Outcome outcome)
{
  r.outcome = outcome;
  r.true_cost.reset();
  r.wall_time_seconds.reset();
  r.train_time_seconds.reset();
  return r;
}

bool same_instance(const BenchRecord& a, const BenchRecord& b)
{
  return std::tie(a.nodes, a.agents, a.density, a.instance) == std::tie(b.nodes, b.agents, b.density, b.instance);
}

/// Solved cost against the optimum; a zero optimum only matches a zero cost.
std::optional<double> ratio_against(double cost, double optimum)
{
  if (optimum == 0.0)
    return cost == 0.0 ? std::optional<double>(1.0) : std::nullopt;
  return optimality_ratio(cost, optimum);
}

} // namespace

BenchRecord run_solver(const EnvGraph& graph, Solver solver, const SolveOptions& options)
{
  BenchRecord r;
  r.nodes = graph.num_nodes();
  r.agents = graph.num_agents();
  r.solver = solver;
  r.seed = options.seed;
  const Deadline deadline = Deadline::after(options.time_limit_seconds);
  const Stopwatch clock;
  try {
    switch (solver) {
      case Solver::Jsg: {
        JsgBuildOptions build;
        build.memory_budget_bytes = options.memory_limit_bytes;
        build.deadline = deadline;
        const JsgSolution sol = solve(build_jsg(graph, graph.num_agents(), build), deadline);
        r.wall_time_seconds = clock.seconds();
        r.true_cost = sol.optimal_cost;
        break;
      }
      case Solver::Naive: {
        const SolutionRecord sol = naive_solve(graph);
        r.wall_time_seconds = clock.seconds();
        r.true_cost = sol.true_cost;
        break;
      }
      case Solver::QLearn: {
        QConfig cfg;
        cfg.reward = options.reward;
        cfg.seed = options.seed;
        cfg.deadline = deadline;
        cfg.table_budget_bytes = options.memory_limit_bytes;
        const QTrainResult trained = train(graph, cfg);
        r.train_time_seconds = clock.seconds();
        const Rollout roll = greedy_rollout(trained.table, graph);
        r.wall_time_seconds = clock.seconds();
        if (!roll.reached_goal)
          return failed(r, Outcome::FailedDiverged);
        r.true_cost = roll.true_cost;
        break;
      }
      case Solver::Ppo: {
        PpoConfig cfg;
        cfg.reward = options.reward;
        cfg.seed = options.seed;
        cfg.deadline = deadline;
        const PpoTrainResult trained = train_ppo(graph, cfg);
        r.train_time_seconds = clock.seconds();
        const Rollout roll = act_greedy(trained.policy, graph);
        r.wall_time_seconds = clock.seconds();
        if (!roll.reached_goal)
          return failed(r, Outcome::FailedDiverged);
        r.true_cost = roll.true_cost;
        break;
      }
    }
  } catch (const MemoryBudgetExceeded&) {
    return failed(r, Outcome::FailedMemory);
  } catch (const std::bad_alloc&) {
    return failed(r, Outcome::FailedMemory);
  } catch (const TimeLimitExceeded&) {
    return failed(r, Outcome::FailedTimeout);
  } catch (const PpoDiverged&) {
    return failed(r, Outcome::FailedDiverged);
  }
  if (solver == Solver::Jsg && r.true_cost)
    r.optimality_ratio = ratio_against(*r.true_cost, *r.true_cost);
  return r;
}

std::vector<BenchRecord> run_suite(const SuiteConfig& config)
{
  config.check();
  struct Task
  {
    int nodes, agents;
    Density density;
    int instance;
    Solver solver;
  };
  std::vector<Task> tasks;
  for (int n : config.node_counts)
    for (int a : config.agent_counts)
      for (Density d : config.densities)
        for (int i = 0; i < config.instances_per_cell; ++i)
          for (Solver s : config.solvers)
            tasks.push_back({n, a, d, i, s});

  std::vector<BenchRecord> records(tasks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < tasks.size(); k = next++) {
      const Task& t = tasks[k];
      try {
        const std::uint64_t seed = instance_seed(config.master_seed, t.nodes, t.agents, t.density, t.instance);
        const EnvGraph g = generate({t.nodes, t.density, config.risky_fraction, t.agents, seed});
        BenchRecord r =
          run_solver(g, t.solver, {config.time_limit_seconds, config.memory_limit_bytes, config.reward, seed});
        r.density = t.density;
        r.instance = t.instance;
        records[k] = std::move(r);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error)
          error = std::current_exception();
        next = tasks.size();
      }
    }
  };
  const int threads = std::min<int>(config.threads, std::max<std::size_t>(1, tasks.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < threads; ++i)
      pool.emplace_back(worker);
  }
  if (error)
    std::rethrow_exception(error);

  std::sort(records.begin(), records.end(), record_less);
  // Ratios against the JSG record of the same instance.
  for (std::size_t lo = 0; lo < records.size();) {
    std::size_t hi = lo;
    std::optional<double> optimum;
    while (hi < records.size() && same_instance(records[lo], records[hi])) {
      if (records[hi].solver == Solver::Jsg && records[hi].solved())
        optimum = records[hi].true_cost;
      ++hi;
    }
    for (std::size_t k = lo; k < hi; ++k)
      if (optimum && records[k].solved() && records[k].true_cost)
        records[k].optimality_ratio = ratio_against(*records[k].true_cost, *optimum);
    lo = hi;
  }
  return records;
}

//==============================================================================
namespace {

constexpr const char* kCsvHeader =
  "nodes,agents,density,instance,solver,outcome,true_cost,optimality_ratio,wall_time_s,train_time_s,"
  "inference_time_s,seed";

std::string fixed6(double x)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

std::string general6(double x)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::string field(const std::optional<double>& x, bool failed, std::string (*format)(double))
{
  if (failed)
    return "--";
  return x ? format(*x) : std::string();
}

std::ofstream open_out(const std::filesystem::path& path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::vector<std::string> split(const std::string& line)
{
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::optional<double> parse_optional(const std::string& s, std::size_t line)
{
  if (s.empty() || s == "--")
    return std::nullopt;
  try {
    std::size_t used = 0;
    const double x = std::stod(s, &used);
    if (used == s.size())
      return x;
  } catch (const std::exception&) {
  }
  throw std::runtime_error("csv line " + std::to_string(line) + ": bad number \"" + s + "\"");
}

long long parse_integer(const std::string& s, std::size_t line)
{
  try {
    std::size_t used = 0;
    const long long x = std::stoll(s, &used);
    if (used == s.size())
      return x;
  } catch (const std::exception&) {
  }
  throw std::runtime_error("csv line " + std::to_string(line) + ": bad integer \"" + s + "\"");
}

} // namespace

void emit_csv(const std::vector<BenchRecord>& records, std::ostream& out, bool timing)
{
  std::vector<BenchRecord> sorted = records;
  std::stable_sort(sorted.begin(), sorted.end(), record_less);
  out << kCsvHeader << '\n';
  for (const BenchRecord& r : sorted) {
    const bool bad = !r.solved();
    auto time = [&](const std::optional<double>& t) {
      return bad ? std::string("--") : timing && t ? general6(*t) : std::string();
    };
    out << r.nodes << ',' << r.agents << ',' << to_string(r.density) << ',' << r.instance << ','
        << to_string(r.solver) << ',' << to_string(r.outcome) << ',' << field(r.true_cost, bad, fixed6) << ','
        << field(r.optimality_ratio, bad, fixed6) << ',' << time(r.wall_time_seconds) << ','
        << time(r.train_time_seconds) << ',' << time(r.inference_time_seconds) << ',' << r.seed << '\n';
  }
}

void emit_csv(const std::vector<BenchRecord>& records, const std::filesystem::path& path, bool timing)
{
  std::ofstream out = open_out(path);
  emit_csv(records, out, timing);
}

std::vector<BenchRecord> read_csv(std::istream& in)
{
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader)
    throw std::runtime_error("csv: missing or unexpected header");
  std::vector<BenchRecord> out;
  for (std::size_t no = 2; std::getline(in, line); ++no) {
    if (line.empty())
      continue;
    const std::vector<std::string> f = split(line);
    if (f.size() != 12)
      throw std::runtime_error("csv line " + std::to_string(no) + ": expected 12 fields");
    BenchRecord r;
    r.nodes = static_cast<int>(parse_integer(f[0], no));
    r.agents = static_cast<int>(parse_integer(f[1], no));
    const auto d = parse_density(f[2]);
    const auto s = parse_solver(f[4]);
    const auto o = parse_outcome(f[5]);
    if (!d || !s || !o)
      throw std::runtime_error("csv line " + std::to_string(no) + ": bad density, solver or outcome");
    r.density = *d;
    r.instance = static_cast<int>(parse_integer(f[3], no));
    r.solver = *s;
    r.outcome = *o;
    r.true_cost = parse_optional(f[6], no);
    r.optimality_ratio = parse_optional(f[7], no);
    r.wall_time_seconds = parse_optional(f[8], no);
    r.train_time_seconds = parse_optional(f[9], no);
    r.inference_time_seconds = parse_optional(f[10], no);
    try {
      std::size_t used = 0;
      r.seed = std::stoull(f[11], &used);
      if (used != f[11].size())
        throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw std::runtime_error("csv line " + std::to_string(no) + ": bad seed");
    }
    out.push_back(r);
  }
  return out;
}

std::vector<BenchRecord> read_csv(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open " + path.string());
  return read_csv(in);
}

void emit_pareto(const std::vector<BenchRecord>& records, std::ostream& out)
{
  std::vector<BenchRecord> sorted = records;
  std::stable_sort(sorted.begin(), sorted.end(), record_less);
  out << "solver,inverse_time,ratio\n";
  for (const BenchRecord& r : sorted) {
    const std::optional<double>& t = r.inference_time_seconds ? r.inference_time_seconds : r.wall_time_seconds;
    if (!r.solved() || !r.optimality_ratio || !t || !(*t > 0.0))
      continue;
    out << to_string(r.solver) << ',' << general6(1.0 / *t) << ',' << fixed6(*r.optimality_ratio) << '\n';
  }
}

void emit_pareto(const std::vector<BenchRecord>& records, const std::filesystem::path& path)
{
  std::ofstream out = open_out(path);
  emit_pareto(records, out);
}

std::string record_json(const BenchRecord& r)
{
  auto opt = [](const std::optional<double>& x) { return x ? json(*x) : json(nullptr); };
  json j;
  j["nodes"] = r.nodes;
  j["agents"] = r.agents;
  j["density"] = std::string(to_string(r.density));
  j["instance"] = r.instance;
  j["solver"] = std::string(to_string(r.solver));
  j["outcome"] = std::string(to_string(r.outcome));
  j["true_cost"] = opt(r.true_cost);
  j["optimality_ratio"] = opt(r.optimality_ratio);
  j["wall_time_s"] = opt(r.wall_time_seconds);
  j["train_time_s"] = opt(r.train_time_seconds);
  j["inference_time_s"] = opt(r.inference_time_seconds);
  j["seed"] = r.seed;
  return j.dump(2);
}

//==============================================================================
namespace {

/// Mean seconds per call of `f`, repeating until `min_total` has passed.
template <class F>
double seconds_per_call(F&& f, double min_total)
{
  const Stopwatch clock;
  long reps = 0;
  do {
    f();
    ++reps;
  } while (clock.seconds() < min_total);
  return clock.seconds() / static_cast<double>(reps);
}

} // namespace

PpoConfig multi_graph_config()
{
  PpoConfig c;
  // Fewer, larger updates and more exploration than the single-graph defaults.
  c.rollout_length = 8192;
  c.minibatch_size = 512;
  c.epochs_per_update = 4;
  c.entropy_coef = 0.03;
  c.total_env_steps = 8'000'000;
  // Per-update means swing with the graph mix; the guard only trips on collapse.
  c.divergence_patience = 50;
  return c;
}

MultiEvalReport run_multi_eg_eval(const MlpPolicy<double>& policy, const MultiEvalOptions& options)
{
  const PolicyShape& shape = policy.shape();
  if (shape.num_nodes != options.num_nodes || shape.num_agents != options.num_agents)
    throw std::invalid_argument("checkpoint is for " + std::to_string(shape.num_nodes) + " nodes and " +
                                std::to_string(shape.num_agents) + " agents, evaluation asks for " +
                                std::to_string(options.num_nodes) + " and " + std::to_string(options.num_agents));
  if (options.count < 0)
    throw std::invalid_argument("count must be nonnegative");

  const GraphSampler held_out{options.num_nodes, options.num_agents, options.densities, options.risky_fraction,
                              options.held_out_seed};
  const MlpPolicy<float> fast = policy.cast<float>();
  MultiEvalReport report;
  double ratio_sum = 0.0, naive_sum = 0.0;
  for (int k = 0; k < options.count; ++k) {
    const EnvGraph g = held_out.sample(static_cast<std::uint64_t>(k));
    BenchRecord base;
    base.nodes = options.num_nodes;
    base.agents = options.num_agents;
    base.density = options.densities[static_cast<std::size_t>(k) % options.densities.size()];
    base.instance = k;
    base.seed = mix_seed({options.held_out_seed, static_cast<std::uint64_t>(k)});

    double optimum = 0.0;
    BenchRecord jsg = base;
    jsg.solver = Solver::Jsg;
    jsg.wall_time_seconds = seconds_per_call(
      [&] { optimum = solve(build_jsg(g, options.num_agents)).optimal_cost; }, options.min_timing_seconds);
    jsg.true_cost = optimum;
    jsg.optimality_ratio = ratio_against(optimum, optimum);

    Rollout roll;
    BenchRecord rl = base;
    rl.solver = Solver::Ppo;
    rl.inference_time_seconds = seconds_per_call([&] { roll = act_greedy(fast, g); }, options.min_timing_seconds);
    rl.wall_time_seconds = rl.inference_time_seconds;
    if (roll.reached_goal) {
      rl.true_cost = roll.true_cost;
      rl.optimality_ratio = ratio_against(roll.true_cost, optimum);
      ratio_sum += rl.optimality_ratio.value_or(0.0);
      ++report.reached;
    } else {
      rl.outcome = Outcome::FailedDiverged;
    }

    report.mean_inference_seconds += *rl.inference_time_seconds;
    report.mean_jsg_seconds += *jsg.wall_time_seconds;
    report.records.push_back(jsg);
    report.records.push_back(rl);

    if (options.include_naive) {
      BenchRecord naive = base;
      naive.solver = Solver::Naive;
      SolutionRecord sol;
      naive.wall_time_seconds = seconds_per_call([&] { sol = naive_solve(g); }, options.min_timing_seconds);
      naive.true_cost = sol.true_cost;
      naive.optimality_ratio = ratio_against(sol.true_cost, optimum);
      naive_sum += naive.optimality_ratio.value_or(0.0);
      report.records.push_back(naive);
    }
  }
  if (options.count > 0) {
    const double c = options.count;
    report.mean_ratio = ratio_sum / c;
    report.naive_mean_ratio = naive_sum / c;
    report.mean_inference_seconds /= c;
    report.mean_jsg_seconds /= c;
  }
  std::sort(report.records.begin(), report.records.end(), record_less);
  return report;
}

} // namespace teamcoord
