#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dbs/grammar_io.hpp"
#include "dbs/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUnsolved = 1;
constexpr int kExitConfig = 2;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::vector<std::string> algorithms{"heap"};
  int depth = 6;
  std::size_t k = 1;
  std::optional<double> alpha;
  std::uint64_t seed = 0;
  std::optional<double> timeout;
  std::optional<std::uint64_t> max_programs;
  std::string weights;
  std::string tasks;
  std::string out;
  std::string type = "int list -> int list";
  bool bigram = false;
  bool tie_check = false;
  double cadence = 0.05;
  double threshold_scale = 0.25;
  std::size_t beam_width = 64;
  std::uint32_t dfs_bound = 0;
};

void add_search_flags(CLI::App* cmd, Common& c) {
  cmd->add_option("--algorithm", c.algorithms,
                  "heap|astar|threshold|sort-add|beam|bfs|dfs|sqrt-sample|naive-sample (repeatable)")
      ->delimiter(',');
  cmd->add_option("--depth", c.depth, "Maximum program depth")->check(CLI::PositiveNumber);
  cmd->add_option("--k", c.k, "Worker threads (SYNTH_SEARCH_THREADS overrides)")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", c.seed, "Seed for random PCFGs and samplers");
  cmd->add_option("--timeout", c.timeout, "Search wall-clock seconds")->check(CLI::PositiveNumber);
  cmd->add_option("--max-programs", c.max_programs, "Programs per worker")->check(CLI::PositiveNumber);
  cmd->add_option("--out", c.out, "Output file (stdout if omitted)");
  cmd->add_option("--cadence", c.cadence, "Progress sampling interval in seconds")->check(CLI::PositiveNumber);
  cmd->add_option("--threshold-scale", c.threshold_scale, "Threshold search ratio between cutoffs")
      ->check(CLI::Range(1e-9, 1.0 - 1e-9));
  cmd->add_option("--beam-width", c.beam_width, "Initial beam width")->check(CLI::PositiveNumber);
  cmd->add_option("--dfs-bound", c.dfs_bound, "DFS program size bound (0 = none)");
  cmd->add_flag("--bigram", c.bigram, "Compile with parent/argument context");
  cmd->add_flag("--tie-check", c.tie_check, "Cross-check outputs for repeats and order violations");
}

std::vector<dbs::AlgorithmSpec> algorithm_specs(const Common& c) {
  std::vector<dbs::AlgorithmSpec> out;
  for (const auto& name : c.algorithms) {
    auto a = dbs::parse_algorithm(name);
    if (!a) throw ConfigError("unknown algorithm '" + name + "'");
    dbs::AlgorithmSpec s;
    s.kind = *a;
    s.threshold.scale = c.threshold_scale;
    s.beam.w0 = c.beam_width;
    s.dfs_size_bound = c.dfs_bound;
    s.seed = c.seed;
    out.push_back(s);
  }
  return out;
}

std::size_t effective_k(const Common& c) {
  const char* env = std::getenv("SYNTH_SEARCH_THREADS");
  if (!env || !*env) return c.k;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1) throw ConfigError(std::string("SYNTH_SEARCH_THREADS must be a positive integer, got ") + env);
  return static_cast<std::size_t>(v);
}

dbs::SearchBudget budget_of(const Common& c, bool stop_on_success) {
  dbs::SearchBudget b;
  b.max_programs = c.max_programs;
  b.wall_time = c.timeout;
  b.stop_on_success = stop_on_success;
  return b;
}

dbs::RunOptions run_options(const Common& c) {
  dbs::RunOptions r;
  r.cadence_seconds = c.cadence;
  r.tie_check = c.tie_check;
  return r;
}

dbs::PcfgSource source_of(const Common& c, const std::string& weights_file) {
  if (!weights_file.empty()) return dbs::PcfgSource::weights(dbs::labeling_from_json(dbs::read_json_file(weights_file)));
  if (c.alpha) return dbs::PcfgSource::random(*c.alpha, c.seed);
  return dbs::PcfgSource::uniform();
}

/// Writes to --out, or stdout when it is empty.
template <class F>
void emit(const std::string& path, F&& write) {
  if (path.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write " + path);
  write(f);
}

int run_solve(const Common& c, const std::string& only) {
  if (c.tasks.empty()) throw ConfigError("solve needs --tasks FILE");
  const dbs::TaskFile file = dbs::load_tasks(c.tasks);
  for (const auto& [name, msg] : file.errors) std::cerr << "task " << name << ": " << msg << "\n";
  if (!file.errors.empty()) return kExitConfig;
  const auto specs = algorithm_specs(c);
  if (specs.size() != 1) throw ConfigError("solve takes exactly one --algorithm");
  dbs::SolveOptions opt;
  opt.depth = c.depth;
  opt.bigram = c.bigram;
  opt.algorithm = specs[0];
  opt.k = effective_k(c);
  opt.budget = budget_of(c, true);
  opt.run = run_options(c);
  const bool weights_dir = !c.weights.empty() && std::filesystem::is_directory(c.weights);
  std::vector<dbs::MetricsRow> rows;
  bool all_solved = true;
  std::size_t attempted = 0;
  for (const dbs::Task& task : file.tasks) {
    if (!only.empty() && task.name != only) continue;
    ++attempted;
    const std::string wfile =
        weights_dir ? (std::filesystem::path(c.weights) / (task.name + ".json")).string() : c.weights;
    const dbs::SolveReport rep = dbs::solve(task, dbs::list_mini(), source_of(c, wfile), opt);
    all_solved = all_solved && rep.solved;
    std::cerr << task.name << ": " << (rep.solved ? "solved " + rep.solution->to_string() : std::string("unsolved"))
              << " generated=" << rep.generated << " init=" << rep.init_seconds << "s search=" << rep.search_seconds
              << "s\n";
    rows.push_back(dbs::MetricsRow{task.name, dbs::to_string(opt.algorithm.kind), opt.k,
                                   c.alpha ? std::to_string(c.seed) : "", rep.init_seconds + rep.search_seconds,
                                   rep.generated, rep.distinct, rep.cumulative_probability, rep.solved,
                                   rep.solution ? rep.solution->to_string() : ""});
  }
  if (attempted == 0) throw ConfigError(only.empty() ? "no tasks in " + c.tasks : "no task named '" + only + "'");
  emit(c.out, [&](std::ostream& o) { dbs::write_metrics_csv(o, rows); });
  return all_solved ? kExitOk : kExitUnsolved;
}

int run_bench_random(const Common& c, std::size_t n_pcfgs) {
  dbs::BenchRandomConfig cfg;
  cfg.dsl = dbs::list_mini();
  cfg.type_request = dbs::Type::parse(c.type);
  cfg.depth = c.depth;
  cfg.bigram = c.bigram;
  cfg.alpha = c.alpha.value_or(0.7);
  cfg.algorithms = algorithm_specs(c);
  cfg.n_pcfgs = n_pcfgs;
  cfg.seed = c.seed;
  cfg.k = effective_k(c);
  cfg.budget = budget_of(c, false);
  if (!cfg.budget.max_programs && !cfg.budget.wall_time) throw ConfigError("bench-random needs --timeout or --max-programs");
  cfg.run = run_options(c);
  const auto rows = dbs::bench_random(cfg);
  emit(c.out, [&](std::ostream& o) { dbs::write_metrics_csv(o, rows); });
  return kExitOk;
}

int run_bench_tasks(const Common& c) {
  if (c.tasks.empty()) throw ConfigError("bench-tasks needs --tasks FILE");
  dbs::BenchTasksConfig cfg;
  cfg.dsl = dbs::list_mini();
  cfg.algorithms = algorithm_specs(c);
  cfg.source = c.alpha ? dbs::PcfgSource::random(*c.alpha, c.seed) : dbs::PcfgSource::uniform();
  if (!c.weights.empty()) {
    if (!std::filesystem::is_directory(c.weights)) throw ConfigError("bench-tasks --weights expects a directory");
    cfg.weights_dir = c.weights;
  }
  cfg.solve.depth = c.depth;
  cfg.solve.bigram = c.bigram;
  cfg.solve.k = effective_k(c);
  cfg.solve.budget = budget_of(c, true);
  cfg.solve.run = run_options(c);
  const dbs::TaskFile file = dbs::load_tasks(c.tasks);
  const auto result = dbs::bench_tasks(file, cfg);
  emit(c.out, [&](std::ostream& o) { dbs::write_metrics_csv(o, result.rows); });
  if (!c.out.empty()) {
    emit(c.out + ".rates.csv", [&](std::ostream& o) { dbs::write_rates_csv(o, result.rates); });
    emit(c.out + ".solved_curve.csv", [&](std::ostream& o) { dbs::write_solved_curve_csv(o, result.solved_curve); });
  }
  return kExitOk;
}

dbs::Pcfg grammar_for(const Common& c) {
  const dbs::Grammar g = dbs::compile(dbs::list_mini(), dbs::Type::parse(c.type), c.depth, c.bigram);
  return dbs::make_pcfg(g, source_of(c, c.weights));
}

int run_split_dump(const Common& c, double alpha_desired, std::size_t budget) {
  const dbs::Pcfg pcfg = grammar_for(c);
  dbs::SplitOptions opt;
  opt.alpha_desired = alpha_desired;
  opt.refinement_budget = budget;
  const dbs::Partition part = dbs::split_grammar(pcfg, effective_k(c), opt);
  emit(c.out, [&](std::ostream& o) { o << dbs::partition_to_json(pcfg, part).dump(2) << "\n"; });
  return kExitOk;
}

int run_make_weights(const Common& c, const std::string& out_dir, double boost) {
  if (c.tasks.empty() || out_dir.empty()) throw ConfigError("make-weights needs --tasks FILE and --out-dir DIR");
  const dbs::TaskFile file = dbs::load_tasks(c.tasks);
  std::filesystem::create_directories(out_dir);
  for (const dbs::Task& t : file.tasks) {
    if (!t.solution) continue;
    const dbs::Grammar g = dbs::compile(dbs::list_mini(), t.type_request, c.depth, c.bigram);
    const dbs::Program p = dbs::parse_program(g.dsl(), *t.solution, t.type_request);
    const dbs::Pcfg pcfg = dbs::attach_weights(g, dbs::concentrated_labeling(g, p, boost));
    dbs::write_json_file((std::filesystem::path(out_dir) / (t.name + ".json")).string(), dbs::weights_to_json(pcfg));
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distribution-based program synthesis over a typed list DSL"};
  app.require_subcommand(1);
  Common c;
  std::string only;
  std::size_t n_pcfgs = 1;
  double alpha_desired = 1.05;
  std::size_t split_budget = 10000;
  std::string out_dir;
  double boost = 20.0;

  auto* solve = app.add_subcommand("solve", "Solve tasks from a task file");
  add_search_flags(solve, c);
  solve->add_option("--tasks", c.tasks, "Task file (JSON)")->required();
  solve->add_option("--task", only, "Only the task with this name");
  solve->add_option("--weights", c.weights, "Weights file, or a directory of <task>.json files");
  solve->add_option("--alpha", c.alpha, "Use random_pcfg(alpha, seed) instead of uniform weights");

  auto* bench_random = app.add_subcommand("bench-random", "Cumulative probability curves on random PCFGs");
  add_search_flags(bench_random, c);
  bench_random->add_option("--type", c.type, "Type request");
  bench_random->add_option("--alpha", c.alpha, "Random PCFG decay (default 0.7)");
  bench_random->add_option("--n-pcfgs", n_pcfgs, "Number of random PCFGs")->check(CLI::PositiveNumber);

  auto* bench_tasks = app.add_subcommand("bench-tasks", "Run every algorithm on every task");
  add_search_flags(bench_tasks, c);
  bench_tasks->add_option("--tasks", c.tasks, "Task file (JSON)")->required();
  bench_tasks->add_option("--weights", c.weights, "Directory of <task>.json weights files");
  bench_tasks->add_option("--alpha", c.alpha, "Use random_pcfg(alpha, seed) instead of uniform weights");

  auto* split_dump = app.add_subcommand("split-dump", "Print a k-way partition as JSON");
  add_search_flags(split_dump, c);
  split_dump->add_option("--type", c.type, "Type request");
  split_dump->add_option("--weights", c.weights, "Weights file");
  split_dump->add_option("--alpha", c.alpha, "Use random_pcfg(alpha, seed)");
  split_dump->add_option("--alpha-desired", alpha_desired, "Target split quality")->check(CLI::Range(1.0, 1e9));
  split_dump->add_option("--refinement-budget", split_budget, "Maximum refinements");

  auto* grammar_dump = app.add_subcommand("grammar-dump", "Print the compiled PCFG as JSON");
  add_search_flags(grammar_dump, c);
  grammar_dump->add_option("--type", c.type, "Type request");
  grammar_dump->add_option("--weights", c.weights, "Weights file");
  grammar_dump->add_option("--alpha", c.alpha, "Use random_pcfg(alpha, seed)");
  bool weights_only = false;
  grammar_dump->add_flag("--weights-only", weights_only, "Print only the weights records");

  auto* manifest = app.add_subcommand("dsl-manifest", "Print the DSL's primitives as JSON");
  manifest->add_option("--out", c.out, "Output file (stdout if omitted)");

  auto* make_weights = app.add_subcommand("make-weights", "Weights concentrated on each task's known solution");
  add_search_flags(make_weights, c);
  make_weights->add_option("--tasks", c.tasks, "Task file (JSON)")->required();
  make_weights->add_option("--out-dir", out_dir, "Directory for <task>.json files")->required();
  make_weights->add_option("--boost", boost, "Weight multiplier of solution rules")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*solve) return run_solve(c, only);
    if (*bench_random) return run_bench_random(c, n_pcfgs);
    if (*bench_tasks) return run_bench_tasks(c);
    if (*split_dump) return run_split_dump(c, alpha_desired, split_budget);
    if (*grammar_dump) {
      const dbs::Pcfg pcfg = grammar_for(c);
      emit(c.out, [&](std::ostream& o) {
        o << (weights_only ? dbs::weights_to_json(pcfg) : dbs::grammar_to_json(pcfg)).dump(2) << "\n";
      });
      return kExitOk;
    }
    if (*manifest) {
      emit(c.out, [&](std::ostream& o) { o << dbs::dsl_manifest(*dbs::list_mini()).dump(2) << "\n"; });
      return kExitOk;
    }
    if (*make_weights) return run_make_weights(c, out_dir, boost);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
