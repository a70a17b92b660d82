#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dbs/eval.hpp"
#include "dbs/grammar_io.hpp"
#include "dbs/runner.hpp"

namespace dbs {

/// I/O bounds on task examples; evaluation itself is unbounded.
inline constexpr std::size_t kMaxListLength = 10;
inline constexpr std::int64_t kMinElement = -30;
inline constexpr std::int64_t kMaxElement = 30;

struct Example {
  /// In argument order a1..an.
  std::vector<Value> inputs;
  Value output;
  /// Variable bindings in de Bruijn order (inputs reversed).
  std::vector<Value> env;
};

struct Task {
  std::string name;
  Type type_request;
  std::vector<Example> examples;
  std::optional<std::string> solution;
};

/// Decodes `j` as a value of type `t`; throws std::invalid_argument on a
/// mismatch or a bound violation.
Value value_from_json(const Json& j, const Type& t);
Json value_to_json(const Value& v);

/// Validates: at least one example, arities and types match, bounds hold.
Task task_from_json(const Json& j);
Json task_to_json(const Task& t);

struct TaskFile {
  std::vector<Task> tasks;
  /// (task name or index, message) for entries that failed validation.
  std::vector<std::pair<std::string, std::string>> errors;
};
/// Accepts a JSON array of tasks or {"tasks": [...]}. Throws only if the file
/// itself is unreadable or malformed.
TaskFile load_tasks(const std::string& path);

/// True if `p` evaluates to the expected output on every example, without caching.
bool satisfies(const Task& task, const Program& p);

/// Per-worker predicates over private evaluation caches keyed by example index.
PredicateFactory task_predicate(const Task& task, std::size_t max_cache_entries = 1u << 20);

struct PcfgSource {
  enum class Kind { Uniform, Random, Weights } kind = Kind::Uniform;
  double alpha = 0.7;
  std::uint64_t seed = 0;
  Labeling labeling;

  static PcfgSource uniform() { return {}; }
  static PcfgSource random(double alpha, std::uint64_t seed) { return {Kind::Random, alpha, seed, {}}; }
  static PcfgSource weights(Labeling l) { return {Kind::Weights, 0.0, 0, std::move(l)}; }
};

Pcfg make_pcfg(const Grammar& g, const PcfgSource& source);

/// Weights giving every rule used by `solution` `boost` times its uniform share.
Labeling concentrated_labeling(const Grammar& g, const Program& solution, double boost = 20.0);

struct SolveOptions {
  int depth = 6;
  bool bigram = false;
  AlgorithmSpec algorithm;
  std::size_t k = 1;
  SearchBudget budget;
  RunOptions run;
};

struct SolveReport {
  std::string task;
  /// Keeps the primitives referenced by `solution` alive.
  std::shared_ptr<const Dsl> dsl;
  bool solved = false;
  std::optional<Program> solution;
  /// Post-hoc evaluation without the cache agrees with the predicate.
  bool verified = false;
  std::uint64_t generated = 0;
  std::uint64_t distinct = 0;
  double cumulative_probability = 0.0;
  /// Grammar compilation, weighting and splitting.
  double init_seconds = 0.0;
  double search_seconds = 0.0;
  double partition_quality = 1.0;
  RunReport run;
};

/// Throws EmptyGrammarError, std::invalid_argument (bad weights or options).
SolveReport solve(const Task& task, std::shared_ptr<const Dsl> dsl, const PcfgSource& source,
                  const SolveOptions& opt);

/// One metrics line. `seed` is text so summary rows can carry "mean"/"stddev".
struct MetricsRow {
  std::string run_id;
  std::string algorithm;
  std::size_t k = 1;
  std::string seed;
  double t_seconds = 0.0;
  std::uint64_t generated = 0;
  std::uint64_t distinct = 0;
  double cumulative_probability = 0.0;
  bool solved = false;
  std::string solution_text;
  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

extern const char* const kMetricsHeader;
void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);
/// Inverse of write_metrics_csv; throws std::invalid_argument on a bad header or line.
std::vector<MetricsRow> read_metrics_csv(std::istream& in);

struct BenchRandomConfig {
  std::shared_ptr<const Dsl> dsl;
  Type type_request;
  int depth = 6;
  bool bigram = false;
  double alpha = 0.7;
  std::vector<AlgorithmSpec> algorithms;
  std::size_t n_pcfgs = 1;
  std::uint64_t seed = 0;
  std::size_t k = 1;
  SearchBudget budget;
  RunOptions run;
};

/// Runs every algorithm on random_pcfg(alpha, seed + i) for i < n_pcfgs with a
/// never-satisfied predicate. With k = 1 each run contributes its worker's
/// program-count checkpoints, otherwise the aggregated cadence samples. Per
/// algorithm, "mean" and "stddev" rows (run_id "summary") follow, one per
/// sample index reached by every run.
std::vector<MetricsRow> bench_random(const BenchRandomConfig& cfg);

struct BenchTasksConfig {
  std::shared_ptr<const Dsl> dsl;
  std::vector<AlgorithmSpec> algorithms;
  /// Uniform or random; ignored for tasks that have a weights file.
  PcfgSource source;
  /// Directory of <task name>.json weights files; empty for none.
  std::string weights_dir;
  SolveOptions solve;
};

struct RateRow {
  std::string algorithm;
  std::uint64_t programs = 0;
  double search_seconds = 0.0;
  double programs_per_second = 0.0;
};

struct SolvedCurveRow {
  std::string algorithm;
  double budget_seconds = 0.0;
  std::size_t tasks_solved = 0;
};

struct BenchTasksResult {
  /// One row per (task, algorithm); t_seconds includes initialization.
  std::vector<MetricsRow> rows;
  std::vector<RateRow> rates;
  std::vector<SolvedCurveRow> solved_curve;
};

BenchTasksResult bench_tasks(const TaskFile& tasks, const BenchTasksConfig& cfg);

void write_rates_csv(std::ostream& out, const std::vector<RateRow>& rows);
void write_solved_curve_csv(std::ostream& out, const std::vector<SolvedCurveRow>& rows);

}  // namespace dbs
