#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dbs/enumerate.hpp"
#include "dbs/pcfg.hpp"
#include "dbs/splitter.hpp"

namespace dbs {

enum class Algorithm { Heap, AStar, Threshold, SortAdd, Beam, Bfs, Dfs, SqrtSample, NaiveSample };

std::string to_string(Algorithm a);
/// Accepts the CLI names: heap astar threshold sort-add beam bfs dfs sqrt-sample naive-sample.
std::optional<Algorithm> parse_algorithm(std::string_view name);
bool is_sampler(Algorithm a);
const std::vector<Algorithm>& all_algorithms();

struct AlgorithmSpec {
  Algorithm kind = Algorithm::Heap;
  ThresholdOptions threshold;
  SortAddOptions sort_add;
  BeamOptions beam;
  std::uint32_t dfs_size_bound = 0;
  /// Base seed of sampler streams; worker w uses stream w.
  std::uint64_t seed = 0;
};

/// Iterator or sampler over `pcfg`; probabilities reported under `pcfg`.
std::unique_ptr<ProgramStream> make_stream(const Pcfg& pcfg, const AlgorithmSpec& spec, std::uint64_t worker = 0);

struct SearchBudget {
  /// Per worker.
  std::optional<std::uint64_t> max_programs;
  /// Seconds of search, measured from the start of the workers.
  std::optional<double> wall_time;
  bool stop_on_success = true;
};

using Predicate = std::function<bool(const Program&)>;
/// Called once per worker, on that worker's thread, so each predicate may own
/// a private evaluation cache. An empty factory means "never satisfied".
using PredicateFactory = std::function<Predicate(std::size_t worker)>;

struct CurvePoint {
  double t_seconds = 0.0;
  std::uint64_t generated = 0;
  std::uint64_t distinct = 0;
  double cumulative_probability = 0.0;
};

struct WorkerReport {
  std::size_t worker = 0;
  std::uint64_t generated = 0;
  std::uint64_t distinct = 0;
  /// Mass of the distinct programs under the original PCFG.
  double cumulative_probability = 0.0;
  std::optional<Program> solution;
  double solution_probability = 0.0;
  double seconds = 0.0;
  bool exhausted = false;
  /// Outputs in order, when RunOptions::record_programs is set.
  std::vector<Program> programs;
  /// Totals when `generated` reaches 1, 2, 5, 10, 20, 50, ... and at the end.
  std::vector<CurvePoint> checkpoints;
};

struct RunOptions {
  /// Progress message interval per worker.
  double cadence_seconds = 0.05;
  bool record_programs = false;
  /// Every worker samples the full PCFG on its own stream instead of a split.
  bool naive_parallel = false;
  /// Cross-checks every output: enumerators must not repeat a program, and
  /// heap/astar must be non-increasing in probability. Violations throw.
  bool tie_check = false;
  SplitOptions split;
};

struct RunReport {
  std::vector<WorkerReport> workers;
  std::uint64_t generated = 0;
  /// Distinct across all workers.
  std::uint64_t distinct = 0;
  double cumulative_probability = 0.0;
  std::optional<Program> solution;
  std::optional<std::size_t> solved_by;
  double split_seconds = 0.0;
  double search_seconds = 0.0;
  double partition_quality = 1.0;
  std::vector<CurvePoint> curve;
};

/// Splits the grammar into k sub-spaces (k > 1, unless naive_parallel), runs
/// one worker thread per sub-space and merges their reports.
RunReport run_parallel(const Pcfg& pcfg, const AlgorithmSpec& spec, std::size_t k, const PredicateFactory& predicate,
                       const SearchBudget& budget, const RunOptions& opt = {});

}  // namespace dbs
