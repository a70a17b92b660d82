#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dbs/derivation.hpp"
#include "dbs/pcfg.hpp"

namespace dbs {

struct Enumerated {
  Program program;
  /// Probability under the stream's PCFG.
  double probability = 0.0;
};

/// A deterministic, single-threaded iterator over programs.
class ProgramStream {
 public:
  virtual ~ProgramStream() = default;
  /// Next program, or nullopt once the space is exhausted.
  virtual std::optional<Enumerated> next() = 0;
};

/// Bottom-up best-first enumeration with per-non-terminal heaps and
/// successor tables. Yields every program once, ordered by (score, canonical_key).
class HeapSearch : public ProgramStream {
 public:
  explicit HeapSearch(Pcfg pcfg);
  ~HeapSearch() override;
  std::optional<Enumerated> next() override;

  struct Stats {
    std::uint64_t pushes = 0;
    std::uint64_t pops = 0;
    /// Queries that popped a heap (memo misses).
    std::uint64_t computed_queries = 0;
    /// Largest pushes + pops attributed to a single computed query.
    std::uint64_t max_ops_per_query = 0;
    std::uint64_t heap_entries = 0;
  };
  const Stats& stats() const { return stats_; }

 private:
  struct State;
  std::unique_ptr<State> state_;
  Stats stats_;
  std::uint32_t yielded_ = 0;
};

/// Best-first search over leftmost partial derivations ordered by (upper
/// bound, canonical key of the partial program). Same sequence as HeapSearch.
class AStar : public ProgramStream {
 public:
  explicit AStar(Pcfg pcfg);
  ~AStar() override;
  std::optional<Enumerated> next() override;
  std::size_t frontier_size() const;

 private:
  struct State;
  std::unique_ptr<State> state_;
};

struct ThresholdOptions {
  /// Initial threshold; nullopt means p_start.
  std::optional<double> initial;
  double scale = 0.25;
};

/// Iterative deepening on probability thresholds theta_j = initial * scale^j;
/// iteration j yields programs with probability in [theta_j, theta_{j-1}).
class ThresholdSearch : public ProgramStream {
 public:
  ThresholdSearch(Pcfg pcfg, ThresholdOptions opt = {});
  ~ThresholdSearch() override;
  std::optional<Enumerated> next() override;
  int iteration() const;

 private:
  struct State;
  std::unique_ptr<State> state_;
};

struct SortAddOptions {
  int k0 = 2;
  int step = 2;
  /// Bound on program size (nodes); 0 means unbounded.
  std::uint32_t size_bound = 0;
};

/// Iterated DFS on the grammar restricted to the top-k rules of every
/// non-terminal, k = k0, k0 + step, ...; programs already produced by an
/// earlier iteration are skipped.
class SortAndAdd : public ProgramStream {
 public:
  SortAndAdd(Pcfg pcfg, SortAddOptions opt = {});
  ~SortAndAdd() override;
  std::optional<Enumerated> next() override;
  int k() const;

 private:
  struct State;
  std::unique_ptr<State> state_;
};

struct BeamOptions {
  std::size_t w0 = 64;
  std::size_t growth = 2;
};

/// Level-synchronous beam over partial derivations, restarted with a wider
/// beam until an iteration never prunes.
class BeamSearch : public ProgramStream {
 public:
  BeamSearch(Pcfg pcfg, BeamOptions opt = {});
  ~BeamSearch() override;
  std::optional<Enumerated> next() override;
  std::size_t width() const;

 private:
  struct State;
  std::unique_ptr<State> state_;
};

/// Breadth-first over partial derivations (FIFO), leftmost hole, rules in
/// grammar order; complete programs are yielded when dequeued.
class Bfs : public ProgramStream {
 public:
  explicit Bfs(Pcfg pcfg);
  ~Bfs() override;
  std::optional<Enumerated> next() override;

 private:
  struct State;
  std::unique_ptr<State> state_;
};

/// Depth-first, leftmost hole, rules in grammar order. A partial derivation
/// is expanded only while applied nodes + open holes <= size_bound (0 = unbounded).
class Dfs : public ProgramStream {
 public:
  Dfs(Pcfg pcfg, std::uint32_t size_bound = 0);
  ~Dfs() override;
  std::optional<Enumerated> next() override;

 private:
  struct State;
  std::unique_ptr<State> state_;
};

}  // namespace dbs
