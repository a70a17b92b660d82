#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "dbs/derivation.hpp"
#include "dbs/pcfg.hpp"

namespace dbs {

/// A partial program identified by its leftmost derivation. In a trimmed
/// normalized acyclic PCFG every hole has completion mass 1, so the mass of
/// all completions is the product of the applied rule weights.
struct Prefix {
  PartialDerivation d;
  double mass = 1.0;
};

struct Split {
  std::vector<Prefix> prefixes;
  double mass = 0.0;
};

struct Partition {
  std::vector<Split> splits;
  /// max split mass / min split mass.
  double quality = 1.0;
  std::size_t refinements = 0;
  bool budget_exhausted = false;
};

struct SplitOptions {
  double alpha_desired = 1.05;
  std::size_t refinement_budget = 10000;
  /// Consider moves between every pair of splits rather than only those
  /// touching the heaviest or the lightest split.
  bool full_scan = false;
};

/// Gift moves prefix `from_index` of split `from` into split `to`; a swap
/// additionally moves prefix `to_index` of `to` back into `from`.
struct Move {
  enum class Kind { Gift, Swap } kind = Kind::Gift;
  std::size_t from = 0, to = 0;
  std::size_t from_index = 0, to_index = 0;
  /// Quality after the move.
  double quality = 1.0;
};

double partition_quality(const std::vector<Split>& splits);

/// Hill-climbing k-way partition of the program space. Throws
/// std::invalid_argument if the grammar has fewer than k programs.
Partition split_grammar(const Pcfg& pcfg, std::size_t k, const SplitOptions& opt = {});

/// Best gift or swap, returned only if it strictly lowers the quality.
std::optional<Move> find_improving_move(const Partition& partition, bool full_scan = false);
void apply_move(Partition& partition, const Move& move);

/// One-step expansions of the prefix's leftmost hole.
std::vector<Prefix> refine(const Pcfg& pcfg, const Prefix& prefix);

/// A split materialized as a grammar whose programs are exactly the
/// completions of its prefixes. Probabilities under the original PCFG are
/// `mass` times the sub-space probabilities.
struct SubSpace {
  Pcfg pcfg;
  double mass = 1.0;
};
SubSpace sub_space(const Pcfg& pcfg, const Split& split);

}  // namespace dbs
