#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dbs/pcfg.hpp"

namespace dbs {

/// A leftmost partial derivation: the applied rules in preorder plus the
/// stack of open holes (back = leftmost). Since only the leftmost hole is ever
/// expanded, applied nodes form a preorder prefix of every completion.
struct PartialDerivation {
  std::vector<std::int32_t> rules;
  std::vector<std::int32_t> holes;
  Score applied = 0;

  bool complete() const { return holes.empty(); }
  static PartialDerivation start_of(const Grammar& g) { return PartialDerivation{{}, {g.start()}, 0}; }
  /// Applies `rule_id` to the leftmost hole.
  void expand(const Pcfg& pcfg, int rule_id);
};

/// Program of a complete derivation.
Program build_program(const Grammar& g, std::span<const std::int32_t> rules);
/// Probability computed as w * p(child_1) * ... * p(child_k), recursively;
/// every enumerator reports this exact double.
/// Preorder rule ids deriving `p` from `nt` (the start symbol by default),
/// or nullopt if `p` is not derivable.
std::optional<std::vector<std::int32_t>> derivation_of(const Grammar& g, const Program& p, int nt = -1);

double derivation_probability(const Grammar& g, std::span<const std::int32_t> rules);
/// Serialized partial program; holes print as `{descriptor}`.
std::string partial_to_string(const Grammar& g, const PartialDerivation& d);

/// Three-way comparison of canonical keys of partial derivations; a hole
/// sorts below every node, so a prefix sorts before its completions.
int compare_partials(const Grammar& g, std::span<const std::int32_t> a, std::span<const std::int32_t> b);

/// Per non-terminal, the largest score (least probable program).
std::vector<Score> worst_scores(const Pcfg& pcfg);

}  // namespace dbs
