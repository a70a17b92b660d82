#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dbs/grammar.hpp"

namespace dbs {

/// Fixed-point negative log-probability: round(-ln(p) * 2^40). Program
/// scores are exact integer sums of rule scores, so orderings built on them
/// are associative and reproducible.
using Score = std::int64_t;
inline constexpr double kScoreUnit = 1099511627776.0;  // 2^40
Score score_of(double probability);
double probability_of_score(Score s);

struct MaxProb {
  Program program;
  double probability = 0.0;
  Score score = 0;
};

/// A normalized weighted Grammar plus its derived tables. Immutable and
/// cheap to copy; copies share the tables.
class Pcfg {
 public:
  /// Requires per-non-terminal weights that sum to 1 within 1e-9, all > 0.
  explicit Pcfg(Grammar normalized);

  /// Renormalizes each non-terminal, drops zero-weight rules and re-trims.
  /// Throws std::invalid_argument if some reachable non-terminal has zero mass.
  static Pcfg from_weighted(const Grammar& g);

  const Grammar& grammar() const { return *grammar_; }
  const std::shared_ptr<const Grammar>& grammar_ptr() const { return grammar_; }
  int start() const { return grammar_->start(); }

  double rule_probability(int rule_id) const { return grammar_->rule(rule_id).weight; }
  Score rule_score(int rule_id) const { return tables_->rule_scores[rule_id]; }

  /// Most likely program from `nt` (ties broken by canonical_key).
  const MaxProb& max_prob(int nt) const { return tables_->max_prob[nt]; }

  /// Probability of `p` derived from the start symbol (0 if underivable).
  double probability(const Program& p) const;
  double probability(int nt, const Program& p) const;
  /// Score of `p`, or nullopt if underivable. Assumes an unambiguous grammar.
  std::optional<Score> score(const Program& p) const;

 private:
  struct Tables {
    std::vector<Score> rule_scores;
    std::vector<MaxProb> max_prob;
  };
  std::shared_ptr<const Grammar> grammar_;
  std::shared_ptr<const Tables> tables_;
};

/// Z(T) = sum over rules T -> f(T1..Tk) of w * prod Z(Ti); indexed by
/// non-terminal id. Weights need not be normalized.
std::vector<double> partition_function(const Grammar& g);

/// PCFG whose program distribution is D(x)^gamma / sum_y D(y)^gamma.
Pcfg power_transform(const Pcfg& pcfg, double gamma);
/// The square-root distribution: power_transform(pcfg, 0.5).
Pcfg sqrt_transform(const Pcfg& pcfg);

/// Rule identifier stable across compilations: (lhs descriptor, symbol label).
struct RuleKey {
  std::string lhs;
  std::string symbol;
  auto operator<=>(const RuleKey&) const = default;
};
using Labeling = std::map<RuleKey, double>;

RuleKey rule_key(const Grammar& g, int rule_id);
/// Throws std::invalid_argument on a rule without a weight, an unknown key,
/// a negative weight or a zero-mass non-terminal.
Pcfg attach_weights(const Grammar& g, const Labeling& labeling);
Labeling labeling_of(const Pcfg& pcfg);

Pcfg uniform(const Grammar& g);
/// Rule i (1-indexed, in rule order) of every non-terminal gets weight
/// ~ U[0, alpha^i] before renormalization. Deterministic in `seed`.
Pcfg random_pcfg(const Grammar& g, double alpha, std::uint64_t seed);
/// The pre-normalization weights drawn by random_pcfg.
std::vector<double> random_weights(const Grammar& g, double alpha, std::uint64_t seed);

}  // namespace dbs
