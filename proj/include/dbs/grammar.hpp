#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dbs/dsl.hpp"
#include "dbs/program.hpp"
#include "dbs/type.hpp"

namespace dbs {

class EmptyGrammarError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CyclicGrammarError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bigram context: the primitive one level up and the argument slot filled.
struct Context {
  std::string parent;
  int arg = 0;
  friend bool operator==(const Context&, const Context&) = default;
};

struct NonTerminal {
  Type type;
  /// Remaining depth; programs derived from here have depth <= this.
  int depth = 1;
  std::optional<Context> context;
  /// Distinguishes otherwise identical non-terminals of derived grammars.
  std::uint32_t tag = 0;

  /// "int list@3", "int@2<take,0>", "int list@3#4".
  std::string descriptor() const;
  friend bool operator==(const NonTerminal&, const NonTerminal&) = default;
};

struct Symbol {
  enum class Kind : std::uint8_t { Primitive, Variable };
  Kind kind = Kind::Primitive;
  const PrimitiveInstance* prim = nullptr;
  std::uint32_t var = 0;

  static Symbol primitive(const PrimitiveInstance& p) { return Symbol{Kind::Primitive, &p, 0}; }
  static Symbol variable(std::uint32_t i) { return Symbol{Kind::Variable, nullptr, i}; }

  /// Instance label (`take[int]`) or `var<i>`; unique among the rules of one non-terminal.
  std::string label() const;
  /// Canonical node token of the program node this symbol produces.
  std::string token() const;
  std::size_t arity() const { return kind == Kind::Variable ? 0 : prim->arity(); }
  /// True if `p`'s root node is produced by this symbol.
  bool matches(const Program& p) const;
};

struct Rule {
  int lhs = 0;
  Symbol symbol;
  std::vector<int> rhs;
  /// Unnormalized in a plain CFG (compile uses 1); a probability in a Pcfg.
  double weight = 1.0;
};

/// A finite, acyclic, trimmed context-free grammar over typed programs,
/// optionally carrying rule weights.
///
/// Construction trims unproductive and unreachable non-terminals and
/// renumbers the survivors so that every rule's right-hand side refers to
/// smaller ids than its left-hand side; the start symbol has the largest id.
/// Rules of a non-terminal are contiguous and keep their given relative order.
class Grammar {
 public:
  Grammar(std::shared_ptr<const Dsl> dsl, Type type_request, std::vector<NonTerminal> nonterminals,
          std::vector<Rule> rules, int start);

  const Dsl& dsl() const { return *dsl_; }
  const std::shared_ptr<const Dsl>& dsl_ptr() const { return dsl_; }
  const Type& type_request() const { return type_request_; }

  int start() const { return start_; }
  std::size_t num_nonterminals() const { return nts_.size(); }
  const NonTerminal& nonterminal(int id) const { return nts_[id]; }
  std::optional<int> find_nonterminal(std::string_view descriptor) const;

  std::size_t num_rules() const { return rules_.size(); }
  const Rule& rule(int id) const { return rules_[id]; }
  std::span<const Rule> all_rules() const { return rules_; }
  std::span<const Rule> rules_of(int nt) const;
  int first_rule(int nt) const { return ranges_[nt]; }
  int end_rule(int nt) const { return ranges_[nt + 1]; }
  int num_rules_of(int nt) const { return ranges_[nt + 1] - ranges_[nt]; }

  /// Rank of the rule's symbol token among all symbol tokens of the grammar;
  /// comparing ranks compares canonical node tokens.
  std::uint32_t symbol_rank(int rule_id) const { return ranks_[rule_id]; }
  std::size_t max_arity() const { return max_arity_; }

  Program make_program(const Rule& r, std::vector<Program> args) const;

  /// Copy with replaced weights (indexed by rule id); structure unchanged.
  Grammar with_weights(std::vector<double> weights) const;

 private:
  Grammar() = default;
  void index();

  std::shared_ptr<const Dsl> dsl_;
  Type type_request_;
  std::vector<NonTerminal> nts_;
  std::vector<Rule> rules_;
  std::vector<int> ranges_;
  std::vector<std::uint32_t> ranks_;
  std::size_t max_arity_ = 0;
  int start_ = 0;
};

/// Depth-bounded CFG of the well-typed programs for `type_request`.
/// Polymorphic primitives are instantiated over bounded-size data types.
/// Rules within a non-terminal are ordered by (primitive name, instantiated
/// type); variables are named `var<i>`. Throws EmptyGrammarError.
Grammar compile(std::shared_ptr<const Dsl> dsl, const Type& type_request, int max_depth, bool bigram = false);

/// Same grammar with unproductive and unreachable parts removed. The
/// constructor already trims, so this is a re-trim after editing rules.
Grammar trim(const Grammar& g);

}  // namespace dbs
