#include "dbs/grammar.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <tuple>

#include "dbs/eval.hpp"

namespace dbs {

std::string NonTerminal::descriptor() const {
  std::string s = type.to_string() + "@" + std::to_string(depth);
  if (context) s += "<" + context->parent + "," + std::to_string(context->arg) + ">";
  if (tag) s += "#" + std::to_string(tag);
  return s;
}

std::string Symbol::label() const {
  if (kind == Kind::Variable) return "var" + std::to_string(var);
  return prim->label;
}

std::string Symbol::token() const {
  std::string out;
  if (kind == Kind::Variable) {
    append_node_token(Program::variable(var), out);
  } else {
    out.push_back(static_cast<char>(NodeKind::Apply));
    out += prim->label;
    out.push_back('\0');
  }
  return out;
}

bool Symbol::matches(const Program& p) const {
  if (kind == Kind::Variable) return p.kind() == NodeKind::Variable && p.var_index() == var;
  if (p.kind() != NodeKind::Apply) return false;
  return &p.primitive() == prim || p.primitive().label == prim->label;
}

Grammar::Grammar(std::shared_ptr<const Dsl> dsl, Type type_request, std::vector<NonTerminal> nonterminals,
                 std::vector<Rule> rules, int start)
    : dsl_(std::move(dsl)), type_request_(std::move(type_request)) {
  const int n = static_cast<int>(nonterminals.size());
  if (start < 0 || start >= n) throw std::invalid_argument("start non-terminal out of range");
  std::vector<std::vector<int>> by_lhs(n);
  for (int r = 0; r < static_cast<int>(rules.size()); ++r) {
    const Rule& rule = rules[r];
    if (rule.lhs < 0 || rule.lhs >= n) throw std::invalid_argument("rule lhs out of range");
    if (rule.rhs.size() != rule.symbol.arity()) {
      throw std::invalid_argument("rule " + rule.symbol.label() + " has wrong number of children");
    }
    for (int c : rule.rhs) {
      if (c < 0 || c >= n) throw std::invalid_argument("rule rhs out of range");
    }
    by_lhs[rule.lhs].push_back(r);
  }

  // Least fixpoint of productivity.
  std::vector<char> productive(n, 0);
  for (bool changed = true; changed;) {
    changed = false;
    for (const Rule& rule : rules) {
      if (productive[rule.lhs]) continue;
      if (std::all_of(rule.rhs.begin(), rule.rhs.end(), [&](int c) { return productive[c]; })) {
        productive[rule.lhs] = 1;
        changed = true;
      }
    }
  }
  if (!productive[start]) {
    throw EmptyGrammarError("no program of type " + type_request_.to_string() + " derivable from " +
                            nonterminals[start].descriptor());
  }
  auto usable = [&](const Rule& rule) {
    return std::all_of(rule.rhs.begin(), rule.rhs.end(), [&](int c) { return productive[c]; });
  };

  // Post-order DFS from start over usable rules: children receive smaller ids.
  enum : char { White, Grey, Black };
  std::vector<char> colour(n, White);
  std::vector<int> order;
  std::vector<std::pair<int, std::size_t>> stack{{start, 0}};
  colour[start] = Grey;
  while (!stack.empty()) {
    auto& [nt, next] = stack.back();
    // Flatten (rule, child) pairs of nt into one cursor.
    bool pushed = false;
    const auto& rs = by_lhs[nt];
    while (!pushed) {
      std::size_t ri = next >> 8, ci = next & 0xff;
      if (ri >= rs.size()) break;
      const Rule& rule = rules[rs[ri]];
      if (!usable(rule) || ci >= rule.rhs.size()) {
        next = (ri + 1) << 8;
        continue;
      }
      ++next;
      int c = rule.rhs[ci];
      if (colour[c] == Grey) {
        throw CyclicGrammarError("cycle through non-terminal " + nonterminals[c].descriptor());
      }
      if (colour[c] == White) {
        colour[c] = Grey;
        stack.emplace_back(c, 0);
        pushed = true;
      }
    }
    if (!pushed) {
      colour[stack.back().first] = Black;
      order.push_back(stack.back().first);
      stack.pop_back();
    }
  }

  std::vector<int> new_id(n, -1);
  for (int i = 0; i < static_cast<int>(order.size()); ++i) new_id[order[i]] = i;
  nts_.reserve(order.size());
  ranges_.push_back(0);
  for (int old : order) {
    nts_.push_back(std::move(nonterminals[old]));
    for (int r : by_lhs[old]) {
      Rule& rule = rules[r];
      if (!usable(rule)) continue;
      rule.lhs = new_id[old];
      for (int& c : rule.rhs) c = new_id[c];
      rules_.push_back(std::move(rule));
    }
    ranges_.push_back(static_cast<int>(rules_.size()));
  }
  start_ = new_id[start];
  index();
}

void Grammar::index() {
  std::vector<std::string> tokens;
  tokens.reserve(rules_.size());
  max_arity_ = 0;
  for (const Rule& r : rules_) {
    tokens.push_back(r.symbol.token());
    max_arity_ = std::max(max_arity_, r.rhs.size());
  }
  std::vector<std::string> sorted = tokens;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  ranks_.resize(rules_.size());
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    ranks_[i] = static_cast<std::uint32_t>(std::lower_bound(sorted.begin(), sorted.end(), tokens[i]) - sorted.begin());
  }
}

std::optional<int> Grammar::find_nonterminal(std::string_view descriptor) const {
  for (int i = 0; i < static_cast<int>(nts_.size()); ++i) {
    if (nts_[i].descriptor() == descriptor) return i;
  }
  return std::nullopt;
}

std::span<const Rule> Grammar::rules_of(int nt) const {
  return std::span<const Rule>(rules_).subspan(ranges_[nt], ranges_[nt + 1] - ranges_[nt]);
}

Program Grammar::make_program(const Rule& r, std::vector<Program> args) const {
  if (r.symbol.kind == Symbol::Kind::Variable) return Program::variable(r.symbol.var);
  return Program::apply(*r.symbol.prim, std::move(args));
}

Grammar Grammar::with_weights(std::vector<double> weights) const {
  if (weights.size() != rules_.size()) throw std::invalid_argument("weight vector size mismatch");
  Grammar g = *this;
  for (std::size_t i = 0; i < weights.size(); ++i) g.rules_[i].weight = weights[i];
  return g;
}

namespace {

struct NtKey {
  std::string type;
  int depth;
  std::string parent;
  int arg;
  auto operator<=>(const NtKey&) const = default;
};

bool is_data(const Type& t) {
  switch (t.kind()) {
    case TypeKind::Int:
    case TypeKind::Bool: return true;
    case TypeKind::List: return is_data(t.element());
    default: return false;
  }
}

class Compiler {
 public:
  Compiler(std::shared_ptr<const Dsl> dsl, const Type& request, bool bigram)
      : dsl_(std::move(dsl)), env_(environment_of(request)), bigram_(bigram),
        free_types_(bounded_data_types(dsl_->max_type_size())) {}

  int intern(const Type& t, int depth, std::optional<Context> ctx) {
    NtKey key{t.to_string(), depth, ctx ? ctx->parent : std::string(), ctx ? ctx->arg : -1};
    auto it = ids_.find(key);
    if (it != ids_.end()) return it->second;
    int id = static_cast<int>(nts_.size());
    nts_.push_back(NonTerminal{t, depth, std::move(ctx), 0});
    ids_.emplace(std::move(key), id);
    pending_.push_back(id);
    return id;
  }

  void run() {
    while (!pending_.empty()) {
      int id = pending_.back();
      pending_.pop_back();
      expand(id);
    }
  }

  std::vector<NonTerminal> nts_;
  std::vector<Rule> rules_;

 private:
  std::shared_ptr<const Dsl> dsl_;
  TypeEnv env_;
  bool bigram_;
  std::vector<Type> free_types_;
  std::map<NtKey, int> ids_;
  std::vector<int> pending_;

  struct Candidate {
    std::string name;
    std::string type;
    Rule rule;
  };

  void expand(int id) {
    const Type t = nts_[id].type;
    const int depth = nts_[id].depth;
    std::vector<Candidate> out;
    for (std::uint32_t v = 0; v < env_.size(); ++v) {
      if (env_[v] == t) out.push_back({"var" + std::to_string(v), t.to_string(), Rule{id, Symbol::variable(v), {}, 1.0}});
    }
    for (const auto& p : dsl_->primitives()) {
      if (p->kind == PrimitiveKind::LambdaAtom) {
        if (p->signature == t) {
          const auto& inst = dsl_->instantiate(*p, {});
          out.push_back({p->name, inst.type.to_string(), Rule{id, Symbol::primitive(inst), {}, 1.0}});
        }
        continue;
      }
      if (p->arity > 0 && depth <= 1) continue;
      Substitution subst;
      if (!unify(p->signature.final_result(), t, subst)) continue;
      // Type variables range over bounded-size data types only.
      std::vector<int> free;
      bool bounded = true;
      for (int v = 0; v <= p->signature.max_var(); ++v) {
        Type b = substitute(subst, Type::var(v));
        if (b.kind() == TypeKind::Var && b.var_index() == v) {
          free.push_back(v);
        } else if (!is_data(b) || b.size() > dsl_->max_type_size()) {
          bounded = false;
        }
      }
      if (!bounded) continue;
      instantiate_free(*p, subst, free, 0, id, out);
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const Candidate& a, const Candidate& b) { return std::tie(a.name, a.type) < std::tie(b.name, b.type); });
    for (auto& c : out) rules_.push_back(std::move(c.rule));
  }

  void instantiate_free(const Primitive& p, Substitution& subst, const std::vector<int>& free, std::size_t i, int lhs,
                        std::vector<Candidate>& out) {
    if (i < free.size()) {
      for (const auto& ft : free_types_) {
        Substitution s = subst;
        if (s.size() <= static_cast<std::size_t>(free[i])) s.resize(free[i] + 1);
        s[free[i]] = ft;
        instantiate_free(p, s, free, i + 1, lhs, out);
      }
      return;
    }
    const auto& inst = dsl_->instantiate(p, subst);
    Rule r{lhs, Symbol::primitive(inst), {}, 1.0};
    const int depth = nts_[lhs].depth;
    for (std::size_t a = 0; a < inst.arg_types.size(); ++a) {
      std::optional<Context> ctx;
      if (bigram_) ctx = Context{p.name, static_cast<int>(a)};
      r.rhs.push_back(intern(inst.arg_types[a], depth - 1, std::move(ctx)));
    }
    out.push_back({p.name, inst.type.to_string(), std::move(r)});
  }
};

}  // namespace

Grammar compile(std::shared_ptr<const Dsl> dsl, const Type& type_request, int max_depth, bool bigram) {
  if (max_depth < 1) throw std::invalid_argument("max_depth must be at least 1");
  if (type_request.final_result().is_arrow()) throw std::invalid_argument("type request must return data");
  Compiler c(dsl, type_request, bigram);
  int start = c.intern(type_request.final_result(), max_depth, std::nullopt);
  c.run();
  return Grammar(std::move(dsl), type_request, std::move(c.nts_), std::move(c.rules_), start);
}

Grammar trim(const Grammar& g) {
  std::vector<NonTerminal> nts;
  for (std::size_t i = 0; i < g.num_nonterminals(); ++i) nts.push_back(g.nonterminal(static_cast<int>(i)));
  std::vector<Rule> rules(g.all_rules().begin(), g.all_rules().end());
  return Grammar(g.dsl_ptr(), g.type_request(), std::move(nts), std::move(rules), g.start());
}

}  // namespace dbs
