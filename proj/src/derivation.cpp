#include "dbs/derivation.hpp"

#include <algorithm>
#include <stdexcept>

namespace dbs {

void PartialDerivation::expand(const Pcfg& pcfg, int rule_id) {
  const Rule& r = pcfg.grammar().rule(rule_id);
  if (holes.empty() || holes.back() != r.lhs) throw std::logic_error("rule does not expand the leftmost hole");
  holes.pop_back();
  for (auto it = r.rhs.rbegin(); it != r.rhs.rend(); ++it) holes.push_back(*it);
  rules.push_back(rule_id);
  applied += pcfg.rule_score(rule_id);
}

namespace {

Program build_at(const Grammar& g, std::span<const std::int32_t> rules, std::size_t& pos) {
  if (pos >= rules.size()) throw std::invalid_argument("derivation is incomplete");
  const Rule& r = g.rule(rules[pos++]);
  std::vector<Program> args;
  args.reserve(r.rhs.size());
  for (std::size_t i = 0; i < r.rhs.size(); ++i) args.push_back(build_at(g, rules, pos));
  return g.make_program(r, std::move(args));
}

double prob_at(const Grammar& g, std::span<const std::int32_t> rules, std::size_t& pos) {
  const Rule& r = g.rule(rules[pos++]);
  double q = r.weight;
  for (std::size_t i = 0; i < r.rhs.size(); ++i) q *= prob_at(g, rules, pos);
  return q;
}

void print_at(const Grammar& g, const PartialDerivation& d, std::size_t& pos, std::size_t& hole, std::string& out) {
  if (pos >= d.rules.size()) {
    // Remaining open positions are the holes, leftmost first.
    out += "{" + g.nonterminal(d.holes[d.holes.size() - 1 - hole++]).descriptor() + "}";
    return;
  }
  const Rule& r = g.rule(d.rules[pos++]);
  const std::string name = r.symbol.kind == Symbol::Kind::Variable ? r.symbol.label() : r.symbol.prim->name();
  if (r.rhs.empty()) {
    out += name;
    return;
  }
  out += "(" + name;
  for (std::size_t i = 0; i < r.rhs.size(); ++i) {
    out += " ";
    print_at(g, d, pos, hole, out);
  }
  out += ")";
}

}  // namespace

Program build_program(const Grammar& g, std::span<const std::int32_t> rules) {
  std::size_t pos = 0;
  Program p = build_at(g, rules, pos);
  if (pos != rules.size()) throw std::invalid_argument("trailing rules in derivation");
  return p;
}

namespace {

bool derive(const Grammar& g, const Program& p, int nt, std::vector<std::int32_t>& out) {
  for (int rid = g.first_rule(nt); rid < g.end_rule(nt); ++rid) {
    const Rule& r = g.rule(rid);
    if (!r.symbol.matches(p) || p.args().size() != r.rhs.size()) continue;
    const std::size_t mark = out.size();
    out.push_back(rid);
    bool ok = true;
    for (std::size_t i = 0; i < r.rhs.size() && ok; ++i) ok = derive(g, p.args()[i], r.rhs[i], out);
    if (ok) return true;
    out.resize(mark);
  }
  return false;
}

}  // namespace

std::optional<std::vector<std::int32_t>> derivation_of(const Grammar& g, const Program& p, int nt) {
  std::vector<std::int32_t> out;
  if (!derive(g, p, nt < 0 ? g.start() : nt, out)) return std::nullopt;
  return out;
}

double derivation_probability(const Grammar& g, std::span<const std::int32_t> rules) {
  std::size_t pos = 0;
  return prob_at(g, rules, pos);
}

std::string partial_to_string(const Grammar& g, const PartialDerivation& d) {
  std::string out;
  std::size_t pos = 0, hole = 0;
  print_at(g, d, pos, hole, out);
  return out;
}

int compare_partials(const Grammar& g, std::span<const std::int32_t> a, std::span<const std::int32_t> b) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] == b[i]) continue;
    std::uint32_t ra = g.symbol_rank(a[i]), rb = g.symbol_rank(b[i]);
    if (ra != rb) return ra < rb ? -1 : 1;
  }
  if (a.size() == b.size()) return 0;
  return a.size() < b.size() ? -1 : 1;
}

std::vector<Score> worst_scores(const Pcfg& pcfg) {
  const Grammar& g = pcfg.grammar();
  std::vector<Score> worst(g.num_nonterminals(), 0);
  for (int nt = 0; nt < static_cast<int>(g.num_nonterminals()); ++nt) {
    Score w = 0;
    for (int rid = g.first_rule(nt); rid < g.end_rule(nt); ++rid) {
      Score s = pcfg.rule_score(rid);
      for (int c : g.rule(rid).rhs) s += worst[c];
      w = std::max(w, s);
    }
    worst[nt] = w;
  }
  return worst;
}

}  // namespace dbs
