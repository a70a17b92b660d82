#include "dbs/pcfg.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

#include "dbs/rng.hpp"

namespace dbs {

Score score_of(double probability) { return std::llround(-std::log(probability) * kScoreUnit); }

double probability_of_score(Score s) { return std::exp(-static_cast<double>(s) / kScoreUnit); }

Pcfg::Pcfg(Grammar normalized) {
  const Grammar& g = normalized;
  for (std::size_t nt = 0; nt < g.num_nonterminals(); ++nt) {
    double sum = 0.0;
    for (const Rule& r : g.rules_of(static_cast<int>(nt))) {
      if (!(r.weight > 0.0) || r.weight > 1.0 + 1e-12) {
        throw std::invalid_argument("rule weight outside (0,1] at " + g.nonterminal(static_cast<int>(nt)).descriptor());
      }
      sum += r.weight;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw std::invalid_argument("weights of " + g.nonterminal(static_cast<int>(nt)).descriptor() + " sum to " +
                                  std::to_string(sum));
    }
  }
  auto tables = std::make_shared<Tables>();
  tables->rule_scores.reserve(g.num_rules());
  for (const Rule& r : g.all_rules()) tables->rule_scores.push_back(score_of(r.weight));

  // Children precede parents in id order.
  tables->max_prob.resize(g.num_nonterminals());
  for (int nt = 0; nt < static_cast<int>(g.num_nonterminals()); ++nt) {
    MaxProb best;
    bool have = false;
    for (int rid = g.first_rule(nt); rid < g.end_rule(nt); ++rid) {
      const Rule& r = g.rule(rid);
      Score s = tables->rule_scores[rid];
      double p = r.weight;
      std::vector<Program> args;
      args.reserve(r.rhs.size());
      for (int c : r.rhs) {
        const MaxProb& m = tables->max_prob[c];
        s += m.score;
        p *= m.probability;
        args.push_back(m.program);
      }
      if (have && s > best.score) continue;
      Program prog = g.make_program(r, std::move(args));
      if (!have || s < best.score || compare_programs(prog, best.program) < 0) {
        best = MaxProb{std::move(prog), p, s};
        have = true;
      }
    }
    tables->max_prob[nt] = std::move(best);
  }
  grammar_ = std::make_shared<const Grammar>(std::move(normalized));
  tables_ = std::move(tables);
}

Pcfg Pcfg::from_weighted(const Grammar& g) {
  std::vector<NonTerminal> nts;
  for (std::size_t i = 0; i < g.num_nonterminals(); ++i) nts.push_back(g.nonterminal(static_cast<int>(i)));
  std::vector<Rule> rules;
  for (int nt = 0; nt < static_cast<int>(g.num_nonterminals()); ++nt) {
    double sum = 0.0;
    for (const Rule& r : g.rules_of(nt)) {
      if (r.weight < 0.0 || !std::isfinite(r.weight)) {
        throw std::invalid_argument("invalid weight for " + r.symbol.label() + " at " + nts[nt].descriptor());
      }
      sum += r.weight;
    }
    if (!(sum > 0.0)) throw std::invalid_argument("weights of " + nts[nt].descriptor() + " sum to 0");
    for (const Rule& r : g.rules_of(nt)) {
      if (r.weight == 0.0) continue;
      Rule copy = r;
      copy.weight = r.weight / sum;
      rules.push_back(std::move(copy));
    }
  }
  return Pcfg(Grammar(g.dsl_ptr(), g.type_request(), std::move(nts), std::move(rules), g.start()));
}

double Pcfg::probability(int nt, const Program& p) const {
  const Grammar& g = *grammar_;
  double total = 0.0;
  for (int rid = g.first_rule(nt); rid < g.end_rule(nt); ++rid) {
    const Rule& r = g.rule(rid);
    if (!r.symbol.matches(p) || p.args().size() != r.rhs.size()) continue;
    double q = r.weight;
    for (std::size_t i = 0; i < r.rhs.size() && q > 0.0; ++i) q *= probability(r.rhs[i], p.args()[i]);
    total += q;
  }
  return total;
}

double Pcfg::probability(const Program& p) const { return probability(start(), p); }

namespace {

std::optional<Score> score_at(const Pcfg& pcfg, int nt, const Program& p) {
  const Grammar& g = pcfg.grammar();
  for (int rid = g.first_rule(nt); rid < g.end_rule(nt); ++rid) {
    const Rule& r = g.rule(rid);
    if (!r.symbol.matches(p) || p.args().size() != r.rhs.size()) continue;
    Score s = pcfg.rule_score(rid);
    bool ok = true;
    for (std::size_t i = 0; i < r.rhs.size() && ok; ++i) {
      auto c = score_at(pcfg, r.rhs[i], p.args()[i]);
      if (c) s += *c;
      else ok = false;
    }
    if (ok) return s;
  }
  return std::nullopt;
}

}  // namespace

std::optional<Score> Pcfg::score(const Program& p) const { return score_at(*this, start(), p); }

std::vector<double> partition_function(const Grammar& g) {
  std::vector<double> z(g.num_nonterminals(), 0.0);
  for (int nt = 0; nt < static_cast<int>(g.num_nonterminals()); ++nt) {
    double sum = 0.0;
    for (const Rule& r : g.rules_of(nt)) {
      double term = r.weight;
      for (int c : r.rhs) term *= z[c];
      sum += term;
    }
    z[nt] = sum;
  }
  return z;
}

Pcfg power_transform(const Pcfg& pcfg, double gamma) {
  const Grammar& g = pcfg.grammar();
  std::vector<double> powered;
  powered.reserve(g.num_rules());
  for (const Rule& r : g.all_rules()) powered.push_back(std::pow(r.weight, gamma));
  Grammar wg = g.with_weights(powered);
  auto z = partition_function(wg);
  std::vector<double> w(g.num_rules());
  for (int rid = 0; rid < static_cast<int>(g.num_rules()); ++rid) {
    double x = powered[rid];
    for (int c : g.rule(rid).rhs) x *= z[c];
    w[rid] = x;
  }
  // Per-non-terminal renormalization divides by Z'(lhs) exactly.
  return Pcfg::from_weighted(g.with_weights(std::move(w)));
}

Pcfg sqrt_transform(const Pcfg& pcfg) { return power_transform(pcfg, 0.5); }

RuleKey rule_key(const Grammar& g, int rule_id) {
  const Rule& r = g.rule(rule_id);
  return RuleKey{g.nonterminal(r.lhs).descriptor(), r.symbol.label()};
}

Pcfg attach_weights(const Grammar& g, const Labeling& labeling) {
  std::vector<double> w(g.num_rules());
  std::set<RuleKey> used;
  for (int rid = 0; rid < static_cast<int>(g.num_rules()); ++rid) {
    RuleKey k = rule_key(g, rid);
    auto it = labeling.find(k);
    if (it == labeling.end()) throw std::invalid_argument("no weight for rule " + k.lhs + " -> " + k.symbol);
    w[rid] = it->second;
    used.insert(std::move(k));
  }
  for (const auto& [k, v] : labeling) {
    if (!used.count(k)) throw std::invalid_argument("unknown rule " + k.lhs + " -> " + k.symbol);
  }
  return Pcfg::from_weighted(g.with_weights(std::move(w)));
}

Labeling labeling_of(const Pcfg& pcfg) {
  Labeling out;
  const Grammar& g = pcfg.grammar();
  for (int rid = 0; rid < static_cast<int>(g.num_rules()); ++rid) out.emplace(rule_key(g, rid), g.rule(rid).weight);
  return out;
}

Pcfg uniform(const Grammar& g) {
  return Pcfg::from_weighted(g.with_weights(std::vector<double>(g.num_rules(), 1.0)));
}

std::vector<double> random_weights(const Grammar& g, double alpha, std::uint64_t seed) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0,1]");
  Rng rng(seed);
  std::vector<double> w(g.num_rules());
  for (int nt = 0; nt < static_cast<int>(g.num_nonterminals()); ++nt) {
    while (true) {
      double sum = 0.0, scale = 1.0;
      for (int rid = g.first_rule(nt); rid < g.end_rule(nt); ++rid) {
        scale *= alpha;
        w[rid] = rng.uniform() * scale;
        sum += w[rid];
      }
      if (sum > 0.0) break;
    }
  }
  return w;
}

Pcfg random_pcfg(const Grammar& g, double alpha, std::uint64_t seed) {
  return Pcfg::from_weighted(g.with_weights(random_weights(g, alpha, seed)));
}

}  // namespace dbs
