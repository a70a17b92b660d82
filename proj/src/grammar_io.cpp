#include "dbs/grammar_io.hpp"

#include <fstream>
#include <stdexcept>

namespace dbs {

Json weights_to_json(const Pcfg& pcfg) {
  Json out = Json::array();
  const Grammar& g = pcfg.grammar();
  for (int rid = 0; rid < static_cast<int>(g.num_rules()); ++rid) {
    RuleKey k = rule_key(g, rid);
    out.push_back({{"lhs", k.lhs}, {"primitive", k.symbol}, {"weight", g.rule(rid).weight}});
  }
  return out;
}

Labeling labeling_from_json(const Json& j) {
  if (!j.is_array()) throw std::invalid_argument("weights file must be a JSON array of {lhs, primitive, weight}");
  Labeling out;
  for (const auto& rec : j) {
    if (!rec.is_object() || !rec.contains("lhs") || !rec.contains("primitive") || !rec.contains("weight") ||
        !rec["lhs"].is_string() || !rec["primitive"].is_string() || !rec["weight"].is_number()) {
      throw std::invalid_argument("malformed weight record: " + rec.dump());
    }
    RuleKey k{rec["lhs"].get<std::string>(), rec["primitive"].get<std::string>()};
    if (!out.emplace(k, rec["weight"].get<double>()).second) {
      throw std::invalid_argument("duplicate weight for rule " + k.lhs + " -> " + k.symbol);
    }
  }
  return out;
}

Json grammar_to_json(const Pcfg& pcfg) {
  const Grammar& g = pcfg.grammar();
  Json nts = Json::array();
  for (int nt = 0; nt < static_cast<int>(g.num_nonterminals()); ++nt) {
    const NonTerminal& n = g.nonterminal(nt);
    Json rules = Json::array();
    for (int rid = g.first_rule(nt); rid < g.end_rule(nt); ++rid) {
      const Rule& r = g.rule(rid);
      Json rhs = Json::array();
      for (int c : r.rhs) rhs.push_back(g.nonterminal(c).descriptor());
      rules.push_back({{"primitive", r.symbol.label()}, {"rhs", rhs}, {"weight", r.weight}});
    }
    Json entry = {{"id", nt},
                  {"descriptor", n.descriptor()},
                  {"type", n.type.to_string()},
                  {"depth", n.depth},
                  {"rules", rules},
                  {"max_program", pcfg.max_prob(nt).program.to_string()},
                  {"max_probability", pcfg.max_prob(nt).probability}};
    if (n.context) entry["context"] = {{"parent", n.context->parent}, {"arg", n.context->arg}};
    nts.push_back(std::move(entry));
  }
  return {{"dsl", g.dsl().name()},
          {"type_request", g.type_request().to_string()},
          {"start", g.nonterminal(g.start()).descriptor()},
          {"nonterminals", nts}};
}

Json dsl_manifest(const Dsl& dsl) {
  Json prims = Json::array();
  for (const auto& p : dsl.primitives()) {
    prims.push_back({{"name", p->name},
                     {"signature", p->signature.to_string()},
                     {"arity", p->arity},
                     {"kind", p->kind == PrimitiveKind::LambdaAtom ? "lambda-atom" : "function"}});
  }
  return {{"name", dsl.name()}, {"max_type_size", dsl.max_type_size()}, {"primitives", prims}};
}

Json partition_to_json(const Pcfg& pcfg, const Partition& partition) {
  const Grammar& g = pcfg.grammar();
  Json splits = Json::array();
  for (const Split& s : partition.splits) {
    Json prefixes = Json::array();
    for (const Prefix& p : s.prefixes) prefixes.push_back({{"program", partial_to_string(g, p.d)}, {"mass", p.mass}});
    splits.push_back({{"mass", s.mass}, {"prefixes", prefixes}});
  }
  return {{"k", partition.splits.size()},
          {"quality", partition.quality},
          {"refinements", partition.refinements},
          {"budget_exhausted", partition.budget_exhausted},
          {"splits", splits}};
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw std::invalid_argument("malformed JSON in " + path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write " + path);
  out << j.dump(2) << "\n";
}

}  // namespace dbs
