#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "dbs/derivation.hpp"
#include "dbs/eval.hpp"
#include "dbs/grammar_io.hpp"
#include "testkit.hpp"

using namespace dbs;

namespace {

const std::vector<testkit::SmallGrammar>& family() {
  static const auto f = testkit::small_grammars(40, 11);
  return f;
}

Value stub(std::span<const Value>) { return Value::integer(0); }

/// Two programs `a` and `b` with probabilities p and 1 - p.
Pcfg coin(double p) {
  auto dsl = std::make_shared<Dsl>("coin");
  dsl->add("a", "int", stub);
  dsl->add("b", "int", stub);
  const Grammar g = compile(dsl, Type::parse("int"), 1);
  REQUIRE(g.num_rules() == 2);
  return Pcfg(g.with_weights({p, 1.0 - p}));
}

}  // namespace

TEST_CASE("non-terminals are numbered children first with the start last") {
  for (const auto& sg : family()) {
    const Grammar& g = sg.grammar;
    CHECK(g.start() == static_cast<int>(g.num_nonterminals()) - 1);
    for (int nt = 0; nt < static_cast<int>(g.num_nonterminals()); ++nt) {
      CHECK(g.num_rules_of(nt) > 0);
      for (int rid = g.first_rule(nt); rid < g.end_rule(nt); ++rid) {
        CHECK(g.rule(rid).lhs == nt);
        CHECK(g.rule(rid).rhs.size() == g.rule(rid).symbol.arity());
        for (int c : g.rule(rid).rhs) CHECK(c < nt);
      }
    }
  }
}

TEST_CASE("toy grammar has one program per depth") {
  for (int d = 1; d <= 6; ++d) {
    const Pcfg pcfg = testkit::toy_pcfg(d);
    CHECK(testkit::program_count(pcfg.grammar()) == doctest::Approx(d));
    const auto progs = testkit::all_programs(pcfg);
    CHECK(progs.size() == static_cast<std::size_t>(d));
    for (const auto& e : progs) CHECK(e.program.depth() <= static_cast<std::uint32_t>(d));
  }
}

TEST_CASE("a request with no well-typed program is an empty grammar") {
  CHECK_THROWS_AS(compile(testkit::toy_dsl(), Type::parse("int -> bool"), 4), EmptyGrammarError);
  CHECK_THROWS_AS(compile(testkit::toy_dsl(), Type::parse("int -> int"), 0), std::invalid_argument);
}

TEST_CASE("compiled programs are distinct, well typed and within depth") {
  for (const auto& sg : family()) {
    const auto progs = testkit::all_programs(sg.pcfg);
    CHECK(progs.size() == sg.programs);
    std::set<std::string> keys;
    const TypeEnv env = environment_of(sg.grammar.type_request());
    const Type want = sg.grammar.type_request().final_result();
    for (const auto& e : progs) {
      keys.insert(e.key);
      CHECK(infer_type(e.program, env) == want);
    }
    CHECK(keys.size() == progs.size());
  }
}

TEST_CASE("bigram context refines non-terminals without changing the program set") {
  const auto dsl = list_mini();
  const Type req = Type::parse("int list -> int list");
  for (int depth = 2; depth <= 4; ++depth) {
    const Grammar plain = compile(dsl, req, depth, false);
    const Grammar bi = compile(dsl, req, depth, true);
    CHECK(testkit::program_count(plain) == doctest::Approx(testkit::program_count(bi)).epsilon(1e-12));
    CHECK(bi.num_nonterminals() >= plain.num_nonterminals());
    bool any_context = false;
    for (int nt = 0; nt < static_cast<int>(bi.num_nonterminals()); ++nt) {
      any_context = any_context || bi.nonterminal(nt).context.has_value();
    }
    CHECK(any_context);
  }
  const auto a = testkit::all_programs(uniform(compile(dsl, req, 3, false)));
  const auto b = testkit::all_programs(uniform(compile(dsl, req, 3, true)));
  std::set<std::string> ka, kb;
  for (const auto& e : a) ka.insert(e.key);
  for (const auto& e : b) kb.insert(e.key);
  CHECK(ka == kb);
}

TEST_CASE("probabilities and scores agree with the oracle") {
  for (const auto& sg : family()) {
    const auto progs = testkit::sorted_programs(sg.pcfg);
    double total = 0.0;
    for (const auto& e : progs) {
      total += e.probability;
      CHECK(sg.pcfg.probability(e.program) == doctest::Approx(e.probability).epsilon(1e-12));
      const auto s = sg.pcfg.score(e.program);
      REQUIRE(s.has_value());
      CHECK(*s == e.score);
      CHECK(derivation_of(sg.grammar, e.program).has_value());
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    const MaxProb& mp = sg.pcfg.max_prob(sg.grammar.start());
    CHECK(mp.program == progs.front().program);
    CHECK(mp.score == progs.front().score);
  }
}

TEST_CASE("max_prob of every non-terminal is its best program") {
  const auto& sg = family().front();
  const Grammar& g = sg.grammar;
  for (int nt = 0; nt < static_cast<int>(g.num_nonterminals()); ++nt) {
    const double p = sg.pcfg.max_prob(nt).probability;
    CHECK(sg.pcfg.probability(nt, sg.pcfg.max_prob(nt).program) == doctest::Approx(p).epsilon(1e-12));
  }
}

TEST_CASE("underivable programs have probability zero") {
  const Pcfg pcfg = testkit::toy_pcfg(3);
  const auto& f = testkit::toy_dsl()->instantiate("f");
  Program p = Program::variable(0);
  for (int i = 0; i < 3; ++i) p = Program::apply(f, {p});
  CHECK(pcfg.probability(p) == 0.0);
  CHECK_FALSE(pcfg.score(p).has_value());
}

TEST_CASE("score conversion is fixed point") {
  CHECK(score_of(1.0) == 0);
  CHECK(score_of(0.5) == std::llround(std::log(2.0) * kScoreUnit));
  CHECK(probability_of_score(score_of(0.3)) == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("random weights are deterministic and bounded by alpha powers") {
  const Grammar g = compile(list_mini(), Type::parse("int list -> int list"), 4);
  const auto w1 = random_weights(g, 0.7, 5);
  const auto w2 = random_weights(g, 0.7, 5);
  const auto w3 = random_weights(g, 0.7, 6);
  CHECK(w1 == w2);
  CHECK(w1 != w3);
  for (int nt = 0; nt < static_cast<int>(g.num_nonterminals()); ++nt) {
    for (int i = 0; i < g.num_rules_of(nt); ++i) {
      const double w = w1[g.first_rule(nt) + i];
      CHECK(w >= 0.0);
      CHECK(w <= std::pow(0.7, i + 1));
    }
  }
  const Pcfg a = random_pcfg(g, 0.7, 5);
  const Pcfg b = random_pcfg(g, 0.7, 5);
  for (int rid = 0; rid < static_cast<int>(a.grammar().num_rules()); ++rid) {
    CHECK(a.rule_probability(rid) == b.rule_probability(rid));
  }
}

TEST_CASE("square-root transform of a Bernoulli(0.9)") {
  const Pcfg s = sqrt_transform(coin(0.9));
  CHECK(std::abs(s.rule_probability(0) - 0.75) < 1e-12);
  CHECK(std::abs(s.rule_probability(1) - 0.25) < 1e-12);
}

TEST_CASE("square-root transform is proportional to sqrt of each program") {
  for (const auto& sg : family()) {
    const Pcfg s = sqrt_transform(sg.pcfg);
    const auto progs = testkit::all_programs(sg.pcfg);
    double z = 0.0;
    for (const auto& e : progs) z += std::sqrt(e.probability);
    for (const auto& e : progs) {
      CHECK(s.probability(e.program) == doctest::Approx(std::sqrt(e.probability) / z).epsilon(1e-10));
    }
  }
}

TEST_CASE("partition function with unit weights counts programs") {
  const Grammar g = testkit::toy_pcfg(5).grammar();
  const Grammar unit = g.with_weights(std::vector<double>(g.num_rules(), 1.0));
  CHECK(partition_function(unit)[unit.start()] == doctest::Approx(5.0));
  CHECK(partition_function(testkit::toy_pcfg(5).grammar())[g.start()] == doctest::Approx(1.0));
}

TEST_CASE("weights survive a JSON round trip") {
  const Grammar g = compile(list_mini(), Type::parse("int list -> int list"), 4, true);
  const Pcfg pcfg = random_pcfg(g, 0.7, 3);
  const Json j = Json::parse(weights_to_json(pcfg).dump());
  const Pcfg back = attach_weights(g, labeling_from_json(j));
  for (int rid = 0; rid < static_cast<int>(g.num_rules()); ++rid) {
    CHECK(std::abs(back.rule_probability(rid) - pcfg.rule_probability(rid)) < 1e-12);
  }
  const Pcfg again = attach_weights(g, labeling_of(pcfg));
  for (int rid = 0; rid < static_cast<int>(g.num_rules()); ++rid) {
    CHECK(std::abs(again.rule_probability(rid) - pcfg.rule_probability(rid)) < 1e-12);
  }
}

TEST_CASE("rule keys are stable across compilations") {
  const Type req = Type::parse("int -> int list -> int list");
  const Grammar a = compile(list_mini(), req, 4);
  const Grammar b = compile(list_mini(), req, 4);
  REQUIRE(a.num_rules() == b.num_rules());
  std::set<RuleKey> keys;
  for (int rid = 0; rid < static_cast<int>(a.num_rules()); ++rid) {
    CHECK(rule_key(a, rid) == rule_key(b, rid));
    keys.insert(rule_key(a, rid));
  }
  CHECK(keys.size() == a.num_rules());
}

TEST_CASE("malformed labelings are rejected") {
  const Grammar g = compile(list_mini(), Type::parse("int list -> int list"), 3);
  Labeling l = labeling_of(uniform(g));
  SUBCASE("missing rule") {
    l.erase(l.begin());
    CHECK_THROWS_AS(attach_weights(g, l), std::invalid_argument);
  }
  SUBCASE("unknown rule") {
    l[RuleKey{"int list@3", "frobnicate"}] = 1.0;
    CHECK_THROWS_AS(attach_weights(g, l), std::invalid_argument);
  }
  SUBCASE("negative weight") {
    l.begin()->second = -1.0;
    CHECK_THROWS_AS(attach_weights(g, l), std::invalid_argument);
  }
  SUBCASE("zero-mass non-terminal") {
    const RuleKey first = rule_key(g, g.first_rule(g.start()));
    for (auto& [k, w] : l) {
      if (k.lhs == first.lhs) w = 0.0;
    }
    CHECK_THROWS_AS(attach_weights(g, l), std::invalid_argument);
  }
  CHECK_THROWS_AS(labeling_from_json(Json::parse(R"({"lhs": "x"})")), std::invalid_argument);
  CHECK_THROWS_AS(labeling_from_json(Json::parse(R"([{"lhs": "x", "primitive": "y"}])")), std::invalid_argument);
  CHECK_THROWS_AS(
      labeling_from_json(Json::parse(
          R"([{"lhs": "x", "primitive": "y", "weight": 1}, {"lhs": "x", "primitive": "y", "weight": 2}])")),
      std::invalid_argument);
}

TEST_CASE("grammar dump lists every non-terminal") {
  const Pcfg pcfg = uniform(compile(list_mini(), Type::parse("int list -> int"), 3, true));
  const Json j = grammar_to_json(pcfg);
  CHECK(j["nonterminals"].size() == pcfg.grammar().num_nonterminals());
  CHECK(j["type_request"] == "int list -> int");
  CHECK(j["start"] == pcfg.grammar().nonterminal(pcfg.start()).descriptor());
  std::size_t rules = 0;
  for (const auto& nt : j["nonterminals"]) rules += nt["rules"].size();
  CHECK(rules == pcfg.grammar().num_rules());
  const Json m = dsl_manifest(*list_mini());
  CHECK(m["primitives"].size() == list_mini()->primitives().size());
}
