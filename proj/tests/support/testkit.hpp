#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "dbs/enumerate.hpp"
#include "dbs/pcfg.hpp"

namespace dbs::testkit {

/// A complete program with its probability and fixed-point score, computed
/// from the rule weights independently of any enumerator.
struct OracleEntry {
  Program program;
  double probability = 0.0;
  Score score = 0;
  std::string key;
};

/// Every program of a finite grammar, by recursive expansion of each rule.
std::vector<OracleEntry> all_programs(const Pcfg& pcfg);

/// all_programs sorted by (score asc, canonical key asc), i.e. the order any
/// loss-optimal enumerator must follow.
std::vector<OracleEntry> sorted_programs(const Pcfg& pcfg);

/// Number of programs derivable from the start symbol.
double program_count(const Grammar& g);

/// Randomly generated small grammar: a random subset of a fixed primitive
/// pool, a random type request and depth, bigram context on odd draws.
struct SmallGrammar {
  std::uint64_t seed = 0;
  std::shared_ptr<const Dsl> dsl;
  Grammar grammar;
  Pcfg pcfg;
  std::size_t programs = 0;
};

/// The first `count` draws (deterministic per `seed`) with between
/// `min_programs` and `max_programs` programs and depth <= 5; weights from random_pcfg(0.7).
std::vector<SmallGrammar> small_grammars(std::size_t count, std::uint64_t seed, std::size_t min_programs = 10,
                                         std::size_t max_programs = 500);

/// The depth-limited toy grammar S -> x | f(S): toy_dsl() has one primitive
/// f: int -> int, and the request int -> int.
std::shared_ptr<const Dsl> toy_dsl();
Pcfg toy_pcfg(int depth);

std::vector<Enumerated> drain(ProgramStream& s, std::size_t limit = SIZE_MAX);

}  // namespace dbs::testkit
