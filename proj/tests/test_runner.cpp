#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "dbs/runner.hpp"
#include "testkit.hpp"

using namespace dbs;

namespace {

const std::vector<testkit::SmallGrammar>& family() {
  static const auto f = testkit::small_grammars(30, 77, 8);
  return f;
}

AlgorithmSpec spec_of(Algorithm a) {
  AlgorithmSpec s;
  s.kind = a;
  return s;
}

RunOptions recording() {
  RunOptions o;
  o.record_programs = true;
  o.tie_check = true;
  return o;
}

const Algorithm kEnumerators[] = {Algorithm::Heap, Algorithm::AStar, Algorithm::Threshold, Algorithm::SortAdd,
                                  Algorithm::Beam, Algorithm::Bfs,   Algorithm::Dfs};

}  // namespace

TEST_CASE("algorithm names round trip") {
  for (Algorithm a : all_algorithms()) CHECK(parse_algorithm(to_string(a)) == a);
  CHECK_FALSE(parse_algorithm("quantum").has_value());
  CHECK(is_sampler(Algorithm::SqrtSample));
  CHECK_FALSE(is_sampler(Algorithm::Heap));
}

TEST_CASE("a single worker runs the stream unchanged") {
  const auto& sg = family()[0];
  const RunReport r = run_parallel(sg.pcfg, spec_of(Algorithm::Heap), 1, {}, SearchBudget{}, recording());
  REQUIRE(r.workers.size() == 1);
  HeapSearch h(sg.pcfg);
  const auto want = testkit::drain(h);
  REQUIRE(r.workers[0].programs.size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i) CHECK(r.workers[0].programs[i] == want[i].program);
  CHECK(r.workers[0].exhausted);
  CHECK(r.generated == want.size());
  CHECK(r.distinct == want.size());
  CHECK(r.cumulative_probability == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.partition_quality == 1.0);
}

TEST_CASE("four workers split the space without overlap") {
  for (const auto& sg : family()) {
    if (sg.programs < 4) continue;
    std::set<std::string> want;
    for (const auto& e : testkit::all_programs(sg.pcfg)) want.insert(e.key);
    for (Algorithm a : kEnumerators) {
      CAPTURE(to_string(a));
      CAPTURE(sg.seed);
      const RunReport r = run_parallel(sg.pcfg, spec_of(a), 4, {}, SearchBudget{}, recording());
      REQUIRE(r.workers.size() == 4);
      std::set<std::string> seen;
      std::size_t total = 0;
      for (const auto& w : r.workers) {
        CHECK(w.exhausted);
        for (const auto& p : w.programs) {
          seen.insert(canonical_key(p));
          ++total;
        }
      }
      CHECK(total == want.size());
      CHECK(seen == want);
      CHECK(r.distinct == want.size());
      CHECK(r.cumulative_probability == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("search stops on the first satisfying program") {
  const auto& sg = family()[2];
  const auto order = testkit::sorted_programs(sg.pcfg);
  const std::size_t idx = order.size() / 2;
  const Program target = order[idx].program;
  const PredicateFactory pred = [&](std::size_t) { return [target](const Program& p) { return p == target; }; };
  SUBCASE("one worker") {
    const RunReport r = run_parallel(sg.pcfg, spec_of(Algorithm::Heap), 1, pred, SearchBudget{});
    REQUIRE(r.solution.has_value());
    CHECK(*r.solution == target);
    CHECK(r.solved_by == std::optional<std::size_t>(0));
    CHECK(r.generated == idx + 1);
  }
  SUBCASE("three workers") {
    const RunReport r = run_parallel(sg.pcfg, spec_of(Algorithm::AStar), 3, pred, SearchBudget{});
    REQUIRE(r.solution.has_value());
    CHECK(*r.solution == target);
    REQUIRE(r.solved_by.has_value());
    CHECK(r.workers[*r.solved_by].solution.has_value());
  }
}

TEST_CASE("program budgets apply per worker") {
  const Grammar g = compile(list_mini(), Type::parse("int list -> int list"), 5);
  const Pcfg pcfg = random_pcfg(g, 0.7, 2);
  SearchBudget b;
  b.max_programs = 500;
  const RunReport r = run_parallel(pcfg, spec_of(Algorithm::Heap), 2, {}, b);
  for (const auto& w : r.workers) CHECK(w.generated == 500);
  CHECK(r.generated == 1000);
  CHECK_FALSE(r.solution.has_value());
}

TEST_CASE("wall-clock budget stops an endless sampler") {
  const Pcfg pcfg = testkit::toy_pcfg(8);
  SearchBudget b;
  b.wall_time = 0.2;
  RunOptions o;
  o.naive_parallel = true;
  const RunReport r = run_parallel(pcfg, spec_of(Algorithm::SqrtSample), 2, {}, b, o);
  CHECK(r.workers.size() == 2);
  CHECK(r.search_seconds < 5.0);
  CHECK(r.generated > r.distinct);
  CHECK(r.distinct == 8);
  CHECK(r.cumulative_probability == doctest::Approx(1.0));
}

TEST_CASE("sampler curves are monotone") {
  const Grammar g = compile(list_mini(), Type::parse("int list -> int list"), 5);
  const Pcfg pcfg = random_pcfg(g, 0.7, 4);
  SearchBudget b;
  b.max_programs = 20000;
  RunOptions o;
  o.cadence_seconds = 0.001;
  const RunReport r = run_parallel(pcfg, spec_of(Algorithm::SqrtSample), 2, {}, b, o);
  REQUIRE(!r.curve.empty());
  for (std::size_t i = 1; i < r.curve.size(); ++i) {
    CHECK(r.curve[i].t_seconds >= r.curve[i - 1].t_seconds);
    CHECK(r.curve[i].generated >= r.curve[i - 1].generated);
    CHECK(r.curve[i].distinct >= r.curve[i - 1].distinct);
    CHECK(r.curve[i].cumulative_probability >= r.curve[i - 1].cumulative_probability);
  }
  CHECK(r.curve.back().cumulative_probability <= 1.0 + 1e-9);
  CHECK(r.distinct <= r.generated);
}

TEST_CASE("worker checkpoints follow the one-two-five sequence") {
  const Grammar g = compile(list_mini(), Type::parse("int list -> int list"), 5);
  SearchBudget b;
  b.max_programs = 1000;
  const RunReport r = run_parallel(uniform(g), spec_of(Algorithm::Heap), 1, {}, b);
  std::vector<std::uint64_t> at;
  for (const auto& c : r.workers[0].checkpoints) at.push_back(c.generated);
  CHECK(at == std::vector<std::uint64_t>{1, 2, 5, 10, 20, 50, 100, 200, 500, 1000});
  for (std::size_t i = 1; i < r.workers[0].checkpoints.size(); ++i) {
    CHECK(r.workers[0].checkpoints[i].cumulative_probability >= r.workers[0].checkpoints[i - 1].cumulative_probability);
  }
}

TEST_CASE("best-first search covers more mass than depth-first at every prefix") {
  const Grammar g = compile(list_mini(), Type::parse("int list -> int list"), 5);
  const Pcfg pcfg = random_pcfg(g, 0.7, 9);
  SearchBudget b;
  b.max_programs = 5000;
  const RunReport heap = run_parallel(pcfg, spec_of(Algorithm::Heap), 1, {}, b);
  const RunReport dfs = run_parallel(pcfg, spec_of(Algorithm::Dfs), 1, {}, b);
  const auto& hc = heap.workers[0].checkpoints;
  const auto& dc = dfs.workers[0].checkpoints;
  REQUIRE(hc.size() == dc.size());
  for (std::size_t i = 0; i < hc.size(); ++i) {
    CHECK(hc[i].generated == dc[i].generated);
    CHECK(hc[i].cumulative_probability >= dc[i].cumulative_probability);
  }
  CHECK(heap.cumulative_probability > dfs.cumulative_probability);
}

TEST_CASE("runs with a fixed program budget are deterministic") {
  const Grammar g = compile(list_mini(), Type::parse("int -> int list -> int list"), 4);
  const Pcfg pcfg = random_pcfg(g, 0.7, 1);
  SearchBudget b;
  b.max_programs = 300;
  for (Algorithm a : {Algorithm::Heap, Algorithm::Beam, Algorithm::SqrtSample}) {
    const RunReport x = run_parallel(pcfg, spec_of(a), 3, {}, b, recording());
    const RunReport y = run_parallel(pcfg, spec_of(a), 3, {}, b, recording());
    for (std::size_t w = 0; w < 3; ++w) CHECK(x.workers[w].programs == y.workers[w].programs);
    CHECK(x.cumulative_probability == y.cumulative_probability);
  }
}
