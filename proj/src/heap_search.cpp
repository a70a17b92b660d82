#include <algorithm>
#include <unordered_set>

#include "dbs/enumerate.hpp"

namespace dbs {

namespace {

struct Output {
  Program program;
  Score score;
  double prob;
};

/// A candidate f(x_1..x_k) of one non-terminal. The rank of each x_i among
/// the outputs of its own non-terminal lives in the record's pool slice.
struct Entry {
  Score score;
  double prob;
  std::uint32_t record;
};

}  // namespace

struct HeapSearch::State {
  struct Nt;

  struct SeenHash {
    const Nt* nt;
    std::size_t operator()(std::uint32_t rec) const;
  };
  struct SeenEq {
    const Nt* nt;
    bool operator()(std::uint32_t a, std::uint32_t b) const;
  };

  struct Nt {
    bool seeded = false;
    std::vector<Entry> heap;
    std::vector<std::int32_t> record_rule;
    std::vector<std::uint32_t> record_offset;
    std::vector<std::uint32_t> pool;
    std::vector<Output> outputs;
    /// Records currently in the heap.
    std::unordered_set<std::uint32_t, SeenHash, SeenEq> seen;

    const std::uint32_t* ranks(std::uint32_t rec) const { return pool.data() + record_offset[rec]; }
  };

  Pcfg pcfg;
  const Grammar& g;
  std::vector<Nt> nts;

  explicit State(Pcfg p) : pcfg(std::move(p)), g(pcfg.grammar()), nts(g.num_nonterminals()) {
    for (auto& nt : nts) {
      nt.seen = std::unordered_set<std::uint32_t, SeenHash, SeenEq>(16, SeenHash{&nt}, SeenEq{&nt});
    }
  }

  std::size_t arity(const Nt& nt, std::uint32_t rec) const { return g.rule(nt.record_rule[rec]).rhs.size(); }
  const Output* get(int t, std::uint32_t k, Stats& stats);
  void seed(int t, Stats& stats);
  void push(int t, std::int32_t rule, const std::uint32_t* ranks, Stats& stats, std::uint64_t& ops);
  bool less(const Nt& nt, const Entry& a, const Entry& b) const;
};

std::size_t HeapSearch::State::SeenHash::operator()(std::uint32_t rec) const {
  std::size_t h = static_cast<std::size_t>(nt->record_rule[rec]) * 0x9e3779b97f4a7c15ULL;
  const std::uint32_t* r = nt->ranks(rec);
  const std::uint32_t end = rec + 1 < nt->record_offset.size() ? nt->record_offset[rec + 1]
                                                                : static_cast<std::uint32_t>(nt->pool.size());
  for (std::uint32_t i = 0; i < end - nt->record_offset[rec]; ++i) {
    h ^= r[i] + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

bool HeapSearch::State::SeenEq::operator()(std::uint32_t a, std::uint32_t b) const {
  if (nt->record_rule[a] != nt->record_rule[b]) return false;
  const std::uint32_t end_a = a + 1 < nt->record_offset.size() ? nt->record_offset[a + 1]
                                                                : static_cast<std::uint32_t>(nt->pool.size());
  const std::uint32_t n = end_a - nt->record_offset[a];
  return std::equal(nt->ranks(a), nt->ranks(a) + n, nt->ranks(b));
}

bool HeapSearch::State::less(const Nt& nt, const Entry& a, const Entry& b) const {
  if (a.score != b.score) return a.score < b.score;
  const std::int32_t rule_a = nt.record_rule[a.record], rule_b = nt.record_rule[b.record];
  std::uint32_t ra = g.symbol_rank(rule_a), rb = g.symbol_rank(rule_b);
  if (ra != rb) return ra < rb;
  const auto& rhs_a = g.rule(rule_a).rhs;
  const auto& rhs_b = g.rule(rule_b).rhs;
  const std::uint32_t* ka = nt.ranks(a.record);
  const std::uint32_t* kb = nt.ranks(b.record);
  const std::size_t n = std::min(rhs_a.size(), rhs_b.size());
  for (std::size_t i = 0; i < n; ++i) {
    const Program& pa = nts[rhs_a[i]].outputs[ka[i]].program;
    const Program& pb = nts[rhs_b[i]].outputs[kb[i]].program;
    int c = compare_programs(pa, pb);
    if (c) return c < 0;
  }
  return rhs_a.size() < rhs_b.size();
}

void HeapSearch::State::push(int t, std::int32_t rule, const std::uint32_t* ranks, Stats& stats, std::uint64_t& ops) {
  Nt& nt = nts[t];
  const Rule& r = g.rule(rule);
  const auto rec = static_cast<std::uint32_t>(nt.record_rule.size());
  const auto off = static_cast<std::uint32_t>(nt.pool.size());
  nt.record_rule.push_back(rule);
  nt.record_offset.push_back(off);
  nt.pool.insert(nt.pool.end(), ranks, ranks + r.rhs.size());
  if (!nt.seen.insert(rec).second) {
    nt.pool.resize(off);
    nt.record_rule.pop_back();
    nt.record_offset.pop_back();
    return;
  }
  Score s = pcfg.rule_score(rule);
  double p = r.weight;
  for (std::size_t i = 0; i < r.rhs.size(); ++i) {
    const Output& o = nts[r.rhs[i]].outputs[ranks[i]];
    s += o.score;
    p *= o.prob;
  }
  nt.heap.push_back(Entry{s, p, rec});
  std::push_heap(nt.heap.begin(), nt.heap.end(), [&](const Entry& a, const Entry& b) { return less(nt, b, a); });
  ++stats.pushes;
  ++stats.heap_entries;
  ++ops;
}

void HeapSearch::State::seed(int t, Stats& stats) {
  nts[t].seeded = true;
  std::uint64_t ops = 0;
  std::vector<std::uint32_t> zeros(g.max_arity() + 1, 0);
  for (int rid = g.first_rule(t); rid < g.end_rule(t); ++rid) {
    for (int c : g.rule(rid).rhs) get(c, 0, stats);
    push(t, rid, zeros.data(), stats, ops);
  }
}

const Output* HeapSearch::State::get(int t, std::uint32_t k, Stats& stats) {
  Nt& nt = nts[t];
  if (!nt.seeded) seed(t, stats);
  std::vector<std::uint32_t> rk;
  while (nt.outputs.size() <= k) {
    if (nt.heap.empty()) return nullptr;
    std::uint64_t ops = 1;
    ++stats.computed_queries;
    ++stats.pops;
    --stats.heap_entries;
    std::pop_heap(nt.heap.begin(), nt.heap.end(), [&](const Entry& a, const Entry& b) { return less(nt, b, a); });
    const Entry e = nt.heap.back();
    nt.heap.pop_back();
    // Every predecessor of a popped candidate was popped earlier, so nothing
    // can propose it again.
    nt.seen.erase(e.record);

    const std::int32_t rule = nt.record_rule[e.record];
    const Rule& r = g.rule(rule);
    rk.assign(nt.ranks(e.record), nt.ranks(e.record) + r.rhs.size());

    std::vector<Program> args;
    args.reserve(r.rhs.size());
    for (std::size_t i = 0; i < r.rhs.size(); ++i) args.push_back(nts[r.rhs[i]].outputs[rk[i]].program);
    nt.outputs.push_back(Output{g.make_program(r, std::move(args)), e.score, e.prob});

    for (std::size_t i = 0; i < r.rhs.size(); ++i) {
      if (!get(r.rhs[i], rk[i] + 1, stats)) continue;
      ++rk[i];
      push(t, rule, rk.data(), stats, ops);
      --rk[i];
    }
    stats.max_ops_per_query = std::max(stats.max_ops_per_query, ops);
  }
  return &nt.outputs[k];
}

HeapSearch::HeapSearch(Pcfg pcfg) : state_(std::make_unique<State>(std::move(pcfg))) {}
HeapSearch::~HeapSearch() = default;

std::optional<Enumerated> HeapSearch::next() {
  const Output* o = state_->get(state_->pcfg.start(), yielded_, stats_);
  if (!o) return std::nullopt;
  ++yielded_;
  return Enumerated{o->program, o->prob};
}

}  // namespace dbs
