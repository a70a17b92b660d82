#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_set>

#include "dbs/enumerate.hpp"

namespace dbs {

namespace {

/// Resumable leftmost depth-first walk over partial derivations. `admit`
/// decides, before a rule is applied to the leftmost hole, whether that
/// subtree is explored.
class DfsEngine {
 public:
  explicit DfsEngine(const Pcfg& pcfg) : pcfg_(pcfg), g_(pcfg.grammar()) {}

  void reset() {
    frames_.clear();
    d_ = PartialDerivation::start_of(g_);
    hole_best_ = pcfg_.max_prob(g_.start()).score;
    started_ = false;
  }

  Score bound_after(int rid) const {
    Score b = d_.applied + pcfg_.rule_score(rid) + hole_best_ - pcfg_.max_prob(d_.holes.back()).score;
    for (int c : g_.rule(rid).rhs) b += pcfg_.max_prob(c).score;
    return b;
  }
  /// Applied nodes plus open holes after applying `rid`.
  std::size_t size_after(int rid) const { return d_.rules.size() + d_.holes.size() + g_.rule(rid).rhs.size(); }
  const PartialDerivation& current() const { return d_; }

  template <class Admit>
  bool advance(Admit&& admit) {
    if (!started_) {
      started_ = true;
      frames_.push_back(Frame{g_.start(), g_.first_rule(g_.start()), false});
    }
    while (!frames_.empty()) {
      Frame& f = frames_.back();
      if (f.applied) {
        undo();
        f.applied = false;
      }
      while (f.cursor < g_.end_rule(f.hole)) {
        int rid = f.cursor++;
        if (admit(rid)) {
          apply(rid);
          f.applied = true;
          break;
        }
      }
      if (!f.applied) {
        frames_.pop_back();
        continue;
      }
      if (d_.complete()) return true;
      int h = d_.holes.back();
      frames_.push_back(Frame{h, g_.first_rule(h), false});
    }
    return false;
  }

 private:
  struct Frame {
    int hole;
    int cursor;
    bool applied;
  };

  void apply(int rid) {
    hole_best_ -= pcfg_.max_prob(d_.holes.back()).score;
    for (int c : g_.rule(rid).rhs) hole_best_ += pcfg_.max_prob(c).score;
    d_.expand(pcfg_, rid);
  }

  void undo() {
    const int rid = d_.rules.back();
    const Rule& r = g_.rule(rid);
    d_.rules.pop_back();
    for (std::size_t i = 0; i < r.rhs.size(); ++i) {
      hole_best_ -= pcfg_.max_prob(d_.holes.back()).score;
      d_.holes.pop_back();
    }
    d_.holes.push_back(r.lhs);
    hole_best_ += pcfg_.max_prob(r.lhs).score;
    d_.applied -= pcfg_.rule_score(rid);
  }

  const Pcfg& pcfg_;
  const Grammar& g_;
  PartialDerivation d_;
  Score hole_best_ = 0;
  std::vector<Frame> frames_;
  bool started_ = false;
};

Enumerated emit(const Grammar& g, const PartialDerivation& d) {
  return Enumerated{build_program(g, d.rules), derivation_probability(g, d.rules)};
}

std::string derivation_key(const PartialDerivation& d) {
  return std::string(reinterpret_cast<const char*>(d.rules.data()), d.rules.size() * sizeof(std::int32_t));
}

}  // namespace

// Threshold ------------------------------------------------------------------

struct ThresholdSearch::State {
  /// Slack absorbing rounding between a probability and its score.
  static constexpr Score kSlack = 64;

  Pcfg pcfg;
  DfsEngine dfs;
  Score first_cutoff;
  Score delta;
  Score worst;
  int iteration = 0;
  bool done = false;

  State(Pcfg p, const ThresholdOptions& opt)
      : pcfg(std::move(p)), dfs(pcfg), worst(worst_scores(pcfg)[pcfg.start()]) {
    if (!(opt.scale > 0.0 && opt.scale < 1.0)) throw std::invalid_argument("threshold scale must lie in (0,1)");
    first_cutoff = opt.initial ? score_of(*opt.initial) : pcfg.max_prob(pcfg.start()).score;
    delta = std::max<Score>(1, score_of(opt.scale));
    dfs.reset();
  }

  Score cutoff(int j) const { return first_cutoff + j * delta + kSlack; }
};

ThresholdSearch::ThresholdSearch(Pcfg pcfg, ThresholdOptions opt)
    : state_(std::make_unique<State>(std::move(pcfg), opt)) {}
ThresholdSearch::~ThresholdSearch() = default;
int ThresholdSearch::iteration() const { return state_->iteration; }

std::optional<Enumerated> ThresholdSearch::next() {
  State& s = *state_;
  while (!s.done) {
    const Score hi = s.cutoff(s.iteration);
    const Score lo = s.iteration == 0 ? std::numeric_limits<Score>::min() : s.cutoff(s.iteration - 1);
    while (s.dfs.advance([&](int rid) { return s.dfs.bound_after(rid) <= hi; })) {
      if (s.dfs.current().applied > lo) return emit(s.pcfg.grammar(), s.dfs.current());
    }
    if (hi >= s.worst) {
      s.done = true;
      break;
    }
    ++s.iteration;
    s.dfs.reset();
  }
  return std::nullopt;
}

// Sort-and-Add ---------------------------------------------------------------

struct SortAndAdd::State {
  Pcfg pcfg;
  SortAddOptions opt;
  DfsEngine dfs;
  /// Position of each rule in its non-terminal when sorted by weight.
  std::vector<int> rank;
  std::vector<char> allowed;
  int max_rules = 0;
  int k = 0;
  int prev_k = 0;
  bool done = false;

  State(Pcfg p, SortAddOptions o) : pcfg(std::move(p)), opt(o), dfs(pcfg) {
    if (opt.k0 < 1 || opt.step < 1) throw std::invalid_argument("sort-and-add needs k0 >= 1 and step >= 1");
    const Grammar& g = pcfg.grammar();
    rank.resize(g.num_rules());
    for (int nt = 0; nt < static_cast<int>(g.num_nonterminals()); ++nt) {
      std::vector<int> ids(g.num_rules_of(nt));
      std::iota(ids.begin(), ids.end(), g.first_rule(nt));
      std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) {
        if (pcfg.rule_score(a) != pcfg.rule_score(b)) return pcfg.rule_score(a) < pcfg.rule_score(b);
        return g.symbol_rank(a) < g.symbol_rank(b);
      });
      for (int i = 0; i < static_cast<int>(ids.size()); ++i) rank[ids[i]] = i;
      max_rules = std::max(max_rules, static_cast<int>(ids.size()));
    }
    start_iteration(opt.k0);
  }

  void start_iteration(int new_k) {
    prev_k = k;
    k = new_k;
    const Grammar& g = pcfg.grammar();
    // Restrict to the top-k rules and keep only rules whose children stay productive.
    allowed.assign(g.num_rules(), 0);
    std::vector<char> productive(g.num_nonterminals(), 0);
    for (int nt = 0; nt < static_cast<int>(g.num_nonterminals()); ++nt) {
      for (int rid = g.first_rule(nt); rid < g.end_rule(nt); ++rid) {
        if (rank[rid] >= k) continue;
        const auto& rhs = g.rule(rid).rhs;
        if (std::all_of(rhs.begin(), rhs.end(), [&](int c) { return productive[c]; })) {
          allowed[rid] = 1;
          productive[nt] = 1;
        }
      }
    }
    dfs.reset();
  }

  bool is_new(const PartialDerivation& d) const {
    if (prev_k == 0) return true;
    return std::any_of(d.rules.begin(), d.rules.end(), [&](int rid) { return rank[rid] >= prev_k; });
  }
};

SortAndAdd::SortAndAdd(Pcfg pcfg, SortAddOptions opt) : state_(std::make_unique<State>(std::move(pcfg), opt)) {}
SortAndAdd::~SortAndAdd() = default;
int SortAndAdd::k() const { return state_->k; }

std::optional<Enumerated> SortAndAdd::next() {
  State& s = *state_;
  while (!s.done) {
    auto admit = [&](int rid) {
      return s.allowed[rid] && (s.opt.size_bound == 0 || s.dfs.size_after(rid) <= s.opt.size_bound);
    };
    while (s.dfs.advance(admit)) {
      if (s.is_new(s.dfs.current())) return emit(s.pcfg.grammar(), s.dfs.current());
    }
    if (s.k >= s.max_rules) {
      s.done = true;
      break;
    }
    s.start_iteration(s.k + s.opt.step);
  }
  return std::nullopt;
}

// Beam -----------------------------------------------------------------------

struct BeamSearch::State {
  struct Item {
    Score bound;
    PartialDerivation d;
  };

  Pcfg pcfg;
  const Grammar& g;
  BeamOptions opt;
  std::size_t width;
  std::vector<Item> level;
  bool saturated = false;
  bool done = false;
  std::deque<PartialDerivation> pending;
  std::unordered_set<std::string> seen;

  State(Pcfg p, BeamOptions o) : pcfg(std::move(p)), g(pcfg.grammar()), opt(o), width(o.w0) {
    if (opt.w0 < 1 || opt.growth < 2) throw std::invalid_argument("beam needs w0 >= 1 and growth >= 2");
    restart();
  }

  void restart() {
    level.clear();
    level.push_back(Item{pcfg.max_prob(g.start()).score, PartialDerivation::start_of(g)});
    saturated = false;
  }

  void step() {
    std::vector<Item> cand;
    for (const Item& it : level) {
      const int hole = it.d.holes.back();
      const Score rest = it.bound - it.d.applied - pcfg.max_prob(hole).score;
      for (int rid = g.first_rule(hole); rid < g.end_rule(hole); ++rid) {
        Item c{0, it.d};
        c.d.expand(pcfg, rid);
        Score b = c.d.applied + rest;
        for (int ch : g.rule(rid).rhs) b += pcfg.max_prob(ch).score;
        c.bound = b;
        cand.push_back(std::move(c));
      }
    }
    auto order = [&](const Item& a, const Item& b) {
      if (a.bound != b.bound) return a.bound < b.bound;
      return compare_partials(g, a.d.rules, b.d.rules) < 0;
    };
    if (cand.size() > width) {
      saturated = true;
      std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(width), cand.end(), order);
      cand.resize(width);
    } else {
      std::sort(cand.begin(), cand.end(), order);
    }
    level.clear();
    for (Item& c : cand) {
      if (c.d.complete()) {
        if (seen.insert(derivation_key(c.d)).second) pending.push_back(std::move(c.d));
      } else {
        level.push_back(std::move(c));
      }
    }
  }
};

BeamSearch::BeamSearch(Pcfg pcfg, BeamOptions opt) : state_(std::make_unique<State>(std::move(pcfg), opt)) {}
BeamSearch::~BeamSearch() = default;
std::size_t BeamSearch::width() const { return state_->width; }

std::optional<Enumerated> BeamSearch::next() {
  State& s = *state_;
  while (s.pending.empty()) {
    if (s.done) return std::nullopt;
    if (s.level.empty()) {
      if (!s.saturated) {
        s.done = true;
        return std::nullopt;
      }
      s.width *= s.opt.growth;
      s.restart();
      continue;
    }
    s.step();
  }
  PartialDerivation d = std::move(s.pending.front());
  s.pending.pop_front();
  return emit(s.g, d);
}

// BFS ------------------------------------------------------------------------

struct Bfs::State {
  Pcfg pcfg;
  std::deque<PartialDerivation> queue;
  explicit State(Pcfg p) : pcfg(std::move(p)) { queue.push_back(PartialDerivation::start_of(pcfg.grammar())); }
};

Bfs::Bfs(Pcfg pcfg) : state_(std::make_unique<State>(std::move(pcfg))) {}
Bfs::~Bfs() = default;

std::optional<Enumerated> Bfs::next() {
  State& s = *state_;
  const Grammar& g = s.pcfg.grammar();
  while (!s.queue.empty()) {
    PartialDerivation d = std::move(s.queue.front());
    s.queue.pop_front();
    if (d.complete()) return emit(g, d);
    const int hole = d.holes.back();
    for (int rid = g.first_rule(hole); rid < g.end_rule(hole); ++rid) {
      PartialDerivation c = d;
      c.expand(s.pcfg, rid);
      s.queue.push_back(std::move(c));
    }
  }
  return std::nullopt;
}

// DFS ------------------------------------------------------------------------

struct Dfs::State {
  Pcfg pcfg;
  std::uint32_t size_bound;
  DfsEngine dfs;
  State(Pcfg p, std::uint32_t bound) : pcfg(std::move(p)), size_bound(bound), dfs(pcfg) { dfs.reset(); }
};

Dfs::Dfs(Pcfg pcfg, std::uint32_t size_bound) : state_(std::make_unique<State>(std::move(pcfg), size_bound)) {}
Dfs::~Dfs() = default;

std::optional<Enumerated> Dfs::next() {
  State& s = *state_;
  auto admit = [&](int rid) { return s.size_bound == 0 || s.dfs.size_after(rid) <= s.size_bound; };
  if (s.dfs.advance(admit)) return emit(s.pcfg.grammar(), s.dfs.current());
  return std::nullopt;
}

}  // namespace dbs
