#include "dbs/splitter.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>

namespace dbs {

double partition_quality(const std::vector<Split>& splits) {
  if (splits.empty()) return 1.0;
  double hi = 0.0, lo = std::numeric_limits<double>::infinity();
  for (const Split& s : splits) {
    hi = std::max(hi, s.mass);
    lo = std::min(lo, s.mass);
  }
  return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

std::vector<Prefix> refine(const Pcfg& pcfg, const Prefix& prefix) {
  const Grammar& g = pcfg.grammar();
  if (prefix.d.complete()) return {};
  std::vector<Prefix> out;
  const int hole = prefix.d.holes.back();
  for (int rid = g.first_rule(hole); rid < g.end_rule(hole); ++rid) {
    Prefix child = prefix;
    child.d.expand(pcfg, rid);
    child.mass = prefix.mass * g.rule(rid).weight;
    out.push_back(std::move(child));
  }
  return out;
}

namespace {

void recompute_mass(Split& s) {
  s.mass = 0.0;
  for (const Prefix& p : s.prefixes) s.mass += p.mass;
}

/// True if a sorts before b in (mass desc, canonical key asc).
bool heavier(const Grammar& g, const Prefix& a, const Prefix& b) {
  if (a.mass != b.mass) return a.mass > b.mass;
  return compare_partials(g, a.d.rules, b.d.rules) < 0;
}

struct PairEval {
  double others_max;
  double others_min;
  double quality(double a, double b) const {
    double hi = std::max({others_max, a, b});
    double lo = std::min({others_min, a, b});
    return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  }
};

PairEval others(const Partition& part, std::size_t a, std::size_t b) {
  PairEval e{0.0, std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < part.splits.size(); ++i) {
    if (i == a || i == b) continue;
    e.others_max = std::max(e.others_max, part.splits[i].mass);
    e.others_min = std::min(e.others_min, part.splits[i].mass);
  }
  return e;
}

/// Best move transferring mass from split `a` to the lighter split `b`.
void best_between(const Partition& part, std::size_t a, std::size_t b, std::optional<Move>& best) {
  const Split& A = part.splits[a];
  const Split& B = part.splits[b];
  if (A.mass <= B.mass) return;
  const PairEval ev = others(part, a, b);
  auto consider = [&](Move m) {
    if (!best || m.quality < best->quality) best = m;
  };
  if (A.prefixes.size() > 1) {
    for (std::size_t i = 0; i < A.prefixes.size(); ++i) {
      const double m = A.prefixes[i].mass;
      consider(Move{Move::Kind::Gift, a, b, i, 0, ev.quality(A.mass - m, B.mass + m)});
    }
  }
  // Swap: the exchanged difference should be near half the gap; quality is
  // unimodal in the difference, so the nearest candidates on either side suffice.
  std::vector<std::size_t> order(B.prefixes.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return B.prefixes[x].mass < B.prefixes[y].mass; });
  const double half_gap = (A.mass - B.mass) / 2.0;
  for (std::size_t i = 0; i < A.prefixes.size(); ++i) {
    const double m = A.prefixes[i].mass;
    const double target = m - half_gap;
    auto it = std::lower_bound(order.begin(), order.end(), target,
                               [&](std::size_t x, double v) { return B.prefixes[x].mass < v; });
    const auto pos = static_cast<std::ptrdiff_t>(it - order.begin());
    for (std::ptrdiff_t j = pos - 1; j <= pos; ++j) {
      if (j < 0 || j >= static_cast<std::ptrdiff_t>(order.size())) continue;
      const double mb = B.prefixes[order[j]].mass;
      if (mb >= m) continue;
      consider(Move{Move::Kind::Swap, a, b, i, order[j], ev.quality(A.mass - m + mb, B.mass + m - mb)});
    }
  }
}

}  // namespace

std::optional<Move> find_improving_move(const Partition& part, bool full_scan) {
  const std::size_t k = part.splits.size();
  if (k < 2) return std::nullopt;
  const double current = partition_quality(part.splits);
  std::optional<Move> best;
  if (full_scan) {
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = 0; b < k; ++b) {
        if (a != b) best_between(part, a, b, best);
      }
    }
  } else {
    std::size_t hi = 0, lo = 0;
    for (std::size_t i = 1; i < k; ++i) {
      if (part.splits[i].mass > part.splits[hi].mass) hi = i;
      if (part.splits[i].mass < part.splits[lo].mass) lo = i;
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (j != hi) best_between(part, hi, j, best);
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (j != lo && j != hi) best_between(part, j, lo, best);
    }
  }
  // Relative margin keeps rounding noise from producing endless cycles.
  if (best && best->quality < current * (1.0 - 1e-12)) return best;
  return std::nullopt;
}

void apply_move(Partition& part, const Move& move) {
  Split& A = part.splits[move.from];
  Split& B = part.splits[move.to];
  if (move.kind == Move::Kind::Gift) {
    B.prefixes.push_back(std::move(A.prefixes[move.from_index]));
    A.prefixes.erase(A.prefixes.begin() + static_cast<std::ptrdiff_t>(move.from_index));
  } else {
    std::swap(A.prefixes[move.from_index], B.prefixes[move.to_index]);
  }
  recompute_mass(A);
  recompute_mass(B);
  part.quality = partition_quality(part.splits);
}

namespace {

/// Incremental state of the hill climb: prefixes live in a pool, each split
/// indexes its members by mass, and refinable prefixes sit in a lazy max-heap.
class Climber {
 public:
  Climber(const Pcfg& pcfg, std::size_t k)
      : pcfg_(pcfg), g_(pcfg.grammar()), splits_(k), stale_(k, 1), heap_(HeapOrder{this}) {}

  void add(Prefix p, std::size_t s) {
    const auto id = static_cast<std::uint32_t>(pool_.size());
    insert(splits_[s], Entry{p.mass, id});
    splits_[s].mass += p.mass;
    stale_[s] = 1;
    const bool refinable = !p.d.complete();
    pool_.push_back(std::move(p));
    owner_.push_back(static_cast<std::int32_t>(s));
    if (refinable) heap_.push(id);
  }

  double quality() const {
    double hi = 0.0, lo = std::numeric_limits<double>::infinity();
    for (const auto& s : splits_) {
      hi = std::max(hi, s.mass);
      lo = std::min(lo, s.mass);
    }
    return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  }

  /// Applies the best improving move of the restricted (or full) scan.
  bool improve(bool full_scan) {
    const std::size_t k = splits_.size();
    if (k < 2) return false;
    const double current = quality();
    Candidate best;
    if (full_scan) {
      for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) {
          if (a != b) consider_pair(a, b, current, best);
        }
      }
    } else {
      std::size_t hi = 0, lo = 0;
      for (std::size_t i = 1; i < k; ++i) {
        if (splits_[i].mass > splits_[hi].mass) hi = i;
        if (splits_[i].mass < splits_[lo].mass) lo = i;
      }
      if (hi != last_hi_ || lo != last_lo_) std::fill(stale_.begin(), stale_.end(), 1);
      last_hi_ = hi;
      last_lo_ = lo;
      for (std::size_t j = 0; j < k; ++j) {
        if (j != hi) consider_pair(hi, j, current, best);
      }
      for (std::size_t j = 0; j < k; ++j) {
        if (j != lo && j != hi) consider_pair(j, lo, current, best);
      }
    }
    // Relative margin keeps rounding noise from producing endless cycles.
    if (!best.valid || !(best.quality < current * (1.0 - 1e-12))) {
      // Masses are unchanged until the next move, so these pairs stay
      // exhausted until one of their splits gains new members.
      std::fill(stale_.begin(), stale_.end(), 0);
      return false;
    }
    std::fill(stale_.begin(), stale_.end(), 1);
    transfer(best.give, best.to);
    if (best.swap) transfer(best.take, best.from);
    return true;
  }

  /// Replaces the heaviest refinable prefix by its one-step expansions.
  bool refine_heaviest() {
    while (!heap_.empty() && owner_[heap_.top()] < 0) heap_.pop();
    if (heap_.empty()) return false;
    const std::uint32_t id = heap_.top();
    heap_.pop();
    const auto s = static_cast<std::size_t>(owner_[id]);
    remove(id);
    for (Prefix& c : refine(pcfg_, pool_[id])) add(std::move(c), s);
    return true;
  }

  Partition finish(std::size_t refinements, bool exhausted) {
    Partition part;
    part.refinements = refinements;
    part.budget_exhausted = exhausted;
    for (const auto& s : splits_) {
      Split out;
      for (const auto& [m, id] : s.by_mass) out.prefixes.push_back(std::move(pool_[id]));
      std::sort(out.prefixes.begin(), out.prefixes.end(),
                [&](const Prefix& a, const Prefix& b) { return heavier(g_, a, b); });
      recompute_mass(out);
      part.splits.push_back(std::move(out));
    }
    part.quality = partition_quality(part.splits);
    return part;
  }

 private:
  using Entry = std::pair<double, std::uint32_t>;
  struct Member {
    /// Sorted ascending.
    std::vector<Entry> by_mass;
    double mass = 0.0;
  };
  struct Candidate {
    bool valid = false;
    bool swap = false;
    std::size_t from = 0, to = 0;
    std::uint32_t give = 0, take = 0;
    double quality = 0.0;
  };
  struct HeapOrder {
    const Climber* self;
    /// std::priority_queue keeps the greatest on top, so "less" means lighter.
    bool operator()(std::uint32_t a, std::uint32_t b) const {
      return heavier(self->g_, self->pool_[b], self->pool_[a]);
    }
  };

  void remove(std::uint32_t id) {
    auto& s = splits_[owner_[id]];
    auto it = std::lower_bound(s.by_mass.begin(), s.by_mass.end(), Entry{pool_[id].mass, id});
    s.by_mass.erase(it);
    s.mass -= pool_[id].mass;
    stale_[owner_[id]] = 1;
    owner_[id] = -1;
  }

  void transfer(std::uint32_t id, std::size_t to) {
    remove(id);
    insert(splits_[to], Entry{pool_[id].mass, id});
    splits_[to].mass += pool_[id].mass;
    owner_[id] = static_cast<std::int32_t>(to);
  }

  static void insert(Member& s, Entry e) { s.by_mass.insert(std::lower_bound(s.by_mass.begin(), s.by_mass.end(), e), e); }

  /// Moves from `a` to the lighter `b`. Quality is quasi-convex in the mass
  /// transferred and minimal at half the gap, so only the candidates adjacent
  /// to that point need evaluating.
  void consider_pair(std::size_t a, std::size_t b, double current, Candidate& best) const {
    if (!stale_[a] && !stale_[b]) return;
    const Member& A = splits_[a];
    const Member& B = splits_[b];
    if (A.mass <= B.mass) return;
    double omax = 0.0, omin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < splits_.size(); ++i) {
      if (i == a || i == b) continue;
      omax = std::max(omax, splits_[i].mass);
      omin = std::min(omin, splits_[i].mass);
    }
    auto quality_after = [&](double delta) {
      const double x = A.mass - delta, y = B.mass + delta;
      const double hi = std::max({omax, x, y}), lo = std::min({omin, x, y});
      return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    };
    auto offer = [&](bool swap, std::uint32_t give, std::uint32_t take, double delta) {
      const double q = quality_after(delta);
      if (!best.valid || q < best.quality) best = Candidate{true, swap, a, b, give, take, q};
    };
    const double half_gap = (A.mass - B.mass) / 2.0;
    // The ideal transfer bounds every move of this pair from below.
    const double bound = quality_after(half_gap);
    if (best.valid ? bound >= best.quality : !(bound < current * (1.0 - 1e-12))) return;
    const auto& va = A.by_mass;
    const auto& vb = B.by_mass;
    if (va.size() > 1) {
      auto it = std::lower_bound(va.begin(), va.end(), Entry{half_gap, 0});
      if (it != va.end()) offer(false, it->second, 0, it->first);
      if (it != va.begin()) offer(false, std::prev(it)->second, 0, std::prev(it)->first);
    }
    // Targets a - half_gap rise with a, so one forward pointer into B suffices.
    std::size_t j = 0;
    for (const Entry& ea : va) {
      const double target = ea.first - half_gap;
      while (j < vb.size() && vb[j].first < target) ++j;
      for (std::size_t c = j > 0 ? j - 1 : 0; c <= j && c < vb.size(); ++c) {
        if (vb[c].first < ea.first) offer(true, ea.second, vb[c].second, ea.first - vb[c].first);
      }
    }
  }

  const Pcfg& pcfg_;
  const Grammar& g_;
  std::vector<Prefix> pool_;
  std::vector<std::int32_t> owner_;
  std::vector<Member> splits_;
  /// Splits whose pairs must be rescanned: set by any change of membership.
  std::vector<char> stale_;
  std::size_t last_hi_ = SIZE_MAX, last_lo_ = SIZE_MAX;
  std::priority_queue<std::uint32_t, std::vector<std::uint32_t>, HeapOrder> heap_;
};

}  // namespace

Partition split_grammar(const Pcfg& pcfg, std::size_t k, const SplitOptions& opt) {
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  const Grammar& g = pcfg.grammar();
  std::size_t refinements = 0;

  // Refine the heaviest refinable node until there are at least k nodes.
  std::vector<Prefix> nodes{Prefix{PartialDerivation::start_of(g), 1.0}};
  while (nodes.size() < k) {
    std::ptrdiff_t pick = -1;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i].d.complete()) continue;
      if (pick < 0 || heavier(g, nodes[i], nodes[pick])) pick = static_cast<std::ptrdiff_t>(i);
    }
    if (pick < 0) {
      throw std::invalid_argument("cannot split into " + std::to_string(k) + " parts: the grammar has only " +
                                  std::to_string(nodes.size()) + " programs");
    }
    auto children = refine(pcfg, nodes[pick]);
    nodes.erase(nodes.begin() + pick);
    for (auto& c : children) nodes.push_back(std::move(c));
    ++refinements;
  }
  std::sort(nodes.begin(), nodes.end(), [&](const Prefix& a, const Prefix& b) { return heavier(g, a, b); });
  Climber climb(pcfg, k);
  for (std::size_t i = 0; i < nodes.size(); ++i) climb.add(std::move(nodes[i]), std::min(i, k - 1));

  bool exhausted = false;
  while (climb.quality() > opt.alpha_desired) {
    if (climb.improve(opt.full_scan)) continue;
    if (refinements >= opt.refinement_budget) {
      exhausted = true;
      break;
    }
    if (!climb.refine_heaviest()) break;
    ++refinements;
  }
  return climb.finish(refinements, exhausted);
}

namespace {

class SubGrammarBuilder {
 public:
  SubGrammarBuilder(const Grammar& g) : g_(g) {
    for (std::size_t i = 0; i < g.num_nonterminals(); ++i) {
      nts_.push_back(g.nonterminal(static_cast<int>(i)));
      tag_ = std::max(tag_, nts_.back().tag);
    }
    rules_.assign(g.all_rules().begin(), g.all_rules().end());
  }

  int fresh(const NonTerminal& like) {
    NonTerminal nt = like;
    nt.tag = ++tag_;
    nts_.push_back(std::move(nt));
    return static_cast<int>(nts_.size()) - 1;
  }

  /// Rule for the subtree at `pos` of the prefix, with lhs `lhs`.
  void emit(const PartialDerivation& d, std::size_t& pos, int lhs, double weight) {
    const Rule& orig = g_.rule(d.rules[pos++]);
    Rule r{lhs, orig.symbol, {}, weight};
    for (int child : orig.rhs) {
      if (pos < d.rules.size()) {
        int id = fresh(g_.nonterminal(child));
        emit(d, pos, id, 1.0);
        r.rhs.push_back(id);
      } else {
        r.rhs.push_back(child);
      }
    }
    rules_.push_back(std::move(r));
  }

  Grammar finish(int start) {
    return Grammar(g_.dsl_ptr(), g_.type_request(), std::move(nts_), std::move(rules_), start);
  }

 private:
  const Grammar& g_;
  std::vector<NonTerminal> nts_;
  std::vector<Rule> rules_;
  std::uint32_t tag_ = 0;
};

}  // namespace

SubSpace sub_space(const Pcfg& pcfg, const Split& split) {
  if (split.prefixes.empty()) throw std::invalid_argument("empty split");
  if (split.prefixes.size() == 1 && split.prefixes[0].d.rules.empty()) return SubSpace{pcfg, split.mass};
  const Grammar& g = pcfg.grammar();
  SubGrammarBuilder b(g);
  const int start = b.fresh(g.nonterminal(g.start()));
  for (const Prefix& p : split.prefixes) {
    if (p.d.rules.empty()) throw std::invalid_argument("a bare start hole cannot share a split");
    std::size_t pos = 0;
    b.emit(p.d, pos, start, p.mass / split.mass);
  }
  return SubSpace{Pcfg::from_weighted(b.finish(start)), split.mass};
}

}  // namespace dbs
