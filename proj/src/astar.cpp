#include <algorithm>

#include "dbs/enumerate.hpp"

namespace dbs {

struct AStar::State {
  struct Node {
    Score bound;
    PartialDerivation d;
  };

  Pcfg pcfg;
  const Grammar& g;
  std::vector<Node> heap;

  explicit State(Pcfg p) : pcfg(std::move(p)), g(pcfg.grammar()) {
    auto start = PartialDerivation::start_of(g);
    heap.push_back(Node{pcfg.max_prob(g.start()).score, std::move(start)});
  }

  // Min-heap order on (bound, partial key).
  bool after(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return compare_partials(g, a.d.rules, b.d.rules) > 0;
  }
};

AStar::AStar(Pcfg pcfg) : state_(std::make_unique<State>(std::move(pcfg))) {}
AStar::~AStar() = default;

std::size_t AStar::frontier_size() const { return state_->heap.size(); }

std::optional<Enumerated> AStar::next() {
  State& s = *state_;
  auto cmp = [&](const State::Node& a, const State::Node& b) { return s.after(a, b); };
  while (!s.heap.empty()) {
    std::pop_heap(s.heap.begin(), s.heap.end(), cmp);
    State::Node node = std::move(s.heap.back());
    s.heap.pop_back();
    if (node.d.complete()) {
      return Enumerated{build_program(s.g, node.d.rules), derivation_probability(s.g, node.d.rules)};
    }
    const int hole = node.d.holes.back();
    const Score rest = node.bound - node.d.applied - s.pcfg.max_prob(hole).score;
    for (int rid = s.g.first_rule(hole); rid < s.g.end_rule(hole); ++rid) {
      State::Node child{0, node.d};
      child.d.expand(s.pcfg, rid);
      Score b = child.d.applied + rest;
      for (int c : s.g.rule(rid).rhs) b += s.pcfg.max_prob(c).score;
      child.bound = b;
      s.heap.push_back(std::move(child));
      std::push_heap(s.heap.begin(), s.heap.end(), cmp);
    }
  }
  return std::nullopt;
}

}  // namespace dbs
