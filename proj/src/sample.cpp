#include "dbs/sample.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dbs {

AliasTable::AliasTable(std::span<const double> weights) {
  const std::size_t n = weights.size();
  if (n == 0) throw std::invalid_argument("alias table needs at least one weight");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("alias weights must be finite and >= 0");
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("alias weights sum to 0");

  prob_.assign(n, 0.0);
  alias_.resize(n);
  std::vector<double> scaled(n);
  std::vector<std::uint32_t> small, large;
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = weights[i] * static_cast<double>(n) / total;
    alias_[i] = static_cast<std::uint32_t>(i);
    (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
  }
  while (!small.empty() && !large.empty()) {
    std::uint32_t s = small.back(), l = large.back();
    small.pop_back();
    large.pop_back();
    prob_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    (scaled[l] < 1.0 ? small : large).push_back(l);
  }
  // Leftovers are 1 up to rounding.
  for (std::uint32_t i : large) prob_[i] = 1.0;
  for (std::uint32_t i : small) prob_[i] = 1.0;
}

std::vector<double> AliasTable::reconstruct() const {
  const std::size_t n = prob_.size();
  std::vector<double> mass(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    mass[i] += prob_[i];
    if (prob_[i] < 1.0) mass[alias_[i]] += 1.0 - prob_[i];
  }
  for (double& m : mass) m /= static_cast<double>(n);
  return mass;
}

PcfgSampler::PcfgSampler(Pcfg pcfg) : pcfg_(std::move(pcfg)) {
  const Grammar& g = pcfg_.grammar();
  tables_.reserve(g.num_nonterminals());
  for (int nt = 0; nt < static_cast<int>(g.num_nonterminals()); ++nt) {
    std::vector<double> w;
    for (const Rule& r : g.rules_of(nt)) w.push_back(r.weight);
    tables_.emplace_back(w);
  }
}

std::vector<std::int32_t> PcfgSampler::sample_derivation(Rng& rng) const {
  const Grammar& g = pcfg_.grammar();
  std::vector<std::int32_t> rules;
  std::vector<std::int32_t> holes{g.start()};
  while (!holes.empty()) {
    const int nt = holes.back();
    holes.pop_back();
    const int rid = g.first_rule(nt) + static_cast<int>(tables_[nt].sample(rng));
    rules.push_back(rid);
    const auto& rhs = g.rule(rid).rhs;
    for (auto it = rhs.rbegin(); it != rhs.rend(); ++it) holes.push_back(*it);
  }
  return rules;
}

Program PcfgSampler::sample(Rng& rng) const { return build_program(pcfg_.grammar(), sample_derivation(rng)); }

PcfgSampler sqrt_sampler(const Pcfg& pcfg) { return PcfgSampler(sqrt_transform(pcfg)); }

SamplingStream::SamplingStream(Pcfg sampling, Pcfg target, std::uint64_t seed, std::uint64_t stream)
    : sampler_(std::move(sampling)), target_(std::move(target)), rng_(seed, stream) {}

std::optional<Enumerated> SamplingStream::next() {
  Program p = sampler_.sample(rng_);
  double q = target_.probability(p);
  return Enumerated{std::move(p), q};
}

double exact_sampler_loss(const Pcfg& target, const Pcfg& sampler, std::size_t max_programs) {
  HeapSearch all(target);
  double loss = 0.0;
  std::size_t n = 0;
  while (auto e = all.next()) {
    if (++n > max_programs) throw std::invalid_argument("target grammar exceeds the exhaustive-loss program cap");
    double q = sampler.probability(e->program);
    if (q == 0.0) return std::numeric_limits<double>::infinity();
    loss += e->probability / q;
  }
  return loss;
}

double exact_enumeration_loss(ProgramStream& stream, const Pcfg& target, std::size_t max_programs) {
  double loss = 0.0;
  for (std::size_t n = 0; n < max_programs; ++n) {
    auto e = stream.next();
    if (!e) break;
    loss += static_cast<double>(n + 1) * target.probability(e->program);
  }
  return loss;
}

LossEstimate estimate_loss(const std::function<std::unique_ptr<ProgramStream>(std::uint64_t)>& make,
                           const Pcfg& target, std::size_t trials, std::size_t truncation, Rng& rng) {
  PcfgSampler draw(target);
  LossEstimate out;
  out.trials = trials;
  double total = 0.0, total_ok = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    Program x = draw.sample(rng);
    auto algo = make(t);
    std::size_t count = 0;
    bool found = false;
    while (count < truncation) {
      auto e = algo->next();
      if (!e) break;
      ++count;
      if (e->program == x) {
        found = true;
        break;
      }
    }
    if (found) {
      total += static_cast<double>(count);
      total_ok += static_cast<double>(count);
    } else {
      ++out.censored;
      total += static_cast<double>(truncation);
    }
  }
  out.mean = trials ? total / static_cast<double>(trials) : 0.0;
  const std::size_t ok = trials - out.censored;
  out.mean_uncensored = ok ? total_ok / static_cast<double>(ok) : 0.0;
  return out;
}

}  // namespace dbs
