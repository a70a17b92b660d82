#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "dbs/enumerate.hpp"
#include "dbs/pcfg.hpp"
#include "dbs/rng.hpp"

namespace dbs {

/// Vose's alias table: draw column i uniformly, keep i with probability
/// prob[i], otherwise return alias[i].
class AliasTable {
 public:
  /// Throws std::invalid_argument on an empty, negative or all-zero vector.
  explicit AliasTable(std::span<const double> weights);

  std::size_t size() const { return prob_.size(); }
  const std::vector<double>& prob() const { return prob_; }
  const std::vector<std::uint32_t>& alias() const { return alias_; }

  std::uint32_t sample(Rng& rng) const {
    const auto i = static_cast<std::uint32_t>(rng.below(prob_.size()));
    return rng.uniform() < prob_[i] ? i : alias_[i];
  }

  /// Categorical distribution encoded by the table: mass of index j is
  /// (prob[j] + sum over columns aliased to j of (1 - prob[i])) / n.
  std::vector<double> reconstruct() const;

 private:
  std::vector<double> prob_;
  std::vector<std::uint32_t> alias_;
};

/// Ancestral top-down sampler with one alias table per non-terminal.
class PcfgSampler {
 public:
  explicit PcfgSampler(Pcfg pcfg);
  const Pcfg& pcfg() const { return pcfg_; }
  std::vector<std::int32_t> sample_derivation(Rng& rng) const;
  Program sample(Rng& rng) const;

 private:
  Pcfg pcfg_;
  std::vector<AliasTable> tables_;
};

/// Sampler over sqrt_transform(pcfg).
PcfgSampler sqrt_sampler(const Pcfg& pcfg);

/// Endless stream of samples drawn from `sampling`; reported probabilities
/// are under `target` (usually the PCFG the sampler was derived from).
class SamplingStream : public ProgramStream {
 public:
  SamplingStream(Pcfg sampling, Pcfg target, std::uint64_t seed, std::uint64_t stream = 0);
  std::optional<Enumerated> next() override;

 private:
  PcfgSampler sampler_;
  Pcfg target_;
  Rng rng_;
};

/// Sum over programs x of D(x) / D'(x), sampler D' against target D, computed
/// exhaustively. +inf if D' misses a program of D. Requires a finite target
/// with at most `max_programs` programs.
double exact_sampler_loss(const Pcfg& target, const Pcfg& sampler, std::size_t max_programs = 1000000);

/// Sum over the stream's output order of (n + 1) * D(x_n) for the first
/// `max_programs` outputs (the expected index of a D-drawn target, counting from 1).
double exact_enumeration_loss(ProgramStream& stream, const Pcfg& target, std::size_t max_programs);

struct LossEstimate {
  /// Mean number of outputs until the target appears; censored trials count as `truncation`.
  double mean = 0.0;
  /// Mean over uncensored trials only.
  double mean_uncensored = 0.0;
  std::size_t trials = 0;
  std::size_t censored = 0;
};

/// Monte Carlo loss: per trial draw x ~ target, build a fresh algorithm with
/// `make(trial)` and count outputs until x appears, capped at `truncation`.
LossEstimate estimate_loss(const std::function<std::unique_ptr<ProgramStream>(std::uint64_t)>& make,
                           const Pcfg& target, std::size_t trials, std::size_t truncation, Rng& rng);

}  // namespace dbs
