#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "dbs/derivation.hpp"
#include "dbs/sample.hpp"
#include "testkit.hpp"

using namespace dbs;

namespace {

std::vector<double> normalized(std::vector<double> w) {
  double z = 0.0;
  for (double x : w) z += x;
  for (double& x : w) x /= z;
  return w;
}

}  // namespace

TEST_CASE("alias tables reconstruct their weights") {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> w(1 + rng.below(40));
    for (double& x : w) x = rng.uniform() < 0.2 ? 0.0 : rng.uniform();
    w[rng.below(w.size())] += 0.1;
    const AliasTable t(w);
    const auto got = t.reconstruct();
    const auto want = normalized(w);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < w.size(); ++i) CHECK(std::abs(got[i] - want[i]) < 1e-12);
  }
}

TEST_CASE("alias table draws match their weights") {
  const std::vector<double> w{0.05, 0.4, 0.15, 0.3, 0.1};
  const AliasTable t(w);
  Rng rng(3);
  std::vector<std::size_t> counts(w.size());
  const std::size_t n = 1000000;
  for (std::size_t i = 0; i < n; ++i) ++counts[t.sample(rng)];
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(std::abs(counts[i] / double(n) - w[i]) < 5e-3);
}

TEST_CASE("alias table rejects degenerate weights") {
  CHECK_THROWS_AS(AliasTable(std::vector<double>{}), std::invalid_argument);
  CHECK_THROWS_AS(AliasTable(std::vector<double>{0.5, -0.1}), std::invalid_argument);
  CHECK_THROWS_AS(AliasTable(std::vector<double>{0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("ancestral sampling follows the toy distribution") {
  const Pcfg pcfg = testkit::toy_pcfg(4);
  const PcfgSampler s(pcfg);
  Rng rng(99);
  std::map<std::string, std::size_t> counts;
  const std::size_t n = 1000000;
  for (std::size_t i = 0; i < n; ++i) ++counts[s.sample(rng).to_string()];
  const double sigma = std::sqrt(0.25 / n);
  CHECK(std::abs(counts["var0"] / double(n) - 0.5) < 3 * sigma);
  CHECK(std::abs(counts["(f var0)"] / double(n) - 0.25) < 5e-3);
  CHECK(counts.size() == 4);
}

TEST_CASE("sampled derivations build the sampled programs") {
  for (const auto& sg : testkit::small_grammars(10, 5)) {
    const PcfgSampler s(sg.pcfg);
    Rng a(1), b(1);
    for (int i = 0; i < 50; ++i) {
      const auto d = s.sample_derivation(a);
      const Program p = s.sample(b);
      const auto want = derivation_of(sg.grammar, p);
      REQUIRE(want.has_value());
      CHECK(d == *want);
    }
  }
}

TEST_CASE("sampling streams are reproducible per seed and report target probabilities") {
  const Pcfg pcfg = testkit::toy_pcfg(6);
  SamplingStream a(sqrt_transform(pcfg), pcfg, 4), b(sqrt_transform(pcfg), pcfg, 4), c(sqrt_transform(pcfg), pcfg, 5);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next(), y = b.next(), z = c.next();
    REQUIRE((x && y && z));
    CHECK(x->program == y->program);
    CHECK(x->probability == doctest::Approx(pcfg.probability(x->program)));
    differs = differs || !(x->program == z->program);
  }
  CHECK(differs);
}

TEST_CASE("exact sampler losses") {
  for (const auto& sg : testkit::small_grammars(20, 8)) {
    double z = 0.0;
    for (const auto& e : testkit::all_programs(sg.pcfg)) z += std::sqrt(e.probability);
    const double sq = exact_sampler_loss(sg.pcfg, sqrt_transform(sg.pcfg));
    CHECK(sq == doctest::Approx(z * z).epsilon(1e-9));
    // Sampling from the target itself costs one draw per program on average.
    CHECK(exact_sampler_loss(sg.pcfg, sg.pcfg) == doctest::Approx(double(sg.programs)).epsilon(1e-9));
    CHECK(sq <= exact_sampler_loss(sg.pcfg, sg.pcfg) * (1 + 1e-12));
  }
}

TEST_CASE("naive sampling loss grows with the truncation depth") {
  double prev = 0.0;
  for (int d = 2; d <= 12; d += 2) {
    const Pcfg p = testkit::toy_pcfg(d);
    const double loss = exact_sampler_loss(p, p);
    CHECK(loss == doctest::Approx(d));
    CHECK(loss > prev);
    prev = loss;
  }
}

TEST_CASE("best-first enumeration loss on the toy grammar") {
  const Pcfg p = testkit::toy_pcfg(16);
  HeapSearch h(p);
  const double loss = exact_enumeration_loss(h, p, 100);
  double want = 0.0;
  for (int n = 0; n < 16; ++n) want += (n + 1) * std::pow(0.5, n + 1);
  // The last level carries the remaining 2^-15 as well.
  want += 16 * std::pow(0.5, 16);
  CHECK(loss == doctest::Approx(want).epsilon(1e-12));
  CHECK(std::abs(loss - 2.0) < 1e-3);
}

TEST_CASE("Monte Carlo loss agrees with the exact sqrt-sampler loss") {
  const Pcfg p = testkit::toy_pcfg(16);
  const Pcfg s = sqrt_transform(p);
  Rng rng(12);
  const auto est = estimate_loss(
      [&](std::uint64_t trial) { return std::make_unique<SamplingStream>(s, p, 77, trial); }, p, 20000, 100000, rng);
  CHECK(est.trials == 20000);
  CHECK(est.censored == 0);
  CHECK(est.mean == doctest::Approx(exact_sampler_loss(p, s)).epsilon(0.05));
}
