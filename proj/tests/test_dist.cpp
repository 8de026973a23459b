#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "enttest/dist.hpp"
#include "enttest/instances.hpp"

using namespace enttest;

namespace {

DiscreteDistribution random_pmf(std::size_t n, Rng& rng, bool sparse) {
  std::vector<double> w(n);
  for (double& v : w) v = (sparse && uniform01(rng) < 0.4) ? 0.0 : uniform01(rng);
  w[uniform_index(rng, n)] += 0.01;
  return DiscreteDistribution::from_weights(std::move(w));
}

}  // namespace

TEST(Distribution, RejectsBadInput) {
  EXPECT_THROW(DiscreteDistribution({}), InvalidDistribution);
  EXPECT_THROW(DiscreteDistribution({0.5, 0.6}), InvalidDistribution);
  EXPECT_THROW(DiscreteDistribution({1.5, -0.5}), InvalidDistribution);
  EXPECT_THROW(DiscreteDistribution::from_weights({0, 0}), InvalidDistribution);
}

TEST(Distribution, RenormalizesWithinTolerance) {
  DiscreteDistribution d({0.5, 0.5 + 5e-13});
  EXPECT_NEAR(d[0] + d[1], 1.0, 1e-15);
}

TEST(Entropy, Examples) {
  EXPECT_NEAR(entropy(DiscreteDistribution::uniform(4)), 1.3862944, 1e-7);
  EXPECT_EQ(entropy(DiscreteDistribution::point_mass(5, 3)), 0.0);
  const DiscreteDistribution half({0.5, 0.5, 0, 0});
  EXPECT_NEAR(entropy(DiscreteDistribution::uniform(4)) - entropy(half), 0.6931472, 1e-7);
}

TEST(Divergences, Examples) {
  const DiscreteDistribution p({0.75, 0.25}), q({0.25, 0.75});
  const Divergences same = divergences(p, p);
  EXPECT_EQ(same.tv, 0);
  EXPECT_EQ(same.hellinger_sq, 0);
  EXPECT_EQ(same.kl, 0);
  EXPECT_EQ(same.chi_sq, 0);
  EXPECT_EQ(same.l2_sq, 0);

  const Divergences disjoint =
      divergences(DiscreteDistribution({1, 0}), DiscreteDistribution({0, 1}));
  EXPECT_DOUBLE_EQ(disjoint.tv, 1);
  EXPECT_DOUBLE_EQ(disjoint.hellinger_sq, 1);
  EXPECT_EQ(disjoint.kl, kInfinity);
  EXPECT_EQ(disjoint.chi_sq, kInfinity);

  const Divergences d = divergences(p, q);
  EXPECT_DOUBLE_EQ(d.tv, 0.5);
  EXPECT_DOUBLE_EQ(d.l2_sq, 0.5);
  EXPECT_THROW(divergences(p, DiscreteDistribution::uniform(3)), DomainMismatch);
}

TEST(Lambda, Examples) {
  const DiscreteDistribution p({0.75, 0.25}), q({0.25, 0.75}), u({0.5, 0.5});
  EXPECT_EQ(lambda_term(p, p), 0);
  EXPECT_NEAR(lambda_term(p, q), 0, 1e-15);
  EXPECT_NEAR(lambda_term(p, u), 0.1277064, 1e-7);
  EXPECT_NEAR(lambda_term(p, u), std::abs(0.25 * std::log(8.0 / 5) - 0.25 * std::log(8.0 / 3)),
              1e-12);
  EXPECT_THROW(lambda_term(p, DiscreteDistribution::uniform(3)), DomainMismatch);
}

TEST(Divergences, InequalityChainOnRandomPairs) {
  Rng rng(11);
  for (int k = 0; k < 1000; ++k) {
    const std::size_t n = 2 + uniform_index(rng, 40);
    const auto p = random_pmf(n, rng, k % 2), q = random_pmf(n, rng, k % 3 == 0);
    const Divergences d = divergences(p, q);
    const double dh = std::sqrt(d.hellinger_sq);
    EXPECT_LE(d.tv, std::sqrt(2.0) * dh + 1e-12);
    EXPECT_LE(d.hellinger_sq, d.tv + 1e-12);
    EXPECT_LE(d.tv, std::sqrt(d.chi_sq) + 1e-12);
    EXPECT_LE(d.kl, d.chi_sq + 1e-12);
    EXPECT_LE(d.tv, std::sqrt(d.kl / 2) + 1e-12);
  }
}

TEST(Divergences, TriangularHalfWithinFactorTwoOfHellinger) {
  Rng rng(12);
  for (int k = 0; k < 1000; ++k) {
    const std::size_t n = 2 + uniform_index(rng, 40);
    const auto p = random_pmf(n, rng, true), q = random_pmf(n, rng, k % 2);
    const double h2 = divergences(p, q).hellinger_sq, tri = triangular_half(p, q);
    EXPECT_LE(h2, tri + 1e-12);
    EXPECT_LE(tri, 2 * h2 + 1e-12);
  }
}

TEST(Divergences, DecompositionHoldsWithFrozenConstant) {
  Rng rng(13);
  for (int k = 0; k < 1000; ++k) {
    const std::size_t n = 2 + uniform_index(rng, 40);
    const auto p = random_pmf(n, rng, k % 2), q = random_pmf(n, rng, k % 5 == 0);
    const double lhs = std::abs(entropy(p) - entropy(q));
    EXPECT_LE(lhs, 4 * divergences(p, q).hellinger_sq + lambda_term(p, q) + 1e-12);
  }
}

TEST(MassFloor, Examples) {
  const DiscreteDistribution u = DiscreteDistribution::uniform(7);
  const DiscreteDistribution mu = mass_floor_mix(u, 0.3);
  for (std::size_t i = 0; i < 7; ++i) EXPECT_NEAR(mu[i], u[i], 1e-15);

  EXPECT_NEAR(mass_floor_eta(2, 0.2), 0.0868589, 1e-7);
  const DiscreteDistribution m = mass_floor_mix(DiscreteDistribution({1, 0}), 0.2);
  EXPECT_NEAR(m[0], 0.9565706, 1e-7);
  EXPECT_NEAR(m[1], 0.0434294, 1e-7);

  EXPECT_THROW(mass_floor_mix(u, 0.6), InvalidEpsilon);
  EXPECT_THROW(mass_floor_mix(u, 0.0), InvalidEpsilon);
}

TEST(MassFloor, AtomFloorAndEntropyDriftOnGrid) {
  Rng rng(14);
  for (std::size_t n = 2; n <= 4096; n *= 2)
    for (double eps : {0.05, 0.2, 0.5}) {
      const std::vector<DiscreteDistribution> family = {
          DiscreteDistribution::point_mass(n, 0), DiscreteDistribution::uniform(n),
          zipf(n, 1.0), random_pmf(n, rng, true)};
      const double floor = eps / (static_cast<double>(n) * std::log(static_cast<double>(n) / eps));
      for (const auto& d : family) {
        const DiscreteDistribution t = mass_floor_mix(d, eps);
        for (double v : t.probs()) EXPECT_GE(v, floor * (1 - 1e-12));
        const double drift = entropy(t) - entropy(d);
        EXPECT_GE(drift, -1e-12);  // mixing with uniform cannot lower entropy
        EXPECT_LE(drift, 2 * eps);
      }
    }
}

TEST(MassFloor, PointMassDriftExceedsEps) {
  // Witness that the per-distribution drift is not bounded by eps itself.
  const DiscreteDistribution d = DiscreteDistribution::point_mass(16, 0);
  const double drift = entropy(mass_floor_mix(d, 0.5)) - entropy(d);
  EXPECT_NEAR(drift / 0.5, 1.525, 1e-3);
}

TEST(MixSample, FrequencyOfFloorElement) {
  Sampler base(DiscreteDistribution({1, 0}), 21);
  MixStream s = mix_sample(base, 0.2);
  const int draws = 1000000;
  int hits = 0;
  for (int k = 0; k < draws; ++k) hits += s.next() == 1;
  const double want = mass_floor_eta(2, 0.2) / 2;
  const double sd = std::sqrt(want * (1 - want) / draws);
  EXPECT_NEAR(static_cast<double>(hits) / draws, want, 3 * sd);
}

TEST(MixSample, NegligibleWeightMatchesBase) {
  const DiscreteDistribution d({0.4, 0.6, 0.0});
  Sampler b(d, 5);
  MixStream m(b, 0.0);
  int ones = 0;
  for (int k = 0; k < 100000; ++k) {
    const std::size_t x = m.next();
    ASSERT_NE(x, 2u);
    ones += x == 1;
  }
  EXPECT_NEAR(ones / 100000.0, 0.6, 4 * std::sqrt(0.24 / 100000));
}

TEST(MixSample, ReplaysUnderFixedSeed) {
  const DiscreteDistribution d({0.2, 0.3, 0.5});
  Sampler a(d, 9), b(d, 9);
  MixStream ma = mix_sample(a, 0.3), mb = mix_sample(b, 0.3);
  for (int k = 0; k < 1000; ++k) EXPECT_EQ(ma.next(), mb.next());
}

TEST(Sampler, FrequenciesConverge) {
  Rng rng(31);
  for (std::size_t n : {1, 2, 17, 100}) {
    const auto d = random_pmf(n, rng, n > 2);
    Sampler s(d, 100 + n);
    std::vector<std::uint32_t> hist(n, 0);
    const double draws = 1e6;
    s.accumulate(static_cast<std::uint64_t>(draws), hist);
    for (std::size_t i = 0; i < n; ++i)
      EXPECT_LE(std::abs(hist[i] / draws - d[i]), 5 * std::sqrt(d[i] / draws) + 10 / draws);
  }
}

TEST(Sampler, NextAndAccumulateAgreeInLaw) {
  const DiscreteDistribution d({0.1, 0.6, 0.3});
  Sampler a(d, 1);
  std::vector<std::uint32_t> hist(3, 0);
  for (int k = 0; k < 300000; ++k) ++hist[a.next()];
  for (std::size_t i = 0; i < 3; ++i)
    EXPECT_NEAR(hist[i] / 3e5, d[i], 5 * std::sqrt(d[i] / 3e5));
  EXPECT_EQ(a.drawn(), 300000u);
}

TEST(RejectionSampling, FullSupportPassesThrough) {
  Sampler s(DiscreteDistribution::uniform(4), 2);
  const RejectionSample r = conditional_rejection_sample(s, IndexSet::full(4), 500, 10000);
  EXPECT_EQ(r.samples.size(), 500u);
  EXPECT_EQ(r.consumed, 500u);
}

TEST(RejectionSampling, HalfSupportCostsTwice) {
  Sampler s(DiscreteDistribution::uniform(4), 3);
  const IndexSet half(4, {1, 2});
  const RejectionSample r = conditional_rejection_sample(s, half, 1000, 100000);
  for (std::size_t x : r.samples) EXPECT_TRUE(half.contains(x));
  const double ones = std::count(r.samples.begin(), r.samples.end(), 1u);
  EXPECT_NEAR(ones / 1000, 0.5, 5 * std::sqrt(0.25 / 1000));
  // consumed - 1000 is negative binomial with mean 1000 and variance 2000.
  EXPECT_NEAR(static_cast<double>(r.consumed), 2000, 5 * std::sqrt(2000.0));
}

TEST(RejectionSampling, ZeroMassExhaustsBudget) {
  Sampler s(DiscreteDistribution({1, 0, 0}), 4);
  EXPECT_THROW(conditional_rejection_sample(s, IndexSet(3, {2}), 1, 100), BudgetExhausted);
}

TEST(ConditionalDistribution, Renormalizes) {
  const ConditionalDistribution c(DiscreteDistribution({0.1, 0.2, 0.3, 0.4}), IndexSet(4, {1, 3}));
  EXPECT_NEAR(c.base_mass(), 0.6, 1e-15);
  EXPECT_NEAR(c.distribution()[1], 0.2 / 0.6, 1e-15);
  EXPECT_NEAR(c.distribution()[3], 0.4 / 0.6, 1e-15);
  EXPECT_EQ(c.distribution()[0], 0);
  EXPECT_THROW(ConditionalDistribution(DiscreteDistribution({1, 0}), IndexSet(2, {1})),
               InvalidDistribution);
}

TEST(DistributionFile, RoundTrip) {
  const DiscreteDistribution d({0.125, 0.375, 0.5});
  std::stringstream ss;
  write_distribution(ss, d);
  EXPECT_EQ(ss.str().substr(0, 4), "n=3\n");
  const DiscreteDistribution back = read_distribution(ss);
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(back[i], d[i]);

  std::istringstream bad("n=3\n0.5\n0.5\n");
  EXPECT_THROW(read_distribution(bad), FormatError);
}
