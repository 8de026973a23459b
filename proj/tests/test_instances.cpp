#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "enttest/instances.hpp"
#include "enttest/stats.hpp"

using namespace enttest;

namespace {

// Upper 1% point of chi-square with k degrees of freedom (Wilson-Hilferty).
double chi2_crit_01(double k) {
  const double z = 2.3263478740408408;
  const double a = 2 / (9 * k);
  return k * std::pow(1 - a + z * std::sqrt(a), 3);
}

std::vector<double> marginal(const JointPair& j, bool a_side) {
  std::vector<double> out(a_side ? j.k_a : j.k_c, 0.0);
  for (std::size_t a = 0; a < j.k_a; ++a)
    for (std::size_t c = 0; c < j.k_c; ++c) out[a_side ? a : c] += j.joint[a * j.k_c + c];
  return out;
}

}  // namespace

TEST(CorrelatedPair, Examples) {
  const JointPair zero = make_correlated_pair(8, 2, 0);
  EXPECT_EQ(zero.weight, 0);
  EXPECT_NEAR(mutual_information(zero), 0, 1e-15);
  const DiscreteDistribution prod = product_of_marginals(zero);
  for (std::size_t i = 0; i < prod.size(); ++i) EXPECT_NEAR(zero.joint[i], prod[i], 1e-15);

  const JointPair full = make_correlated_pair(2, 2, std::log(2.0));
  EXPECT_NEAR(full.joint[0b00], 0.5, 1e-9);
  EXPECT_NEAR(full.joint[0b11], 0.5, 1e-9);
  EXPECT_NEAR(full.joint[0b01] + full.joint[0b10], 0, 1e-9);

  const JointPair mid = make_correlated_pair(1024, 2, 0.3);
  EXPECT_NEAR(mutual_information(mid), 0.3, 1e-9);
  EXPECT_GT(mid.weight, 0);
  EXPECT_LT(mid.weight, 1);

  EXPECT_THROW(make_correlated_pair(1024, 2, 0.8), Unachievable);
}

TEST(CorrelatedPair, MarginalsUnchangedByWeight) {
  const JointPair a = make_correlated_pair(16, 4, 0.2), b = make_correlated_pair(16, 4, 1.0);
  const auto ma = marginal(a, true), mb = marginal(b, true);
  const auto ca = marginal(a, false), cb = marginal(b, false);
  for (std::size_t i = 0; i < ma.size(); ++i) EXPECT_NEAR(ma[i], mb[i], 1e-12);
  for (std::size_t i = 0; i < ca.size(); ++i) EXPECT_NEAR(ca[i], cb[i], 1e-12);
}

TEST(MiReduction, EntropyGapEqualsMutualInformation) {
  for (double target : {0.0, 0.1, 0.3}) {
    const JointPair j = make_correlated_pair(64, 2, target);
    const double gap = entropy(product_of_marginals(j)) - entropy(j.joint);
    EXPECT_NEAR(gap, target, 1e-9);
  }
  const JointPair bits = make_correlated_pair(2, 2, std::log(2.0));
  EXPECT_NEAR(entropy(product_of_marginals(bits)) - entropy(bits.joint), std::log(2.0), 1e-9);
}

TEST(MiReduction, BatchConsumesThreeDrawsPerSample) {
  const JointPair j = make_correlated_pair(4, 2, 0.2);
  Sampler s(j.joint, 1);
  const auto [p, q] = mi_reduction_streams(s, 2, 1);
  EXPECT_EQ(p.size(), 1u);
  EXPECT_EQ(q.size(), 1u);
  EXPECT_EQ(s.drawn(), 3u);
  Sampler t(j.joint, 2);
  mi_reduction_streams(t, 2, 500);
  EXPECT_EQ(t.drawn(), 1500u);
}

TEST(MiReduction, BatchPairsFollowIndexRule) {
  const JointPair j = make_correlated_pair(8, 2, 0.3);
  Sampler a(j.joint, 9), b(j.joint, 9);
  const std::uint64_t t = 50;
  const auto [p, q] = mi_reduction_streams(a, 2, t);
  std::vector<std::size_t> raw(3 * t);
  for (auto& x : raw) x = b.next();
  for (std::uint64_t i = 0; i < t; ++i) {
    EXPECT_EQ(p[i], raw[i]);
    EXPECT_EQ(q[i], raw[t + 2 * i] / 2 * 2 + raw[t + 2 * i + 1] % 2);
  }
}

TEST(MiReduction, ProductJointGivesEqualLaws) {
  const JointPair j = make_correlated_pair(4, 2, 0);
  Sampler s(j.joint, 3);
  MiReduction red(s, 4, 2);
  std::vector<double> cp(8, 0), cq(8, 0);
  const int draws = 200000;
  for (int k = 0; k < draws; ++k) {
    ++cp[red.p().next()];
    ++cq[red.q().next()];
  }
  EXPECT_EQ(red.source_draws(), 3u * draws);
  for (std::size_t x = 0; x < 8; ++x) {
    const double sd = std::sqrt(2 * j.joint[x] / draws);
    EXPECT_NEAR(cp[x] / draws, cq[x] / draws, 5 * sd);
  }
}

TEST(MiReduction, ProductLawChiSquare) {
  for (auto [ka, kc] : {std::pair<std::size_t, std::size_t>{8, 2}, {16, 4}, {32, 2}}) {
    const JointPair j = make_correlated_pair(ka, kc, 0.4);
    const DiscreteDistribution prod = product_of_marginals(j);
    Sampler s(j.joint, ka * 100 + kc);
    MiReduction red(s, ka, kc);
    const int draws = 100000;
    std::vector<double> counts(ka * kc, 0);
    for (int k = 0; k < draws; ++k) ++counts[red.q().next()];
    double chi2 = 0;
    for (std::size_t x = 0; x < counts.size(); ++x) {
      const double e = draws * prod[x];
      chi2 += (counts[x] - e) * (counts[x] - e) / e;
    }
    EXPECT_LT(chi2, chi2_crit_01(static_cast<double>(counts.size() - 1))) << ka << "x" << kc;
  }
}

TEST(GapPair, Examples) {
  const GapPair half = make_entropy_gap_pair(4096, std::log(2.0));
  std::size_t support = 0;
  for (std::size_t i = 0; i < 4096; ++i)
    if (half.p[i] > 0) {
      ++support;
      EXPECT_NEAR(half.p[i], 1.0 / 2048, 1e-15);
    }
  EXPECT_EQ(support, 2048u);

  const GapPair zero = make_entropy_gap_pair(100, 0);
  EXPECT_EQ(zero.p.probs(), zero.q.probs());

  const GapPair g = make_entropy_gap_pair(1000, 0.3);
  EXPECT_NEAR(entropy(g.q) - entropy(g.p), 0.3, 1e-12);
  EXPECT_NEAR(entropy(g.q), std::log(1000.0), 1e-12);

  EXPECT_THROW(make_entropy_gap_pair(100, std::log(100.0) + 0.1), Unachievable);
}

TEST(GapPair, ExactAcrossSizes) {
  for (std::size_t n : {2u, 17u, 1024u, 16384u, 65536u})
    for (double gap : {0.05, 0.2, 0.5}) {
      if (gap > std::log(static_cast<double>(n))) continue;
      const GapPair g = make_entropy_gap_pair(n, gap);
      EXPECT_NEAR(entropy(g.q) - entropy(g.p), gap, 1e-12) << n << " " << gap;
      EXPECT_NEAR(g.gap, gap, 1e-12);
    }
}

TEST(Families, ZipfAndDense) {
  const DiscreteDistribution z = zipf(100, 1);
  double h = 0;
  for (std::size_t i = 1; i <= 100; ++i) h += 1.0 / i;
  EXPECT_NEAR(z[0], 1 / h, 1e-15);
  EXPECT_NEAR(z[9], 0.1 / h, 1e-15);
  Rng a(5), b(5);
  EXPECT_EQ(random_dense(50, a).probs(), random_dense(50, b).probs());
}

TEST(Certificates, RoundTripAndPromise) {
  const auto dir = std::filesystem::temp_directory_path() / "enttest_cert_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "gap.txt").string();
  const GapPair g = make_entropy_gap_pair(64, 0.3);
  save_instance(path, g.p, {"entropy_gap", g.gap});
  const Certificate c = load_certificate(path);
  EXPECT_EQ(c.kind, "entropy_gap");
  EXPECT_DOUBLE_EQ(c.value, g.gap);
  EXPECT_EQ(load_distribution(path).probs(), g.p.probs());
  EXPECT_NO_THROW(require_promise(c, 0.3 - 1e-9));
  EXPECT_THROW(require_promise(c, 0.31), Unachievable);
  std::filesystem::remove_all(dir);
}
