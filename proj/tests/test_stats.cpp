#include <gtest/gtest.h>

#include <cmath>

#include "enttest/stats.hpp"

using namespace enttest;

namespace {

CountPair counts(std::vector<std::uint32_t> x, std::vector<std::uint32_t> y, std::uint64_t m) {
  return CountPair::from_dense(x, y, m);
}

struct Moments {
  double mean = 0, var = 0;
};

template <class F>
Moments replicate(const DiscreteDistribution& p, const DiscreteDistribution& q, double m, int reps,
                  Rng& rng, F stat) {
  std::vector<std::uint32_t> x(p.size()), y(p.size());
  double s = 0, s2 = 0;
  for (int r = 0; r < reps; ++r) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      x[i] = static_cast<std::uint32_t>(poisson_draw(rng, m * p[i]));
      y[i] = static_cast<std::uint32_t>(poisson_draw(rng, m * q[i]));
    }
    const double v = stat(CountPair::from_dense(x, y, static_cast<std::uint64_t>(m)));
    s += v;
    s2 += v * v;
  }
  Moments out;
  out.mean = s / reps;
  out.var = (s2 - reps * out.mean * out.mean) / (reps - 1);
  return out;
}

DiscreteDistribution random_pmf(std::size_t n, Rng& rng) {
  std::vector<double> w(n);
  for (double& v : w) v = uniform01(rng) < 0.3 ? 0.0 : uniform01(rng);
  w[0] += 0.05;
  return DiscreteDistribution::from_weights(std::move(w));
}

}  // namespace

TEST(StatisticT, Examples) {
  const IndexSet all = IndexSet::full(2);
  EXPECT_DOUBLE_EQ(statistic_T(counts({3, 1}, {1, 3}, 4), all), 0.0);
  EXPECT_NEAR(statistic_T(counts({5, 1}, {1, 5}, 6), all), 10.0 / 3, 1e-12);
  EXPECT_EQ(statistic_T(counts({0, 0}, {0, 0}, 6), all), 0.0);
  EXPECT_EQ(statistic_T(counts({5, 1}, {1, 5}, 6), IndexSet::empty(2)), 0.0);
}

TEST(StatisticZ, Examples) {
  EXPECT_EQ(statistic_Z(counts({4, 7}, {4, 7}, 10), IndexSet::full(2)), 0.0);
  EXPECT_NEAR(statistic_Z(counts({6}, {2}, 10), IndexSet::full(1)), -0.8317766, 1e-7);
  EXPECT_NEAR(statistic_Z(counts({4, 2}, {2, 4}, 10), IndexSet::full(2)), 0.0, 1e-15);
}

TEST(StatisticL2, UnbiasedOnDenseCounts) {
  EXPECT_DOUBLE_EQ(statistic_l2(counts({3, 1}, {1, 3}, 4), IndexSet::full(2)), 8 - 8);
  EXPECT_DOUBLE_EQ(statistic_l2(counts({5, 0}, {0, 5}, 5), IndexSet::full(2)), 50 - 10);
}

TEST(CountPair, SparseStorageAndMasses) {
  const CountPair c = counts({0, 2, 0, 1}, {0, 0, 3, 1}, 5);
  EXPECT_EQ(c.nonzero().size(), 3u);
  EXPECT_EQ(c.x(1), 2u);
  EXPECT_EQ(c.y(0), 0u);
  EXPECT_EQ(c.total_x(), 3u);
  EXPECT_EQ(c.total_y(), 4u);
  EXPECT_EQ(c.y_mass(IndexSet(4, {2, 3})), 4u);
}

TEST(ExpectedT, ClosedFormExamples) {
  const DiscreteDistribution a({1, 0}), b({0, 1});
  const IndexSet all = IndexSet::full(2);
  EXPECT_EQ(expected_T_closed_form(a, a, 10, all), 0.0);
  EXPECT_NEAR(expected_T_closed_form(a, b, 10, all), 18.0000908, 1e-7);
  EXPECT_EQ(expected_T_closed_form(a, b, 0, all), 0.0);
}

TEST(ExpectedT, MatchesMonteCarlo) {
  Rng rng(41);
  for (int k = 0; k < 20; ++k) {
    const std::size_t n = 2 + uniform_index(rng, 20);
    const auto p = random_pmf(n, rng), q = k % 4 == 0 ? p : random_pmf(n, rng);
    const double s = 1 + static_cast<double>(uniform_index(rng, 100));
    const IndexSet all = IndexSet::full(n);
    const int reps = 20000;
    const Moments mc = replicate(p, q, s, reps, rng, [&](const CountPair& c) {
      return statistic_T(c, all);
    });
    EXPECT_NEAR(mc.mean, expected_T_closed_form(p, q, s, all), 4 * std::sqrt(mc.var / reps) + 1e-12);
  }
}

TEST(ExpectedT, ZeroMeanUnderNull) {
  Rng rng(42);
  const auto p = DiscreteDistribution::from_weights({1, 2, 3, 4, 5, 6});
  const int reps = 100000;
  const Moments mc = replicate(p, p, 5, reps, rng, [&](const CountPair& c) {
    return statistic_T(c, IndexSet::full(6));
  });
  EXPECT_LE(std::abs(mc.mean), 4 * std::sqrt(mc.var / reps));
}

TEST(VarianceT, WithinCitedBound) {
  Rng rng(43);
  for (int k = 0; k < 10; ++k) {
    const std::size_t n = 2 + uniform_index(rng, 15);
    const auto p = random_pmf(n, rng), q = random_pmf(n, rng);
    const double s = 1 + static_cast<double>(uniform_index(rng, 60));
    const Moments mc = replicate(p, q, s, 20000, rng, [&](const CountPair& c) {
      return statistic_T(c, IndexSet::full(n));
    });
    EXPECT_LE(mc.var, 1.1 * t_variance_bound(p, q, s));
  }
}

TEST(ExactExpectedZ, Examples) {
  const DiscreteDistribution a({0.7, 0.3}), b({0.3, 0.7});
  const IndexSet all = IndexSet::full(2);
  EXPECT_EQ(exact_expected_Z(a, a, 50, all, 1e-12), 0.0);
  EXPECT_EQ(exact_expected_Z(a, b, 0, all, 1e-12), 0.0);

  const double exact = exact_expected_Z(a, b, 50, all, 1e-12);
  Rng rng(44);
  const int reps = 10000000;
  double s = 0, s2 = 0;
  for (int r = 0; r < reps; ++r) {
    // E[Z] by direct sampling of the Poissonized counts.
    const double x0 = static_cast<double>(poisson_draw(rng, 35)), y0 = static_cast<double>(poisson_draw(rng, 15));
    const double x1 = static_cast<double>(poisson_draw(rng, 15)), y1 = static_cast<double>(poisson_draw(rng, 35));
    double z = 0;
    if (x0 + y0 > 0) z += (x0 - y0) / 50 * -std::log(x0 + y0);
    if (x1 + y1 > 0) z += (x1 - y1) / 50 * -std::log(x1 + y1);
    s += z;
    s2 += z * z;
  }
  const double mean = s / reps, se = std::sqrt((s2 / reps - mean * mean) / reps);
  EXPECT_NEAR(mean, exact, 3 * se);
}

TEST(ExactExpectedZ, SeriesMatchesBruteForce) {
  for (double lambda : {0.01, 0.7, 3.0, 25.0, 400.0}) {
    double brute = 0, pmf = std::exp(-lambda);
    for (int j = 0; j < 5000; ++j) {
      brute += pmf * std::log(j + 1.0);
      pmf *= lambda / (j + 1);
    }
    EXPECT_NEAR(expected_log1p_poisson(lambda, 1e-13), brute, 1e-11) << lambda;
  }
}

TEST(ExactExpectedZ, TermCapRaisesNonConvergent) {
  EXPECT_THROW(expected_log1p_poisson(1e14, 1e-12), NonConvergent);
}

TEST(BiasBound, HoldsOnRandomInstances) {
  Rng rng(45);
  for (int k = 0; k < 60; ++k) {
    const std::size_t n = 2 + uniform_index(rng, 19);
    const auto p = random_pmf(n, rng), q = random_pmf(n, rng);
    const double m = 1 + static_cast<double>(uniform_index(rng, 200));
    const IndexSet all = IndexSet::full(n);
    const double gap = std::abs(z_bias_target(p, q, m, all) - exact_expected_Z(p, q, m, all, 1e-13));
    EXPECT_LE(gap, z_bias_bound(p, q, m, all) + 1e-12);
  }
}

TEST(VarianceZ, WithinFrozenEnvelope) {
  Rng rng(46);
  for (int k = 0; k < 5; ++k) {
    const std::size_t n = 2 + uniform_index(rng, 19);
    const auto p = random_pmf(n, rng), q = k % 2 ? p : random_pmf(n, rng);
    const double m = 10 + static_cast<double>(uniform_index(rng, 190));
    const Moments mc = replicate(p, q, m, 20000, rng, [&](const CountPair& c) {
      return statistic_Z(c, IndexSet::full(n));
    });
    EXPECT_LE(mc.var, 16 * z_variance_envelope(p, q, m));
  }
}

TEST(FactorialMoment, Examples) {
  Rng rng(47);
  auto log1p = [](double x) { return std::log1p(x); };
  const auto zero = factorial_moment_check(2.5, 0, log1p, 100000, rng);
  EXPECT_NEAR(zero.lhs_mc, zero.rhs_mc, 3 * zero.std_error + 1e-12);

  const auto one = factorial_moment_check(3, 2, [](double) { return 1.0; }, 200000, rng);
  EXPECT_NEAR(one.lhs_mc, 9, 0.15);
  EXPECT_NEAR(one.rhs_mc, 9, 1e-12);

  const auto r = factorial_moment_check(2, 1, log1p, 1000000, rng);
  EXPECT_LE(std::abs(r.lhs_mc - r.rhs_mc), 3 * r.std_error);
}

TEST(Poissonization, MeanCountMatches) {
  const DiscreteDistribution u = DiscreteDistribution::uniform(2);
  Sampler a(u, 1), b(u, 2);
  double s = 0;
  for (int r = 0; r < 200; ++r) s += poissonized_counts(a, b, 1000000).x(0);
  EXPECT_NEAR(s / 200, 5e5, 3 * std::sqrt(5e5 / 200));
}

TEST(Poissonization, PointMassAndReplay) {
  const DiscreteDistribution pm = DiscreteDistribution::point_mass(3, 1);
  Sampler a(pm, 7), b(pm, 8);
  const CountPair c = poissonized_counts(a, b, 1);
  EXPECT_EQ(c.x(0) + c.x(2), 0u);
  EXPECT_EQ(c.x(1), c.total_x());

  const DiscreteDistribution d({0.2, 0.5, 0.3});
  Sampler a1(d, 3), b1(d, 4), a2(d, 3), b2(d, 4);
  const CountPair c1 = poissonized_counts(a1, b1, 500), c2 = poissonized_counts(a2, b2, 500);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(c1.x(i), c2.x(i));
    EXPECT_EQ(c1.y(i), c2.y(i));
  }
}

TEST(Poissonization, CountsAreUncorrelated) {
  const DiscreteDistribution d({0.3, 0.7});
  Sampler a(d, 11), b(d, 12);
  const int reps = 100000;
  double sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
  for (int r = 0; r < reps; ++r) {
    const CountPair c = poissonized_counts(a, b, 20);
    const double u = c.x(0), v = c.x(1);
    sx += u, sy += v, sxy += u * v, sxx += u * u, syy += v * v;
  }
  const double cov = sxy / reps - (sx / reps) * (sy / reps);
  const double corr = cov / std::sqrt((sxx / reps - sx * sx / reps / reps) * (syy / reps - sy * sy / reps / reps));
  EXPECT_LE(std::abs(corr), 4 / std::sqrt(static_cast<double>(reps)));
}

TEST(PoissonDraw, MatchesPmfAcrossRegimes) {
  Rng rng(48);
  for (double lambda : {0.5, 12.0, 29.5, 30.5, 200.0}) {
    const int reps = 200000;
    double s = 0, s2 = 0;
    for (int r = 0; r < reps; ++r) {
      const double v = static_cast<double>(poisson_draw(rng, lambda));
      s += v;
      s2 += v * v;
    }
    const double mean = s / reps, var = s2 / reps - mean * mean;
    EXPECT_NEAR(mean, lambda, 5 * std::sqrt(lambda / reps)) << lambda;
    EXPECT_NEAR(var / lambda, 1, 0.03) << lambda;
  }
}
