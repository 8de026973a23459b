#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "enttest/dist.hpp"

namespace enttest {

// Poisson variate: inversion below lambda = 30, PTRS transformed rejection
// above.
std::uint64_t poisson_draw(Rng& rng, double lambda);

struct CountEntry {
  std::uint32_t index;
  std::uint32_t x;
  std::uint32_t y;
};

// Per-element counts of two sample streams, stored sparsely (only indices
// with x + y > 0, sorted by index).
class CountPair {
 public:
  CountPair(std::size_t n, std::uint64_t m_nominal, std::vector<CountEntry> nonzero);

  static CountPair from_dense(const std::vector<std::uint32_t>& x,
                              const std::vector<std::uint32_t>& y, std::uint64_t m_nominal);

  std::size_t n() const { return n_; }
  std::uint64_t m_nominal() const { return m_; }
  std::uint64_t total_x() const { return total_x_; }
  std::uint64_t total_y() const { return total_y_; }
  const std::vector<CountEntry>& nonzero() const { return nz_; }

  std::uint32_t x(std::size_t i) const;
  std::uint32_t y(std::size_t i) const;

  // Sums of x and y over s.
  std::uint64_t x_mass(const IndexSet& s) const;
  std::uint64_t y_mass(const IndexSet& s) const;

 private:
  const CountEntry* find(std::size_t i) const;

  std::size_t n_;
  std::uint64_t m_;
  std::uint64_t total_x_ = 0;
  std::uint64_t total_y_ = 0;
  std::vector<CountEntry> nz_;
};

// Draws N_p ~ Poi(m) samples from sp and N_q ~ Poi(m) from sq.
CountPair poissonized_counts(SampleStream& sp, SampleStream& sq, std::uint64_t m);

// Exactly m samples per stream (a fixed-size multiset).
CountPair fixed_counts(SampleStream& sp, SampleStream& sq, std::uint64_t m);

// sum_{i in s} ((X_i - Y_i)^2 - (X_i + Y_i)) / (X_i + Y_i), zero terms when
// X_i + Y_i = 0.
double statistic_T(const CountPair& c, const IndexSet& s);

// sum_{i in s} (X_i - Y_i) / m * log(1 / (X_i + Y_i)), zero terms when
// X_i + Y_i = 0.
double statistic_Z(const CountPair& c, const IndexSet& s);

// sum_{i in s} ((X_i - Y_i)^2 - X_i - Y_i); unbiased for m^2 ||p_s - q_s||_2^2.
double statistic_l2(const CountPair& c, const IndexSet& s);

double expected_T_closed_form(const DiscreteDistribution& p, const DiscreteDistribution& q,
                              double s, const IndexSet& set);

// E[log(J + 1)] for J ~ Poi(lambda), truncated so the neglected tail is below
// tail_tol.
double expected_log1p_poisson(double lambda, double tail_tol);

double exact_expected_Z(const DiscreteDistribution& p, const DiscreteDistribution& q,
                        double m, const IndexSet& set, double tail_tol);

// sum_{i in s} |p_i - q_i| / (m (p_i + q_i)) and the bias target
// sum_{i in s} (p_i - q_i) log(1 / (m (p_i + q_i))).
double z_bias_bound(const DiscreteDistribution& p, const DiscreteDistribution& q, double m,
                    const IndexSet& set);
double z_bias_target(const DiscreteDistribution& p, const DiscreteDistribution& q, double m,
                     const IndexSet& set);

// C * (log^2 m * ||p - q||_2^2 + log^2 m / m) with the constant left to the
// caller.
double z_variance_envelope(const DiscreteDistribution& p, const DiscreteDistribution& q,
                           double m);

// Upper bound 2 min{n, s} + 5 s sum (p_i - q_i)^2 / (p_i + q_i) on Var[T].
double t_variance_bound(const DiscreteDistribution& p, const DiscreteDistribution& q, double s);

struct FactorialMomentResult {
  double lhs_mc = 0;
  double rhs_mc = 0;
  double std_error = 0;  // standard error of lhs_mc - rhs_mc
};

// Monte Carlo estimates of E[(X)_order f(X)] and lambda^order E[f(X + order)]
// for X ~ Poi(lambda), each from `trials` independent draws.
FactorialMomentResult factorial_moment_check(double lambda, unsigned order,
                                             const std::function<double(double)>& f,
                                             std::uint64_t trials, Rng& rng);

}  // namespace enttest
