#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "enttest/dist.hpp"
#include "enttest/stats.hpp"

namespace enttest {

// Scale factors applied to each sub-test's asymptotic sample budget.
struct SampleMultipliers {
  // Coin test: coin * log(1/delta) / (alpha eps^2) bits.
  double coin = 8;
  double heavy = 2;
  double hellinger = 1;
  double tv = 1;
  double l2 = 16;
  double lowmass_mass = 8;
  double mass_compare = 16;
  double bias = 1;
  double mass_S = 1;
  double z = 4;
  double bn_closeness = 4;
  double bn_identity = 64;
};

// Every constant the analysis leaves inside O(.) and Omega(.) terms. Defaults
// are the frozen calibrated values.
struct ThresholdConfig {
  // T-statistic thresholds in units of sqrt(2 min{k, m}), the null
  // standard-deviation bound.
  double c_hellinger_reject = 3;
  double c_tv_reject = 3;
  // Heavy-set cut-offs C1 <= C2 / 2 at eps / (n^{3/4} log(n/eps)).
  double c_heavy_low = 8;
  double c_heavy_high = 16;
  // Low-mass cascade: mass threshold, mass-difference tolerance and the
  // conditional TV distance, each a multiple of eps / log(n/eps).
  double c_lowmass_mass = 2;
  double c_mass_diff = 1;
  double c_lowmass_tv = 1;
  // Raw draws allowed per requested conditional sample, relative to 1/mass.
  double c_rejection_cap = 4;
  // Bias check: reject when T exceeds c_T sqrt(n).
  double c_T_threshold = 4.5;
  // l2 check: distance eps_l2 = c_l2_eps eps / log m, reject when the
  // unbiased l2 estimate exceeds c_l2_threshold eps_l2^2.
  double c_l2_eps = 1;
  double c_l2_threshold = 0.5;
  // |p(S) - q(S)| tolerance as a multiple of eps / log m.
  double c_massS_diff = 1;
  // Final check: reject when |Z| exceeds c_Z eps / c_split.
  double c_Z_threshold = 4;
  // Entropy decomposition constant (oracle checks only).
  double c_dec = 4;
  // Internal accuracy of the EET cascade is eps / c_split.
  double c_split = 8;
  // Bayes-net local accuracies eps1 = c eps^2 / n and
  // eps2 = c eps^2 / (d n log(dn/eps)).
  double c_bn_eps1 = 8;
  double c_bn_eps2 = 1;
  // Identity variant: chi-square statistic threshold in null-sd units.
  double c_identity_reject = 3;
  SampleMultipliers mult;

  void validate() const;
};

// `key = value` lines with `#` comments; unknown keys are errors.
ThresholdConfig read_config(std::istream& is);
ThresholdConfig load_config(const std::string& path);
void write_config(std::ostream& os, const ThresholdConfig& cfg,
                  const std::vector<std::string>& header_comments = {});
std::vector<std::string> config_keys();
double& config_field(ThresholdConfig& cfg, const std::string& key);

enum class Decision { accept, reject };

enum class Stage {
  none,
  hellinger,
  heavy_set,
  lowmass_small,
  lowmass_split,
  lowmass_mass_diff,
  lowmass_tv,
  lowmass_budget,
  bias_check,
  mass_S,
  l2_S,
  z_statistic,
  tv_test,
  l2_test,
  branch_select,
  bn_local_eet,
  bn_local_hellinger,
  bn_identity_chi,
  bn_identity_entropy,
};

const char* stage_name(Stage s);

struct TraceEntry {
  Stage stage;
  double statistic;
  double threshold;
  std::string note;
};

struct TestVerdict {
  Decision decision = Decision::accept;
  Stage fired_stage = Stage::none;  // set exactly when decision == reject
  std::uint64_t samples_used = 0;
  std::vector<TraceEntry> trace;

  bool rejected() const { return decision == Decision::reject; }
  void add(Stage s, double statistic, double threshold, std::string note = {}) {
    trace.push_back({s, statistic, threshold, std::move(note)});
  }
  void reject(Stage s) {
    decision = Decision::reject;
    fired_stage = s;
  }
};

// Number of majority-vote repetitions: ceil(18 ln(1/delta)) when
// delta < 1/10, else 1.
std::size_t amplification_reps(double delta);

// Runs `once` the required number of times and takes the majority; ties
// accept. Sample counts and traces are concatenated.
TestVerdict amplify(double delta, const std::function<TestVerdict()>& once);

enum class CoinOutcome { below, above };

struct CoinResult {
  CoinOutcome outcome;
  std::uint64_t bits;
  double mean;
};

std::uint64_t coin_bits_needed(double alpha, double eps, double delta, const ThresholdConfig& cfg);

// Distinguishes bias <= alpha from bias >= alpha (1 + eps); the cut is at
// alpha (1 + eps / 2).
CoinResult coin_bias_test(const std::function<bool()>& bit, double alpha, double eps,
                          double delta, const ThresholdConfig& cfg);

struct HeavyThresholds {
  double tau;       // eps / (n^{3/4} log(n/eps))
  double low;       // C1 tau
  double high;      // C2 tau
  double alpha;     // C1 tau / 2, the mixture-mass threshold of the coin test
  double coin_eps;  // min(1, C2 / C1 - 1)
  std::uint64_t pool;
};

HeavyThresholds heavy_thresholds(std::size_t n, double eps, const ThresholdConfig& cfg);

struct HeavySetResult {
  IndexSet set;
  HeavyThresholds thresholds;
  std::uint64_t pool_draws;
};

// One shared pool of draws from (p+q)/2; every element runs its coin test on
// the same pool.
HeavySetResult identify_heavy_set(SampleStream& mix, std::size_t n, double eps,
                                  const ThresholdConfig& cfg);

struct MassCompareResult {
  double p_mass_est;
  double q_mass_est;
  bool diff_flag;
};

MassCompareResult mass_compare(SampleStream& sp, SampleStream& sq, const IndexSet& s,
                               double tol, std::uint64_t budget);

std::uint64_t hellinger_budget(std::size_t n, double eps_h, const ThresholdConfig& cfg);
std::uint64_t tv_budget(std::size_t n, double eps_tv, const ThresholdConfig& cfg);
std::uint64_t l2_budget(double eps_l2, const ThresholdConfig& cfg);

// Null-sd threshold c sqrt(2 min{k, m}) for the T statistic.
double t_threshold(double c, std::size_t k, std::uint64_t m);

TestVerdict hellinger_closeness_test(SampleStream& sp, SampleStream& sq, std::size_t n,
                                     double eps_h, double delta, const ThresholdConfig& cfg);

TestVerdict tv_closeness_test(SampleStream& sp, SampleStream& sq, std::size_t n, double eps_tv,
                              double delta, const ThresholdConfig& cfg);

// TV test restricted to `domain`; the streams must only emit members of it.
TestVerdict tv_closeness_test_on(SampleStream& sp, SampleStream& sq, const IndexSet& domain,
                                 double eps_tv, double delta, const ThresholdConfig& cfg);

TestVerdict l2_closeness_test(SampleStream& sp, SampleStream& sq, std::size_t n, double eps_l2,
                              double delta, const ThresholdConfig& cfg);

// l2 test of the restrictions of p and q to `set`.
TestVerdict l2_closeness_test_on(SampleStream& sp, SampleStream& sq, const IndexSet& set,
                                 double eps_l2, double delta, const ThresholdConfig& cfg);

struct LowMassBudgets {
  double mass_threshold;  // c_lowmass_mass eps / log(n/eps)
  double diff_tol;        // c_mass_diff eps / log(n/eps)
  std::uint64_t mass_samples;     // m2 = O(log(n/eps)/eps)
  std::uint64_t compare_samples;  // m3 = O(log^2(n/eps)/eps^2)
};

LowMassBudgets lowmass_budgets(std::size_t n, double eps, const ThresholdConfig& cfg);

// Test 1 cascade on the light elements sbar.
TestVerdict lowmass_conditional_test(SampleStream& sp, SampleStream& sq, const IndexSet& sbar,
                                     std::size_t n, double eps, const ThresholdConfig& cfg);

}  // namespace enttest
