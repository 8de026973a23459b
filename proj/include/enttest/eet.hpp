#pragma once

#include <cstddef>
#include <cstdint>

#include "enttest/testers.hpp"

namespace enttest {

// Per-stage sample counts of the entropy equivalence cascade. Counts are per
// stream unless noted.
struct EetBudgets {
  double eta = 0;                     // mass-floor mixture weight
  std::uint64_t hellinger = 0;        // m1
  std::uint64_t heavy_pool = 0;       // draws from (p+q)/2, shared by all elements
  LowMassBudgets lowmass{};           // m2, m3
  std::uint64_t bias = 0;             // s
  std::uint64_t z = 0;                // m4
  double mass_S_tol = 0;              // eps' / log m4 scale
  std::uint64_t mass_S = 0;
  double eps_l2 = 0;                  // eps' / log m4 scale
  std::uint64_t l2 = 0;

  // Planned draws over both streams, excluding the data-dependent
  // conditional TV stage.
  std::uint64_t planned_total() const;
};

struct EetPlan {
  std::size_t n = 0;
  double eps = 0;
  double delta = 0.1;
  double eps_internal = 0;  // eps / c_split
  EetBudgets budgets;
  ThresholdConfig cfg;
};

// Throws ParameterOutOfRange unless eps lies in (0, 1/2] and n >= 1.
EetPlan make_eet_plan(std::size_t n, double eps, double delta, const ThresholdConfig& cfg);

TestVerdict run_eet(SampleStream& sp, SampleStream& sq, const EetPlan& plan);

// Root of x log(n / x) = eps on (0, min(1, n / e)].
double solve_eps_tv(std::size_t n, double eps);

TestVerdict run_eet_tv_baseline(SampleStream& sp, SampleStream& sq, std::size_t n, double eps,
                                double delta, const ThresholdConfig& cfg);

enum class Branch { eet, tv_baseline };

const char* branch_name(Branch b);

// Closed-form sample complexities with unit constants:
// n^{3/4}/eps + log^2(n/eps)/eps^2 and max{n^{2/3}/eps^{4/3}, sqrt(n)/eps^2}.
double closed_form_eet_budget(std::size_t n, double eps);
double closed_form_tv_budget(std::size_t n, double eps);
Branch select_branch(std::size_t n, double eps);

TestVerdict run_eet_combined(SampleStream& sp, SampleStream& sq, std::size_t n, double eps,
                             double delta, const ThresholdConfig& cfg);

// Multiplies every sample multiplier by kappa.
ThresholdConfig scale_budgets(const ThresholdConfig& cfg, double kappa);

}  // namespace enttest
