#include "enttest/testers.hpp"

#include <algorithm>
#include <cmath>

namespace enttest {

namespace {

std::uint64_t ceil_count(double x) {
  if (!std::isfinite(x) || x > 1e18) throw ParameterOutOfRange("sample budget overflows");
  return static_cast<std::uint64_t>(std::max(1.0, std::ceil(x)));
}

void check_delta(double delta) {
  if (!(delta > 0 && delta <= 1)) throw ParameterOutOfRange("delta must lie in (0, 1]");
}

void check_streams(SampleStream& sp, SampleStream& sq, std::size_t n) {
  if (sp.domain() != n || sq.domain() != n) throw DomainMismatch("stream domain differs from n");
}

std::uint64_t drawn_total(SampleStream& sp, SampleStream& sq) { return sp.drawn() + sq.drawn(); }

// Empirical mass of s in `count` draws.
std::uint64_t count_in(SampleStream& st, const IndexSet& s, std::uint64_t count) {
  std::vector<std::uint32_t> hist(st.domain(), 0);
  st.accumulate(count, hist);
  std::uint64_t acc = 0;
  for (std::size_t i : s.members()) acc += hist[i];
  return acc;
}

// One Poissonized T test on `set`; rejects when T > threshold.
TestVerdict t_test_once(SampleStream& sp, SampleStream& sq, const IndexSet& set, std::uint64_t m,
                        double c, Stage stage) {
  const std::uint64_t before = drawn_total(sp, sq);
  TestVerdict v;
  const CountPair counts = poissonized_counts(sp, sq, m);
  const double t = statistic_T(counts, set);
  const double thr = t_threshold(c, set.size(), m);
  v.add(stage, t, thr, "m=" + std::to_string(m));
  if (t > thr) v.reject(stage);
  v.samples_used = drawn_total(sp, sq) - before;
  return v;
}

}  // namespace

const char* stage_name(Stage s) {
  switch (s) {
    case Stage::none: return "none";
    case Stage::hellinger: return "hellinger";
    case Stage::heavy_set: return "heavy_set";
    case Stage::lowmass_small: return "lowmass_small";
    case Stage::lowmass_split: return "lowmass_split";
    case Stage::lowmass_mass_diff: return "lowmass_mass_diff";
    case Stage::lowmass_tv: return "lowmass_tv";
    case Stage::lowmass_budget: return "lowmass_budget";
    case Stage::bias_check: return "bias_check";
    case Stage::mass_S: return "mass_S";
    case Stage::l2_S: return "l2_S";
    case Stage::z_statistic: return "z_statistic";
    case Stage::tv_test: return "tv_test";
    case Stage::l2_test: return "l2_test";
    case Stage::branch_select: return "branch_select";
    case Stage::bn_local_eet: return "bn_local_eet";
    case Stage::bn_local_hellinger: return "bn_local_hellinger";
    case Stage::bn_identity_chi: return "bn_identity_chi";
    case Stage::bn_identity_entropy: return "bn_identity_entropy";
  }
  return "unknown";
}

std::size_t amplification_reps(double delta) {
  check_delta(delta);
  if (delta >= 0.1) return 1;
  return static_cast<std::size_t>(std::ceil(18 * std::log(1 / delta)));
}

TestVerdict amplify(double delta, const std::function<TestVerdict()>& once) {
  const std::size_t k = amplification_reps(delta);
  if (k == 1) return once();
  TestVerdict out;
  std::size_t rejects = 0;
  Stage first = Stage::none;
  for (std::size_t r = 0; r < k; ++r) {
    TestVerdict v = once();
    out.samples_used += v.samples_used;
    if (v.rejected()) {
      ++rejects;
      if (first == Stage::none) first = v.fired_stage;
    }
    for (TraceEntry& e : v.trace) out.trace.push_back(std::move(e));
  }
  if (2 * rejects > k) out.reject(first);
  return out;
}

std::uint64_t coin_bits_needed(double alpha, double eps, double delta, const ThresholdConfig& cfg) {
  return ceil_count(cfg.mult.coin * std::max(1.0, std::log(1 / delta)) / (alpha * eps * eps));
}

CoinResult coin_bias_test(const std::function<bool()>& bit, double alpha, double eps,
                          double delta, const ThresholdConfig& cfg) {
  if (!(alpha > 0 && alpha <= 0.5)) throw ParameterOutOfRange("alpha must lie in (0, 1/2]");
  if (!(eps > 0 && eps <= 1)) throw ParameterOutOfRange("eps must lie in (0, 1]");
  check_delta(delta);
  const std::uint64_t bits = coin_bits_needed(alpha, eps, delta, cfg);
  std::uint64_t ones = 0;
  for (std::uint64_t k = 0; k < bits; ++k) ones += bit() ? 1 : 0;
  const double mean = static_cast<double>(ones) / static_cast<double>(bits);
  const CoinOutcome out = mean < alpha * (1 + eps / 2) ? CoinOutcome::below : CoinOutcome::above;
  return {out, bits, mean};
}

HeavyThresholds heavy_thresholds(std::size_t n, double eps, const ThresholdConfig& cfg) {
  if (!(eps > 0)) throw InvalidEpsilon("eps must be positive");
  const double nd = static_cast<double>(n);
  HeavyThresholds h;
  h.tau = eps / (std::pow(nd, 0.75) * log_clamped(nd / eps));
  h.low = cfg.c_heavy_low * h.tau;
  h.high = cfg.c_heavy_high * h.tau;
  h.alpha = h.low / 2;
  h.coin_eps = std::min(1.0, cfg.c_heavy_high / cfg.c_heavy_low - 1);
  const double pool =
      cfg.mult.heavy * std::pow(nd, 0.75) * log_clamped(nd / eps) * log_clamped(nd) / eps;
  h.pool = pool > 0 ? ceil_count(pool) : 0;
  return h;
}

HeavySetResult identify_heavy_set(SampleStream& mix, std::size_t n, double eps,
                                  const ThresholdConfig& cfg) {
  if (mix.domain() != n) throw DomainMismatch("mixture stream domain differs from n");
  if (!(cfg.mult.heavy > 0)) throw ParameterOutOfRange("heavy-set sample multiplier is zero");
  const HeavyThresholds h = heavy_thresholds(n, eps, cfg);
  std::vector<std::uint32_t> hist(n, 0);
  mix.accumulate(h.pool, hist);
  const double cut = h.alpha * (1 + h.coin_eps / 2) * static_cast<double>(h.pool);
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < n; ++i)
    if (static_cast<double>(hist[i]) >= cut) members.push_back(i);
  return {IndexSet(n, std::move(members)), h, h.pool};
}

MassCompareResult mass_compare(SampleStream& sp, SampleStream& sq, const IndexSet& s, double tol,
                               std::uint64_t budget) {
  if (budget == 0) throw ParameterOutOfRange("mass comparison budget must be at least 1");
  if (sp.domain() != s.universe() || sq.domain() != s.universe())
    throw DomainMismatch("index set universe differs from stream domain");
  const double b = static_cast<double>(budget);
  MassCompareResult r;
  r.p_mass_est = static_cast<double>(count_in(sp, s, budget)) / b;
  r.q_mass_est = static_cast<double>(count_in(sq, s, budget)) / b;
  r.diff_flag = std::abs(r.p_mass_est - r.q_mass_est) > tol;
  return r;
}

std::uint64_t hellinger_budget(std::size_t n, double eps_h, const ThresholdConfig& cfg) {
  const double nd = static_cast<double>(n);
  return ceil_count(cfg.mult.hellinger *
                    std::min(std::pow(nd, 0.75) / eps_h, std::pow(nd, 2.0 / 3) / std::pow(eps_h, 4.0 / 3)));
}

std::uint64_t tv_budget(std::size_t n, double eps_tv, const ThresholdConfig& cfg) {
  const double nd = static_cast<double>(n);
  return ceil_count(cfg.mult.tv * std::max(std::pow(nd, 2.0 / 3) / std::pow(eps_tv, 4.0 / 3),
                                           std::sqrt(nd) / (eps_tv * eps_tv)));
}

std::uint64_t l2_budget(double eps_l2, const ThresholdConfig& cfg) {
  return ceil_count(cfg.mult.l2 / (eps_l2 * eps_l2));
}

double t_threshold(double c, std::size_t k, std::uint64_t m) {
  return c * std::sqrt(2 * std::min(static_cast<double>(k), static_cast<double>(m)));
}

TestVerdict hellinger_closeness_test(SampleStream& sp, SampleStream& sq, std::size_t n,
                                     double eps_h, double delta, const ThresholdConfig& cfg) {
  if (!(eps_h > 0 && eps_h <= 1)) throw ParameterOutOfRange("eps_h must lie in (0, 1]");
  check_delta(delta);
  check_streams(sp, sq, n);
  const IndexSet all = IndexSet::full(n);
  const std::uint64_t m = hellinger_budget(n, eps_h, cfg);
  return amplify(delta, [&] {
    return t_test_once(sp, sq, all, m, cfg.c_hellinger_reject, Stage::hellinger);
  });
}

TestVerdict tv_closeness_test(SampleStream& sp, SampleStream& sq, std::size_t n, double eps_tv,
                              double delta, const ThresholdConfig& cfg) {
  check_streams(sp, sq, n);
  return tv_closeness_test_on(sp, sq, IndexSet::full(n), eps_tv, delta, cfg);
}

TestVerdict tv_closeness_test_on(SampleStream& sp, SampleStream& sq, const IndexSet& domain,
                                 double eps_tv, double delta, const ThresholdConfig& cfg) {
  if (!(eps_tv > 0 && eps_tv <= 1)) throw ParameterOutOfRange("eps_tv must lie in (0, 1]");
  check_delta(delta);
  if (sp.domain() != domain.universe() || sq.domain() != domain.universe())
    throw DomainMismatch("domain universe differs from stream domain");
  TestVerdict v;
  if (domain.size() <= 1) {
    v.add(Stage::tv_test, 0, 0, "single-atom domain");
    return v;
  }
  const std::uint64_t m = tv_budget(domain.size(), eps_tv, cfg);
  return amplify(delta, [&] {
    return t_test_once(sp, sq, domain, m, cfg.c_tv_reject, Stage::tv_test);
  });
}

TestVerdict l2_closeness_test(SampleStream& sp, SampleStream& sq, std::size_t n, double eps_l2,
                              double delta, const ThresholdConfig& cfg) {
  check_streams(sp, sq, n);
  return l2_closeness_test_on(sp, sq, IndexSet::full(n), eps_l2, delta, cfg);
}

TestVerdict l2_closeness_test_on(SampleStream& sp, SampleStream& sq, const IndexSet& set,
                                 double eps_l2, double delta, const ThresholdConfig& cfg) {
  if (!(eps_l2 > 0)) throw ParameterOutOfRange("eps_l2 must be positive");
  check_delta(delta);
  if (sp.domain() != set.universe() || sq.domain() != set.universe())
    throw DomainMismatch("index set universe differs from stream domain");
  TestVerdict v;
  if (eps_l2 * eps_l2 >= 2) {
    v.add(Stage::l2_test, 0, eps_l2 * eps_l2, "distance exceeds the l2 diameter");
    return v;
  }
  const std::uint64_t m = l2_budget(eps_l2, cfg);
  const double thr = cfg.c_l2_threshold * eps_l2 * eps_l2;
  return amplify(delta, [&] {
    const std::uint64_t before = drawn_total(sp, sq);
    TestVerdict once;
    const CountPair counts = poissonized_counts(sp, sq, m);
    const double md = static_cast<double>(m);
    const double est = statistic_l2(counts, set) / (md * md);
    once.add(Stage::l2_test, est, thr, "m=" + std::to_string(m));
    if (est > thr) once.reject(Stage::l2_test);
    once.samples_used = drawn_total(sp, sq) - before;
    return once;
  });
}

LowMassBudgets lowmass_budgets(std::size_t n, double eps, const ThresholdConfig& cfg) {
  if (!(eps > 0)) throw InvalidEpsilon("eps must be positive");
  const double l = log_clamped(static_cast<double>(n) / eps);
  LowMassBudgets b;
  b.mass_threshold = cfg.c_lowmass_mass * eps / l;
  b.diff_tol = cfg.c_mass_diff * eps / l;
  b.mass_samples = ceil_count(cfg.mult.lowmass_mass * l / eps);
  b.compare_samples = ceil_count(cfg.mult.mass_compare * l * l / (eps * eps));
  return b;
}

TestVerdict lowmass_conditional_test(SampleStream& sp, SampleStream& sq, const IndexSet& sbar,
                                     std::size_t n, double eps, const ThresholdConfig& cfg) {
  check_streams(sp, sq, n);
  if (sbar.universe() != n) throw DomainMismatch("light set universe differs from n");
  const std::uint64_t before = drawn_total(sp, sq);
  TestVerdict v;
  auto finish = [&]() -> TestVerdict {
    v.samples_used = drawn_total(sp, sq) - before;
    return v;
  };
  if (sbar.size() == 0) {
    v.add(Stage::lowmass_small, 0, 0, "empty light set");
    return finish();
  }

  const LowMassBudgets b = lowmass_budgets(n, eps, cfg);
  const double theta = b.mass_threshold;
  const double m2 = static_cast<double>(b.mass_samples);
  const double p2 = static_cast<double>(count_in(sp, sbar, b.mass_samples)) / m2;
  const double q2 = static_cast<double>(count_in(sq, sbar, b.mass_samples)) / m2;
  const double lo = std::min(p2, q2), hi = std::max(p2, q2);

  if (hi < 1.5 * theta) {
    v.add(Stage::lowmass_small, hi, 1.5 * theta);
    return finish();
  }
  if (hi >= 2 * theta && lo < theta) {
    v.add(Stage::lowmass_split, lo, theta);
    v.reject(Stage::lowmass_split);
    return finish();
  }

  const MassCompareResult mc = mass_compare(sp, sq, sbar, b.diff_tol, b.compare_samples);
  v.add(Stage::lowmass_mass_diff, std::abs(mc.p_mass_est - mc.q_mass_est), b.diff_tol);
  if (mc.diff_flag) {
    v.reject(Stage::lowmass_mass_diff);
    return finish();
  }

  const double l = log_clamped(static_cast<double>(n) / eps);
  const double q_hat = std::max(mc.q_mass_est, theta / 2);
  const double mass = std::max(std::min(mc.p_mass_est, mc.q_mass_est), theta / 2);
  const double eps_tv = std::min(1.0, cfg.c_lowmass_tv * eps / (q_hat * l));
  const std::uint64_t m_tv = tv_budget(sbar.size(), eps_tv, cfg);
  // Poi(m_tv) accepted draws need about m_tv / mass raw draws.
  const std::uint64_t cap =
      ceil_count(cfg.c_rejection_cap * static_cast<double>(m_tv) / mass) + 64;
  ConditionalStream cp(sp, sbar, cap), cq(sq, sbar, cap);
  try {
    TestVerdict tv = tv_closeness_test_on(cp, cq, sbar, eps_tv, 0.1, cfg);
    for (TraceEntry& e : tv.trace) {
      e.stage = Stage::lowmass_tv;
      v.trace.push_back(std::move(e));
    }
    if (tv.rejected()) v.reject(Stage::lowmass_tv);
  } catch (const BudgetExhausted& e) {
    v.add(Stage::lowmass_budget, static_cast<double>(cap), static_cast<double>(cap), e.what());
    v.reject(Stage::lowmass_budget);
  }
  return finish();
}

}  // namespace enttest
