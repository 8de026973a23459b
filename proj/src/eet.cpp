#include "enttest/eet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace enttest {

namespace {

std::uint64_t ceil_budget(double x) {
  if (!std::isfinite(x) || x > 1e18) throw ParameterOutOfRange("sample budget overflows");
  return static_cast<std::uint64_t>(std::max(1.0, std::ceil(x)));
}

void check_eps(double eps) {
  if (!(eps > 0 && eps <= 0.5)) throw ParameterOutOfRange("eps must lie in (0, 1/2]");
}

void append(TestVerdict& out, TestVerdict&& part) {
  for (TraceEntry& e : part.trace) out.trace.push_back(std::move(e));
}

TestVerdict run_eet_once(SampleStream& sp, SampleStream& sq, const EetPlan& plan) {
  const std::size_t n = plan.n;
  const double e = plan.eps_internal;
  const EetBudgets& b = plan.budgets;
  const ThresholdConfig& cfg = plan.cfg;

  MixStream mp(sp, b.eta), mq(sq, b.eta);
  TestVerdict v;
  auto done = [&]() -> TestVerdict {
    v.samples_used = mp.drawn() + mq.drawn();
    return v;
  };

  TestVerdict h = hellinger_closeness_test(mp, mq, n, e, 0.1, cfg);
  const bool h_rejected = h.rejected();
  append(v, std::move(h));
  if (h_rejected) {
    v.reject(Stage::hellinger);
    return done();
  }

  HalfMixtureStream half(mp, mq);
  const HeavySetResult heavy = identify_heavy_set(half, n, e, cfg);
  const IndexSet& s = heavy.set;
  v.add(Stage::heavy_set, static_cast<double>(s.size()), heavy.thresholds.low,
        "pool=" + std::to_string(heavy.pool_draws));

  TestVerdict low = lowmass_conditional_test(mp, mq, s.complement(), n, e, cfg);
  const bool low_rejected = low.rejected();
  const Stage low_stage = low.fired_stage;
  append(v, std::move(low));
  if (low_rejected) {
    v.reject(low_stage);
    return done();
  }

  if (s.size() == 0) {
    v.add(Stage::z_statistic, 0, cfg.c_Z_threshold * e, "empty heavy set");
    return done();
  }

  {
    const CountPair c = poissonized_counts(mp, mq, b.bias);
    const double t = statistic_T(c, s);
    const double thr = cfg.c_T_threshold * std::sqrt(static_cast<double>(n));
    v.add(Stage::bias_check, t, thr, "s=" + std::to_string(b.bias));
    if (t > thr) {
      v.reject(Stage::bias_check);
      return done();
    }
  }

  {
    const MassCompareResult mc = mass_compare(mp, mq, s, b.mass_S_tol, b.mass_S);
    v.add(Stage::mass_S, std::abs(mc.p_mass_est - mc.q_mass_est), b.mass_S_tol);
    if (mc.diff_flag) {
      v.reject(Stage::mass_S);
      return done();
    }
  }

  {
    TestVerdict l2 = l2_closeness_test_on(mp, mq, s, b.eps_l2, 0.1, cfg);
    const bool l2_rejected = l2.rejected();
    for (TraceEntry& t : l2.trace) {
      t.stage = Stage::l2_S;
      t.note += " eps_l2 scaled by 1/log m4";
      v.trace.push_back(std::move(t));
    }
    if (l2_rejected) {
      v.reject(Stage::l2_S);
      return done();
    }
  }

  {
    const CountPair c = poissonized_counts(mp, mq, b.z);
    const double z = statistic_Z(c, s);
    const double thr = cfg.c_Z_threshold * e;
    v.add(Stage::z_statistic, z, thr, "m4=" + std::to_string(b.z));
    if (std::abs(z) > thr) v.reject(Stage::z_statistic);
  }
  return done();
}

}  // namespace

std::uint64_t EetBudgets::planned_total() const {
  return 2 * hellinger + heavy_pool + 2 * lowmass.mass_samples + 2 * lowmass.compare_samples +
         2 * bias + 2 * mass_S + 2 * l2 + 2 * z;
}

EetPlan make_eet_plan(std::size_t n, double eps, double delta, const ThresholdConfig& cfg) {
  check_eps(eps);
  if (n == 0) throw ParameterOutOfRange("domain size must be at least 1");
  if (!(delta > 0 && delta <= 1)) throw ParameterOutOfRange("delta must lie in (0, 1]");
  cfg.validate();
  EetPlan plan;
  plan.n = n;
  plan.eps = eps;
  plan.delta = delta;
  plan.cfg = cfg;
  const double e = eps / cfg.c_split;
  plan.eps_internal = e;

  const double nd = static_cast<double>(n);
  const double l = log_clamped(nd / e);
  const double n34 = std::pow(nd, 0.75);
  EetBudgets& b = plan.budgets;
  b.eta = mass_floor_eta(n, e);
  b.hellinger = hellinger_budget(n, e, cfg);
  b.heavy_pool = heavy_thresholds(n, e, cfg).pool;
  b.lowmass = lowmass_budgets(n, e, cfg);
  b.bias = ceil_budget(cfg.mult.bias * n34 * l / e);
  b.z = ceil_budget(cfg.mult.z * (n34 / e + l * l / (e * e)));
  const double log_m4 = log_clamped(static_cast<double>(b.z));
  b.mass_S_tol = cfg.c_massS_diff * e / log_m4;
  b.mass_S = ceil_budget(cfg.mult.mass_S / (b.mass_S_tol * b.mass_S_tol));
  b.eps_l2 = cfg.c_l2_eps * e / log_m4;
  b.l2 = l2_budget(b.eps_l2, cfg);
  return plan;
}

TestVerdict run_eet(SampleStream& sp, SampleStream& sq, const EetPlan& plan) {
  if (sp.domain() != plan.n || sq.domain() != plan.n)
    throw DomainMismatch("stream domain differs from the plan");
  return amplify(plan.delta, [&] { return run_eet_once(sp, sq, plan); });
}

double solve_eps_tv(std::size_t n, double eps) {
  check_eps(eps);
  const double nd = static_cast<double>(n);
  const double hi_bound = std::min(1.0, nd / std::numbers::e);
  auto f = [nd](double x) { return x * std::log(nd / x); };
  if (f(hi_bound) <= eps) return hi_bound;
  double lo = 0, hi = hi_bound;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < eps ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

TestVerdict run_eet_tv_baseline(SampleStream& sp, SampleStream& sq, std::size_t n, double eps,
                                double delta, const ThresholdConfig& cfg) {
  check_eps(eps);
  const double eps_tv = solve_eps_tv(n, eps);
  TestVerdict v = tv_closeness_test(sp, sq, n, eps_tv, delta, cfg);
  v.trace.insert(v.trace.begin(), {Stage::tv_test, eps_tv, eps, "eps_tv from x log(n/x) = eps"});
  return v;
}

const char* branch_name(Branch b) { return b == Branch::eet ? "eet" : "tv_baseline"; }

double closed_form_eet_budget(std::size_t n, double eps) {
  const double nd = static_cast<double>(n);
  const double l = log_clamped(nd / eps);
  return std::pow(nd, 0.75) / eps + l * l / (eps * eps);
}

double closed_form_tv_budget(std::size_t n, double eps) {
  const double nd = static_cast<double>(n);
  return std::max(std::pow(nd, 2.0 / 3) / std::pow(eps, 4.0 / 3), std::sqrt(nd) / (eps * eps));
}

Branch select_branch(std::size_t n, double eps) {
  return closed_form_eet_budget(n, eps) < closed_form_tv_budget(n, eps) ? Branch::eet
                                                                        : Branch::tv_baseline;
}

TestVerdict run_eet_combined(SampleStream& sp, SampleStream& sq, std::size_t n, double eps,
                             double delta, const ThresholdConfig& cfg) {
  check_eps(eps);
  const Branch br = select_branch(n, eps);
  TestVerdict v = br == Branch::eet ? run_eet(sp, sq, make_eet_plan(n, eps, delta, cfg))
                                    : run_eet_tv_baseline(sp, sq, n, eps, delta, cfg);
  v.trace.insert(v.trace.begin(), {Stage::branch_select, closed_form_eet_budget(n, eps),
                                   closed_form_tv_budget(n, eps),
                                   std::string("branch=") + branch_name(br)});
  return v;
}

ThresholdConfig scale_budgets(const ThresholdConfig& cfg, double kappa) {
  if (!(kappa > 0)) throw ParameterOutOfRange("budget scale must be positive");
  ThresholdConfig out = cfg;
  SampleMultipliers& m = out.mult;
  for (double* f : {&m.coin, &m.heavy, &m.hellinger, &m.tv, &m.l2, &m.lowmass_mass,
                    &m.mass_compare, &m.bias, &m.mass_S, &m.z, &m.bn_closeness, &m.bn_identity})
    *f *= kappa;
  return out;
}

}  // namespace enttest
