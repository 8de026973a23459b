#include "enttest/stats.hpp"

#include <algorithm>
#include <cmath>

namespace enttest {

namespace {

std::uint64_t poisson_inversion(Rng& rng, double lambda) {
  for (;;) {
    const double u = uniform01(rng);
    double p = std::exp(-lambda);
    double cdf = p;
    std::uint64_t k = 0;
    while (u > cdf) {
      ++k;
      p *= lambda / static_cast<double>(k);
      cdf += p;
      if (p == 0) break;
    }
    if (u <= cdf) return k;
    // u fell into the rounding gap above the computed CDF; redraw.
  }
}

// Hormann's PTRS, as in "The transformed rejection method for generating
// Poisson random variables" (1993).
std::uint64_t poisson_ptrs(Rng& rng, double lambda) {
  const double slam = std::sqrt(lambda);
  const double loglam = std::log(lambda);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2);
  for (;;) {
    const double u = uniform01(rng) - 0.5;
    const double v = uniform01(rng);
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2 * a / us + b) * u + lambda + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
    if (k < 0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
        -lambda + k * loglam - std::lgamma(k + 1))
      return static_cast<std::uint64_t>(k);
  }
}

void check_set(const CountPair& c, const IndexSet& s) {
  if (s.universe() != c.n()) throw DomainMismatch("index set universe differs from count domain");
}

// lambda - 1 + e^{-lambda} without cancellation at small lambda.
double poisson_t_factor(double lambda) {
  if (lambda < 1e-3) return lambda * lambda * (0.5 - lambda / 6.0 + lambda * lambda / 24.0);
  return lambda + std::expm1(-lambda);
}

constexpr std::uint64_t kSeriesCap = 1000000;

}  // namespace

std::uint64_t poisson_draw(Rng& rng, double lambda) {
  if (!(lambda >= 0) || !std::isfinite(lambda)) throw ParameterOutOfRange("Poisson mean");
  if (lambda == 0) return 0;
  return lambda < 30 ? poisson_inversion(rng, lambda) : poisson_ptrs(rng, lambda);
}

CountPair::CountPair(std::size_t n, std::uint64_t m_nominal, std::vector<CountEntry> nonzero)
    : n_(n), m_(m_nominal), nz_(std::move(nonzero)) {
  for (std::size_t k = 0; k < nz_.size(); ++k) {
    if (nz_[k].index >= n_) throw DomainMismatch("count index outside domain");
    if (k > 0 && nz_[k].index <= nz_[k - 1].index)
      throw DomainMismatch("count entries must be strictly increasing");
    total_x_ += nz_[k].x;
    total_y_ += nz_[k].y;
  }
}

CountPair CountPair::from_dense(const std::vector<std::uint32_t>& x,
                                const std::vector<std::uint32_t>& y, std::uint64_t m_nominal) {
  if (x.size() != y.size()) throw DomainMismatch("count vectors differ in length");
  std::vector<CountEntry> nz;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] + y[i] > 0) nz.push_back({static_cast<std::uint32_t>(i), x[i], y[i]});
  return CountPair(x.size(), m_nominal, std::move(nz));
}

const CountEntry* CountPair::find(std::size_t i) const {
  auto it = std::lower_bound(nz_.begin(), nz_.end(), i,
                             [](const CountEntry& e, std::size_t v) { return e.index < v; });
  return (it != nz_.end() && it->index == i) ? &*it : nullptr;
}

std::uint32_t CountPair::x(std::size_t i) const {
  const CountEntry* e = find(i);
  return e ? e->x : 0;
}

std::uint32_t CountPair::y(std::size_t i) const {
  const CountEntry* e = find(i);
  return e ? e->y : 0;
}

std::uint64_t CountPair::x_mass(const IndexSet& s) const {
  check_set(*this, s);
  std::uint64_t acc = 0;
  for (const CountEntry& e : nz_)
    if (s.contains(e.index)) acc += e.x;
  return acc;
}

std::uint64_t CountPair::y_mass(const IndexSet& s) const {
  check_set(*this, s);
  std::uint64_t acc = 0;
  for (const CountEntry& e : nz_)
    if (s.contains(e.index)) acc += e.y;
  return acc;
}

namespace {

CountPair draw_counts(SampleStream& sp, SampleStream& sq, std::uint64_t np, std::uint64_t nq,
                      std::uint64_t m_nominal) {
  if (sp.domain() != sq.domain()) throw DomainMismatch("streams differ in domain");
  const std::size_t n = sp.domain();
  std::vector<std::uint32_t> x(n, 0), y(n, 0);
  sp.accumulate(np, x);
  sq.accumulate(nq, y);
  return CountPair::from_dense(x, y, m_nominal);
}

}  // namespace

CountPair poissonized_counts(SampleStream& sp, SampleStream& sq, std::uint64_t m) {
  if (m == 0) throw ParameterOutOfRange("Poissonized budget must be at least 1");
  const std::uint64_t np = poisson_draw(sp.rng(), static_cast<double>(m));
  const std::uint64_t nq = poisson_draw(sq.rng(), static_cast<double>(m));
  return draw_counts(sp, sq, np, nq, m);
}

CountPair fixed_counts(SampleStream& sp, SampleStream& sq, std::uint64_t m) {
  if (m == 0) throw ParameterOutOfRange("sample budget must be at least 1");
  return draw_counts(sp, sq, m, m, m);
}

double statistic_T(const CountPair& c, const IndexSet& s) {
  check_set(c, s);
  const bool all = s.is_full();
  double t = 0;
  for (const CountEntry& e : c.nonzero()) {
    if (!all && !s.contains(e.index)) continue;
    const double j = static_cast<double>(e.x) + e.y;
    const double d = static_cast<double>(e.x) - e.y;
    t += (d * d - j) / j;
  }
  return t;
}

double statistic_Z(const CountPair& c, const IndexSet& s) {
  check_set(c, s);
  if (c.m_nominal() == 0) throw ParameterOutOfRange("nominal budget must be at least 1");
  const bool all = s.is_full();
  const double m = static_cast<double>(c.m_nominal());
  double z = 0;
  for (const CountEntry& e : c.nonzero()) {
    if (!all && !s.contains(e.index)) continue;
    const double j = static_cast<double>(e.x) + e.y;
    z -= (static_cast<double>(e.x) - e.y) / m * std::log(j);
  }
  return z;
}

double statistic_l2(const CountPair& c, const IndexSet& s) {
  check_set(c, s);
  const bool all = s.is_full();
  double acc = 0;
  for (const CountEntry& e : c.nonzero()) {
    if (!all && !s.contains(e.index)) continue;
    const double d = static_cast<double>(e.x) - e.y;
    acc += d * d - e.x - e.y;
  }
  return acc;
}

double expected_T_closed_form(const DiscreteDistribution& p, const DiscreteDistribution& q,
                              double s, const IndexSet& set) {
  if (p.size() != q.size() || set.universe() != p.size())
    throw DomainMismatch("expected_T_closed_form domains differ");
  double acc = 0;
  for (std::size_t i : set.members()) {
    const double sum = p[i] + q[i];
    if (sum <= 0) continue;
    const double delta = (p[i] - q[i]) / sum;
    acc += delta * delta * poisson_t_factor(s * sum);
  }
  return acc;
}

double expected_log1p_poisson(double lambda, double tail_tol) {
  if (!(tail_tol > 0)) throw ParameterOutOfRange("tail tolerance must be positive");
  if (!(lambda >= 0) || !std::isfinite(lambda)) throw ParameterOutOfRange("Poisson mean");
  if (lambda == 0) return 0;
  const double loglam = std::log(lambda);
  auto log_pmf = [&](double k) { return -lambda + k * loglam - std::lgamma(k + 1); };

  const double mode = std::floor(lambda);
  std::uint64_t terms = 0;
  double acc = 0;

  // Upward from the mode. Past hi the pmf ratio is at most r = lambda/(hi+2)
  // and log(j+1) grows by at most 1/(hi+2) per step.
  double hi = mode;
  double pmf = std::exp(log_pmf(hi));
  for (;;) {
    acc += pmf * std::log(hi + 1);
    if (++terms > kSeriesCap) throw NonConvergent("Poisson log series exceeded term cap");
    const double next_pmf = pmf * lambda / (hi + 1);
    const double r = lambda / (hi + 2);
    const double bound =
        next_pmf * (std::log(hi + 2) / (1 - r) + r / ((1 - r) * (1 - r) * (hi + 2)));
    hi += 1;
    pmf = next_pmf;
    if (bound < tail_tol / 2) break;
  }

  // Downward from mode - 1. Below lo the ratio is at most (lo-1)/lambda and
  // log(j+1) <= log(lo).
  double lo = mode;
  pmf = std::exp(log_pmf(lo));
  while (lo > 0) {
    const double below = pmf * lo / lambda;  // pmf(lo - 1)
    const double r = (lo - 1) / lambda;
    const double bound = below * std::log(lo) / (1 - r);
    if (bound < tail_tol / 2) break;
    lo -= 1;
    pmf = below;
    acc += pmf * std::log(lo + 1);
    if (++terms > kSeriesCap) throw NonConvergent("Poisson log series exceeded term cap");
  }
  return acc;
}

double exact_expected_Z(const DiscreteDistribution& p, const DiscreteDistribution& q, double m,
                        const IndexSet& set, double tail_tol) {
  if (p.size() != q.size() || set.universe() != p.size())
    throw DomainMismatch("exact_expected_Z domains differ");
  if (!(tail_tol > 0)) throw ParameterOutOfRange("tail tolerance must be positive");
  const double per_term = tail_tol / std::max<double>(1.0, static_cast<double>(set.size()));
  double acc = 0;
  for (std::size_t i : set.members()) {
    const double diff = p[i] - q[i];
    if (diff == 0) continue;
    acc -= diff * expected_log1p_poisson(m * (p[i] + q[i]), per_term);
  }
  return acc;
}

double z_bias_bound(const DiscreteDistribution& p, const DiscreteDistribution& q, double m,
                    const IndexSet& set) {
  double acc = 0;
  for (std::size_t i : set.members()) {
    const double sum = p[i] + q[i];
    if (sum > 0) acc += std::abs(p[i] - q[i]) / (m * sum);
  }
  return acc;
}

double z_bias_target(const DiscreteDistribution& p, const DiscreteDistribution& q, double m,
                     const IndexSet& set) {
  double acc = 0;
  for (std::size_t i : set.members()) {
    const double sum = p[i] + q[i];
    if (sum > 0) acc -= (p[i] - q[i]) * std::log(m * sum);
  }
  return acc;
}

double z_variance_envelope(const DiscreteDistribution& p, const DiscreteDistribution& q,
                           double m) {
  const double lm = std::log(m);
  return lm * lm * divergences(p, q).l2_sq + lm * lm / m;
}

double t_variance_bound(const DiscreteDistribution& p, const DiscreteDistribution& q, double s) {
  const double n = static_cast<double>(p.size());
  return 2 * std::min(n, s) + 5 * s * 2 * triangular_half(p, q);
}

FactorialMomentResult factorial_moment_check(double lambda, unsigned order,
                                             const std::function<double(double)>& f,
                                             std::uint64_t trials, Rng& rng) {
  if (!(lambda > 0)) throw ParameterOutOfRange("lambda must be positive");
  if (trials < 2) throw ParameterOutOfRange("need at least two trials");
  const double scale = std::pow(lambda, static_cast<double>(order));
  double mean_l = 0, m2_l = 0, mean_r = 0, m2_r = 0;
  for (std::uint64_t t = 1; t <= trials; ++t) {
    const double x = static_cast<double>(poisson_draw(rng, lambda));
    double falling = 1;
    for (unsigned k = 0; k < order; ++k) falling *= (x - k);
    const double lhs = falling * f(x);
    const double xr = static_cast<double>(poisson_draw(rng, lambda));
    const double rhs = scale * f(xr + order);
    const double dl = lhs - mean_l;
    mean_l += dl / static_cast<double>(t);
    m2_l += dl * (lhs - mean_l);
    const double dr = rhs - mean_r;
    mean_r += dr / static_cast<double>(t);
    m2_r += dr * (rhs - mean_r);
  }
  const double tn = static_cast<double>(trials);
  FactorialMomentResult out;
  out.lhs_mc = mean_l;
  out.rhs_mc = mean_r;
  out.std_error = std::sqrt(m2_l / (tn - 1) / tn + m2_r / (tn - 1) / tn);
  return out;
}

}  // namespace enttest
