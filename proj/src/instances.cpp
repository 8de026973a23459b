#include "enttest/instances.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace enttest {

namespace {

constexpr int kBisectionIterations = 200;
constexpr double kMiTolerance = 1e-9;
constexpr double kGapTolerance = 1e-12;

std::vector<double> mixed_joint(std::size_t k_a, std::size_t k_c, double w) {
  // Correlated component: A uniform, C = A mod k_c. Its C marginal is shared
  // with the product component, so both marginals stay fixed in w.
  std::vector<double> c_marg(k_c, 0.0);
  const double ua = 1.0 / static_cast<double>(k_a);
  for (std::size_t a = 0; a < k_a; ++a) c_marg[a % k_c] += ua;
  std::vector<double> j(k_a * k_c);
  for (std::size_t a = 0; a < k_a; ++a)
    for (std::size_t c = 0; c < k_c; ++c)
      j[a * k_c + c] = (1 - w) * ua * c_marg[c] + (c == a % k_c ? w * ua : 0.0);
  return j;
}

double two_level_entropy(std::size_t k, double a) {
  double h = a > 0 ? -a * std::log(a) : 0;
  if (k > 1 && a < 1) {
    const double b = (1 - a) / static_cast<double>(k - 1);
    h -= (1 - a) * std::log(b);
  }
  return h;
}

}  // namespace

double mutual_information(const JointPair& j) {
  std::vector<double> pa(j.k_a, 0.0), pc(j.k_c, 0.0);
  for (std::size_t a = 0; a < j.k_a; ++a)
    for (std::size_t c = 0; c < j.k_c; ++c) {
      pa[a] += j.joint[a * j.k_c + c];
      pc[c] += j.joint[a * j.k_c + c];
    }
  double mi = 0;
  for (std::size_t a = 0; a < j.k_a; ++a)
    for (std::size_t c = 0; c < j.k_c; ++c) {
      const double v = j.joint[a * j.k_c + c];
      if (v > 0) mi += v * std::log(v / (pa[a] * pc[c]));
    }
  return std::max(mi, 0.0);
}

DiscreteDistribution product_of_marginals(const JointPair& j) {
  std::vector<double> pa(j.k_a, 0.0), pc(j.k_c, 0.0);
  for (std::size_t a = 0; a < j.k_a; ++a)
    for (std::size_t c = 0; c < j.k_c; ++c) {
      pa[a] += j.joint[a * j.k_c + c];
      pc[c] += j.joint[a * j.k_c + c];
    }
  std::vector<double> out(j.k_a * j.k_c);
  for (std::size_t a = 0; a < j.k_a; ++a)
    for (std::size_t c = 0; c < j.k_c; ++c) out[a * j.k_c + c] = pa[a] * pc[c];
  return DiscreteDistribution::from_weights(std::move(out));
}

JointPair make_correlated_pair(std::size_t k_a, std::size_t k_c, double target_mi) {
  if (k_a == 0 || k_c == 0) throw ParameterOutOfRange("factor sizes must be positive");
  if (!(target_mi >= 0)) throw ParameterOutOfRange("target MI must be non-negative");
  const double cap = std::log(static_cast<double>(std::min(k_a, k_c)));
  if (target_mi > cap + kMiTolerance)
    throw Unachievable("target MI exceeds log min(k_a, k_c)");
  auto build = [&](double w) {
    return JointPair{DiscreteDistribution::from_weights(mixed_joint(k_a, k_c, w)), k_a, k_c, w};
  };
  if (target_mi == 0) return build(0);
  JointPair top = build(1);
  const double top_mi = mutual_information(top);
  if (top_mi < target_mi - kMiTolerance)
    throw Unachievable("the correlated coupling only reaches MI " + std::to_string(top_mi));
  if (top_mi <= target_mi + kMiTolerance) return top;
  double lo = 0, hi = 1;
  JointPair best = top;
  for (int it = 0; it < kBisectionIterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    JointPair cand = build(mid);
    const double mi = mutual_information(cand);
    if (std::abs(mi - target_mi) <= kMiTolerance * 1e-3 || hi - lo < 1e-17) {
      best = std::move(cand);
      break;
    }
    (mi < target_mi ? lo : hi) = mid;
    best = std::move(cand);
  }
  if (std::abs(mutual_information(best) - target_mi) > kMiTolerance)
    throw NonConvergent("MI bisection missed the target");
  return best;
}

MiReduction::MiReduction(SampleStream& joint, std::size_t k_a, std::size_t k_c)
    : source_(joint), k_a_(k_a), k_c_(k_c), p_(*this, false), q_(*this, true) {
  if (joint.domain() != k_a * k_c) throw DomainMismatch("joint domain differs from k_a * k_c");
}

std::size_t MiReduction::Side::next() {
  ++drawn_;
  const std::size_t k_c = owner_.k_c_;
  if (!product_) return owner_.source_.next();
  const std::size_t a = owner_.source_.next() / k_c;
  const std::size_t c = owner_.source_.next() % k_c;
  return a * k_c + c;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> mi_reduction_streams(
    SampleStream& joint, std::size_t k_c, std::uint64_t t) {
  if (t == 0) throw ParameterOutOfRange("t must be at least 1");
  if (k_c == 0 || joint.domain() % k_c != 0) throw DomainMismatch("k_c does not divide the domain");
  std::vector<std::size_t> draws(3 * t);
  for (auto& x : draws) x = joint.next();
  std::vector<std::size_t> ps(draws.begin(), draws.begin() + static_cast<std::ptrdiff_t>(t));
  std::vector<std::size_t> qs(t);
  for (std::uint64_t i = 0; i < t; ++i) {
    const std::size_t a = draws[t + 2 * i] / k_c;
    const std::size_t c = draws[t + 2 * i + 1] % k_c;
    qs[i] = a * k_c + c;
  }
  return {std::move(ps), std::move(qs)};
}

GapPair make_entropy_gap_pair(std::size_t n, double gap) {
  if (n == 0) throw ParameterOutOfRange("domain size must be positive");
  if (!(gap >= 0)) throw ParameterOutOfRange("gap must be non-negative");
  const double logn = std::log(static_cast<double>(n));
  if (gap > logn + kGapTolerance) throw Unachievable("gap exceeds log n");
  DiscreteDistribution q = DiscreteDistribution::uniform(n);
  if (gap == 0) return {q, q, 0};

  const double target = logn - gap;
  // Guard against exp rounding pushing an exact integer just above itself.
  std::size_t k = static_cast<std::size_t>(
      std::ceil(static_cast<double>(n) * std::exp(-gap) * (1 - 1e-12)));
  k = std::clamp<std::size_t>(k, 1, n);
  while (k < n && std::log(static_cast<double>(k)) < target) ++k;

  double a = 1.0 / static_cast<double>(k);
  // A uniform block that already lands on the target is kept exact; entropy is
  // flat there, so bisection would wander far in the weight for no gain.
  if (two_level_entropy(k, a) > target + 1e-14) {
    double lo = a, hi = 1;
    for (int it = 0; it < kBisectionIterations && hi - lo > 0; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (two_level_entropy(k, mid) > target ? lo : hi) = mid;
    }
    a = std::abs(two_level_entropy(k, lo) - target) < std::abs(two_level_entropy(k, hi) - target)
            ? lo
            : hi;
  }
  std::vector<double> w(n, 0.0);
  w[0] = a;
  for (std::size_t i = 1; i < k; ++i) w[i] = (1 - a) / static_cast<double>(k - 1);
  DiscreteDistribution p = DiscreteDistribution::from_weights(std::move(w));
  const double exact = entropy(q) - entropy(p);
  if (std::abs(exact - gap) > kGapTolerance)
    throw Unachievable("two-level solve missed the gap by " + std::to_string(exact - gap));
  return {std::move(p), std::move(q), exact};
}

DiscreteDistribution zipf(std::size_t n, double s) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = std::pow(static_cast<double>(i + 1), -s);
  return DiscreteDistribution::from_weights(std::move(w));
}

DiscreteDistribution random_dense(std::size_t n, Rng& rng) {
  std::vector<double> w(n);
  for (double& v : w) v = uniform01(rng);
  return DiscreteDistribution::from_weights(std::move(w));
}

void save_instance(const std::string& path, const DiscreteDistribution& d, const Certificate& c) {
  save_distribution(path, d);
  std::ofstream os(path + ".cert");
  if (!os) throw FormatError("cannot write " + path + ".cert");
  os << std::setprecision(17) << "cert " << c.kind << ' ' << c.value << '\n';
}

Certificate load_certificate(const std::string& path) {
  std::ifstream is(path + ".cert");
  if (!is) throw FormatError("cannot read " + path + ".cert");
  std::string tag;
  Certificate c;
  if (!(is >> tag >> c.kind >> c.value) || tag != "cert")
    throw FormatError("certificate line must read `cert <kind> <value>`");
  return c;
}

void require_promise(const Certificate& c, double promise) {
  if (!(c.value >= promise))
    throw Unachievable(c.kind + " certificate " + std::to_string(c.value) + " misses promise " +
                       std::to_string(promise));
}

}  // namespace enttest
