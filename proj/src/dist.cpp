#include "enttest/dist.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace enttest {

IndexSet::IndexSet(std::size_t universe, std::vector<std::size_t> members)
    : members_(std::move(members)), mask_(universe, 0) {
  std::sort(members_.begin(), members_.end());
  members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
  for (std::size_t i : members_) {
    if (i >= universe) throw DomainMismatch("index set member outside universe");
    mask_[i] = 1;
  }
}

IndexSet IndexSet::full(std::size_t universe) {
  std::vector<std::size_t> all(universe);
  std::iota(all.begin(), all.end(), std::size_t{0});
  return IndexSet(universe, std::move(all));
}

IndexSet IndexSet::empty(std::size_t universe) { return IndexSet(universe, {}); }

IndexSet IndexSet::complement() const {
  std::vector<std::size_t> rest;
  rest.reserve(mask_.size() - members_.size());
  for (std::size_t i = 0; i < mask_.size(); ++i)
    if (!mask_[i]) rest.push_back(i);
  return IndexSet(mask_.size(), std::move(rest));
}

DiscreteDistribution::DiscreteDistribution(std::vector<double> probs)
    : probs_(std::move(probs)) {
  if (probs_.empty()) throw InvalidDistribution("domain size must be at least 1");
  CompensatedSum acc;
  for (double v : probs_) {
    if (!std::isfinite(v) || v < 0) throw InvalidDistribution("entries must be finite and >= 0");
    acc.add(v);
  }
  const double sum = acc.value();
  if (std::abs(sum - 1.0) > kProbSumTolerance) {
    std::ostringstream msg;
    msg << std::setprecision(17) << "probabilities sum to " << sum;
    throw InvalidDistribution(msg.str());
  }
  if (sum != 1.0)
    for (double& v : probs_) v /= sum;
}

DiscreteDistribution DiscreteDistribution::from_weights(std::vector<double> weights) {
  CompensatedSum acc;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0) throw InvalidDistribution("weights must be finite and >= 0");
    acc.add(w);
  }
  const double sum = acc.value();
  if (!(sum > 0)) throw InvalidDistribution("weights have zero total");
  for (double& w : weights) w /= sum;
  return DiscreteDistribution(std::move(weights));
}

DiscreteDistribution DiscreteDistribution::uniform(std::size_t n) {
  if (n == 0) throw InvalidDistribution("domain size must be at least 1");
  return from_weights(std::vector<double>(n, 1.0));
}

DiscreteDistribution DiscreteDistribution::point_mass(std::size_t n, std::size_t at) {
  if (at >= n) throw DomainMismatch("point mass outside domain");
  std::vector<double> v(n, 0.0);
  v[at] = 1.0;
  return DiscreteDistribution(std::move(v));
}

double DiscreteDistribution::mass(const IndexSet& s) const {
  if (s.universe() != probs_.size()) throw DomainMismatch("index set universe differs");
  double m = 0;
  for (std::size_t i : s.members()) m += probs_[i];
  return m;
}

namespace {

DiscreteDistribution conditional_of(const DiscreteDistribution& base, const IndexSet& s) {
  std::vector<double> w(base.size(), 0.0);
  for (std::size_t i : s.members()) w[i] = base[i];
  return DiscreteDistribution::from_weights(std::move(w));
}

}  // namespace

ConditionalDistribution::ConditionalDistribution(DiscreteDistribution base, IndexSet support)
    : base_(std::move(base)),
      support_(std::move(support)),
      base_mass_(base_.mass(support_)),
      conditional_(base_mass_ > 0 ? conditional_of(base_, support_) : base_) {
  if (!(base_mass_ > 0)) throw InvalidDistribution("conditioning set has zero mass");
}

AliasTable::AliasTable(const DiscreteDistribution& d)
    : prob_(d.size(), 0.0), alias_(d.size(), 0) {
  const std::size_t n = d.size();
  if (n > std::numeric_limits<std::uint32_t>::max())
    throw ParameterOutOfRange("alias table domain too large");
  std::vector<double> scaled(n);
  std::vector<std::uint32_t> small, large;
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = d[i] * static_cast<double>(n);
    (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
  }
  while (!small.empty() && !large.empty()) {
    const std::uint32_t s = small.back();
    small.pop_back();
    const std::uint32_t l = large.back();
    prob_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  for (std::uint32_t l : large) {
    prob_[l] = 1.0;
    alias_[l] = l;
  }
  // Leftovers from rounding are full columns.
  for (std::uint32_t s : small) {
    prob_[s] = 1.0;
    alias_[s] = s;
  }
}

void SampleStream::accumulate(std::uint64_t count, std::vector<std::uint32_t>& hist) {
  for (std::uint64_t k = 0; k < count; ++k) ++hist[next()];
}

Sampler::Sampler(const DiscreteDistribution& d, std::uint64_t seed)
    : table_(std::make_shared<const AliasTable>(d)), rng_(seed) {}

Sampler::Sampler(std::shared_ptr<const AliasTable> table, std::uint64_t seed)
    : table_(std::move(table)), rng_(seed) {}

void Sampler::accumulate(std::uint64_t count, std::vector<std::uint32_t>& hist) {
  const AliasTable& t = *table_;
  for (std::uint64_t k = 0; k < count; ++k) ++hist[t.draw(rng_)];
  drawn_ += count;
}

MixStream::MixStream(SampleStream& base, double eta) : base_(base), eta_(eta) {
  if (!(eta >= 0 && eta <= 1)) throw ParameterOutOfRange("mixture weight outside [0, 1]");
}

std::size_t MixStream::next() {
  ++drawn_;
  if (uniform01(base_.rng()) < eta_) return uniform_index(base_.rng(), base_.domain());
  return base_.next();
}

void MixStream::accumulate(std::uint64_t count, std::vector<std::uint32_t>& hist) {
  // Splitting the batch binomially has the same law as per-draw coins.
  std::binomial_distribution<std::uint64_t> split(count, eta_);
  const std::uint64_t uniform_part = eta_ > 0 ? split(base_.rng()) : 0;
  const std::size_t n = base_.domain();
  for (std::uint64_t k = 0; k < uniform_part; ++k) ++hist[uniform_index(base_.rng(), n)];
  base_.accumulate(count - uniform_part, hist);
  drawn_ += count;
}

HalfMixtureStream::HalfMixtureStream(SampleStream& a, SampleStream& b) : a_(a), b_(b) {
  if (a.domain() != b.domain()) throw DomainMismatch("mixture streams differ in domain");
}

std::size_t HalfMixtureStream::next() {
  ++drawn_;
  return (a_.rng()() >> 63) ? a_.next() : b_.next();
}

void HalfMixtureStream::accumulate(std::uint64_t count, std::vector<std::uint32_t>& hist) {
  std::binomial_distribution<std::uint64_t> split(count, 0.5);
  const std::uint64_t from_a = split(a_.rng());
  a_.accumulate(from_a, hist);
  b_.accumulate(count - from_a, hist);
  drawn_ += count;
}

ConditionalStream::ConditionalStream(SampleStream& base, const IndexSet& support,
                                     std::uint64_t budget)
    : base_(base), support_(support), budget_(budget) {
  if (support.universe() != base.domain()) throw DomainMismatch("support universe differs");
}

std::size_t ConditionalStream::next() {
  for (;;) {
    if (consumed_ >= budget_)
      throw BudgetExhausted("rejection sampling exceeded " + std::to_string(budget_) + " draws");
    ++consumed_;
    const std::size_t x = base_.next();
    if (support_.contains(x)) {
      ++drawn_;
      return x;
    }
  }
}

RejectionSample conditional_rejection_sample(SampleStream& s, const IndexSet& support,
                                             std::uint64_t count, std::uint64_t budget) {
  ConditionalStream cond(s, support, budget);
  RejectionSample out;
  out.samples.reserve(count);
  for (std::uint64_t k = 0; k < count; ++k) out.samples.push_back(cond.next());
  out.consumed = cond.consumed();
  return out;
}

double entropy(const DiscreteDistribution& d) {
  CompensatedSum h;
  for (double v : d.probs())
    if (v > 0) h.add(-v * std::log(v));
  return h.value();
}

namespace {

void require_same_domain(const DiscreteDistribution& p, const DiscreteDistribution& q) {
  if (p.size() != q.size())
    throw DomainMismatch("sizes " + std::to_string(p.size()) + " and " + std::to_string(q.size()));
}

}  // namespace

Divergences divergences(const DiscreteDistribution& p, const DiscreteDistribution& q) {
  require_same_domain(p, q);
  Divergences out;
  double l1 = 0, hel = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double a = p[i], b = q[i], diff = a - b;
    l1 += std::abs(diff);
    const double root = std::sqrt(a) - std::sqrt(b);
    hel += root * root;
    out.l2_sq += diff * diff;
    if (a > 0) {
      if (b > 0) {
        out.kl += a * std::log(a / b);
      } else {
        out.kl = kInfinity;
      }
    }
    if (b > 0) {
      out.chi_sq += diff * diff / b;
    } else if (a > 0) {
      out.chi_sq = kInfinity;
    }
  }
  out.tv = 0.5 * l1;
  out.hellinger_sq = 0.5 * hel;
  // Rounding can leave KL a hair below zero for p ~= q.
  if (out.kl < 0) out.kl = 0;
  return out;
}

double lambda_term(const DiscreteDistribution& p, const DiscreteDistribution& q) {
  require_same_domain(p, q);
  double acc = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double s = p[i] + q[i];
    if (s > 0) acc += (p[i] - q[i]) * std::log(2.0 / s);
  }
  return std::abs(acc);
}

double triangular_half(const DiscreteDistribution& p, const DiscreteDistribution& q) {
  require_same_domain(p, q);
  double acc = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double s = p[i] + q[i];
    if (s > 0) acc += (p[i] - q[i]) * (p[i] - q[i]) / s;
  }
  return 0.5 * acc;
}

double mass_floor_eta(std::size_t n, double eps) {
  if (!(eps > 0 && eps <= 0.5)) throw InvalidEpsilon("eps must lie in (0, 1/2]");
  return eps / std::log(static_cast<double>(n) / eps);
}

DiscreteDistribution mass_floor_mix(const DiscreteDistribution& d, double eps) {
  const double eta = mass_floor_eta(d.size(), eps);
  const double u = 1.0 / static_cast<double>(d.size());
  std::vector<double> out(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) out[i] = (1.0 - eta) * d[i] + eta * u;
  return DiscreteDistribution::from_weights(std::move(out));
}

MixStream mix_sample(SampleStream& base, double eps) {
  return MixStream(base, mass_floor_eta(base.domain(), eps));
}

void write_distribution(std::ostream& os, const DiscreteDistribution& d) {
  os << "n=" << d.size() << '\n' << std::setprecision(17);
  for (double v : d.probs()) os << v << '\n';
}

DiscreteDistribution read_distribution(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("n=", 0) != 0)
    throw FormatError("distribution file must start with n=<int>");
  std::size_t n = 0;
  try {
    n = std::stoull(line.substr(2));
  } catch (const std::exception&) {
    throw FormatError("bad header: " + line);
  }
  std::vector<double> probs;
  probs.reserve(n);
  while (probs.size() < n && std::getline(is, line)) {
    if (line.empty()) continue;
    try {
      std::size_t used = 0;
      probs.push_back(std::stod(line, &used));
      if (line.find_first_not_of(" \t\r", used) != std::string::npos)
        throw FormatError("trailing text: " + line);
    } catch (const std::invalid_argument&) {
      throw FormatError("not a number: " + line);
    }
  }
  if (probs.size() != n) throw FormatError("expected " + std::to_string(n) + " probabilities");
  return DiscreteDistribution(std::move(probs));
}

void save_distribution(const std::string& path, const DiscreteDistribution& d) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot write " + path);
  write_distribution(os, d);
}

DiscreteDistribution load_distribution(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot read " + path);
  return read_distribution(is);
}

}  // namespace enttest
