#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "enttest/errors.hpp"
#include "enttest/rng.hpp"

namespace enttest {

inline constexpr double kProbSumTolerance = 1e-12;
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    comp_ += std::abs(sum_) >= std::abs(v) ? (sum_ - t) + v : (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0;
  double comp_ = 0;
};

// Sorted subset of [0, n) with O(1) membership.
class IndexSet {
 public:
  IndexSet() = default;
  IndexSet(std::size_t universe, std::vector<std::size_t> members);

  static IndexSet full(std::size_t universe);
  static IndexSet empty(std::size_t universe);

  std::size_t universe() const { return mask_.size(); }
  std::size_t size() const { return members_.size(); }
  bool is_full() const { return members_.size() == mask_.size(); }
  bool contains(std::size_t i) const { return i < mask_.size() && mask_[i]; }
  const std::vector<std::size_t>& members() const { return members_; }

  IndexSet complement() const;

  bool operator==(const IndexSet& other) const {
    return members_ == other.members_ && mask_.size() == other.mask_.size();
  }

 private:
  std::vector<std::size_t> members_;
  std::vector<unsigned char> mask_;
};

class DiscreteDistribution {
 public:
  // Entries must be finite and non-negative and sum to 1 within
  // kProbSumTolerance; small deviations are renormalized away.
  explicit DiscreteDistribution(std::vector<double> probs);

  // Normalizes arbitrary non-negative weights with a positive total.
  static DiscreteDistribution from_weights(std::vector<double> weights);
  static DiscreteDistribution uniform(std::size_t n);
  static DiscreteDistribution point_mass(std::size_t n, std::size_t at);

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  const std::vector<double>& probs() const { return probs_; }
  double mass(const IndexSet& s) const;

 private:
  std::vector<double> probs_;
};

// p(. | S), stored over the full domain with zeros outside S.
class ConditionalDistribution {
 public:
  ConditionalDistribution(DiscreteDistribution base, IndexSet support);

  const DiscreteDistribution& base() const { return base_; }
  const IndexSet& support() const { return support_; }
  double base_mass() const { return base_mass_; }
  const DiscreteDistribution& distribution() const { return conditional_; }

 private:
  DiscreteDistribution base_;
  IndexSet support_;
  double base_mass_;
  DiscreteDistribution conditional_;
};

// Vose alias table; immutable once built so it can be shared across workers.
class AliasTable {
 public:
  explicit AliasTable(const DiscreteDistribution& d);

  std::size_t size() const { return prob_.size(); }

  std::size_t draw(Rng& rng) const {
    const std::size_t column = uniform_index(rng, prob_.size());
    return uniform01(rng) < prob_[column] ? column : alias_[column];
  }

 private:
  std::vector<double> prob_;
  std::vector<std::uint32_t> alias_;
};

// A source of i.i.d. draws over [0, domain()). Every stream owns (or
// forwards to) an engine that testers also use for auxiliary randomness such
// as Poissonized sample sizes.
class SampleStream {
 public:
  virtual ~SampleStream() = default;

  virtual std::size_t domain() const = 0;
  virtual std::size_t next() = 0;
  virtual Rng& rng() = 0;

  // Adds `count` draws to `hist` (size domain()). Overridden where a faster
  // path with the same law exists.
  virtual void accumulate(std::uint64_t count, std::vector<std::uint32_t>& hist);

  std::uint64_t drawn() const { return drawn_; }

 protected:
  std::uint64_t drawn_ = 0;
};

class Sampler final : public SampleStream {
 public:
  Sampler(const DiscreteDistribution& d, std::uint64_t seed);
  Sampler(std::shared_ptr<const AliasTable> table, std::uint64_t seed);

  std::size_t domain() const override { return table_->size(); }
  std::size_t next() override {
    ++drawn_;
    return table_->draw(rng_);
  }
  Rng& rng() override { return rng_; }
  void accumulate(std::uint64_t count, std::vector<std::uint32_t>& hist) override;

 private:
  std::shared_ptr<const AliasTable> table_;
  Rng rng_;
};

// With probability eta emits a uniform draw, otherwise a draw from base.
class MixStream final : public SampleStream {
 public:
  MixStream(SampleStream& base, double eta);

  double eta() const { return eta_; }
  std::size_t domain() const override { return base_.domain(); }
  std::size_t next() override;
  Rng& rng() override { return base_.rng(); }
  void accumulate(std::uint64_t count, std::vector<std::uint32_t>& hist) override;

 private:
  SampleStream& base_;
  double eta_;
};

// Fair-coin mixture of two streams over the same domain: draws from (p+q)/2.
class HalfMixtureStream final : public SampleStream {
 public:
  HalfMixtureStream(SampleStream& a, SampleStream& b);

  std::size_t domain() const override { return a_.domain(); }
  std::size_t next() override;
  Rng& rng() override { return a_.rng(); }
  void accumulate(std::uint64_t count, std::vector<std::uint32_t>& hist) override;

 private:
  SampleStream& a_;
  SampleStream& b_;
};

// Rejection sampling onto `support`. Throws BudgetExhausted once more than
// `budget` raw draws have been consumed.
class ConditionalStream final : public SampleStream {
 public:
  ConditionalStream(SampleStream& base, const IndexSet& support, std::uint64_t budget);

  std::size_t domain() const override { return base_.domain(); }
  std::size_t next() override;
  Rng& rng() override { return base_.rng(); }
  std::uint64_t consumed() const { return consumed_; }

 private:
  SampleStream& base_;
  const IndexSet& support_;
  std::uint64_t budget_;
  std::uint64_t consumed_ = 0;
};

struct RejectionSample {
  std::vector<std::size_t> samples;
  std::uint64_t consumed = 0;
};

RejectionSample conditional_rejection_sample(SampleStream& s, const IndexSet& support,
                                             std::uint64_t count, std::uint64_t budget);

// Ground-truth functionals. All logs are natural.
double entropy(const DiscreteDistribution& d);

struct Divergences {
  double tv = 0;
  double hellinger_sq = 0;
  double kl = 0;      // kInfinity when p is not absolutely continuous w.r.t. q
  double chi_sq = 0;  // kInfinity under the same condition
  double l2_sq = 0;
};

Divergences divergences(const DiscreteDistribution& p, const DiscreteDistribution& q);

// |sum_i (p_i - q_i) log(2 / (p_i + q_i))| over indices with p_i + q_i > 0.
double lambda_term(const DiscreteDistribution& p, const DiscreteDistribution& q);

// 1/2 sum (p_i - q_i)^2 / (p_i + q_i), the triangular discrimination proxy
// for squared Hellinger distance.
double triangular_half(const DiscreteDistribution& p, const DiscreteDistribution& q);

double mass_floor_eta(std::size_t n, double eps);
DiscreteDistribution mass_floor_mix(const DiscreteDistribution& d, double eps);
MixStream mix_sample(SampleStream& base, double eps);

// Plain-text distribution files: header `n=<int>`, then one probability per
// line written with 17 significant digits.
void write_distribution(std::ostream& os, const DiscreteDistribution& d);
DiscreteDistribution read_distribution(std::istream& is);
void save_distribution(const std::string& path, const DiscreteDistribution& d);
DiscreteDistribution load_distribution(const std::string& path);

}  // namespace enttest
