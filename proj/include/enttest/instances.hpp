#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "enttest/dist.hpp"

namespace enttest {

// Joint law of (A, C) over [k_a] x [k_c], flattened as a * k_c + c.
struct JointPair {
  DiscreteDistribution joint;
  std::size_t k_a;
  std::size_t k_c;
  double weight = 0;  // mixing weight of the correlated component
};

double mutual_information(const JointPair& j);

// Product of the marginals of j over the same flattened domain.
DiscreteDistribution product_of_marginals(const JointPair& j);

// w * (A uniform, C = A mod k_c) + (1 - w) * (product of the same marginals),
// with w found by bisection so that I(A:C) hits target_mi within 1e-9.
JointPair make_correlated_pair(std::size_t k_a, std::size_t k_c, double target_mi);

// Shares one joint source between two derived streams: the P side emits one
// joint draw per sample, the Q side pairs the A of one fresh draw with the C
// of the next, so Q is exactly the product of the marginals.
class MiReduction {
 public:
  MiReduction(SampleStream& joint, std::size_t k_a, std::size_t k_c);

  SampleStream& p() { return p_; }
  SampleStream& q() { return q_; }
  std::uint64_t source_draws() const { return source_.drawn(); }

 private:
  class Side final : public SampleStream {
   public:
    Side(MiReduction& owner, bool product) : owner_(owner), product_(product) {}
    std::size_t domain() const override { return owner_.k_a_ * owner_.k_c_; }
    std::size_t next() override;
    Rng& rng() override { return owner_.source_.rng(); }

   private:
    MiReduction& owner_;
    bool product_;
  };

  SampleStream& source_;
  std::size_t k_a_, k_c_;
  Side p_, q_;
};

// The batch form: 3t source draws, the first t as P samples and pairs
// (a_{t+2i-1}, c_{t+2i}) as Q samples.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> mi_reduction_streams(
    SampleStream& joint, std::size_t k_c, std::uint64_t t);

struct GapPair {
  DiscreteDistribution p;
  DiscreteDistribution q;
  double gap;  // exact H(q) - H(p)
};

// q uniform on [n]; p supported on the first ceil(n e^{-gap}) atoms with one
// heavier atom, solved so that H(q) - H(p) = gap.
GapPair make_entropy_gap_pair(std::size_t n, double gap);

DiscreteDistribution zipf(std::size_t n, double s);
// Uniform(0, 1) weights, normalized.
DiscreteDistribution random_dense(std::size_t n, Rng& rng);

struct Certificate {
  std::string kind;  // entropy_gap, mutual_information or joint_tv
  double value;
};

// Writes the distribution file and `<path>.cert` with `cert <kind> <value>`.
void save_instance(const std::string& path, const DiscreteDistribution& d, const Certificate& c);
Certificate load_certificate(const std::string& path);

// Throws Unachievable when the certified value misses the promise.
void require_promise(const Certificate& c, double promise);

}  // namespace enttest
