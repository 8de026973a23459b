#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "enttest/dist.hpp"
#include "enttest/testers.hpp"

namespace enttest {

inline constexpr std::size_t kMaxExactVariables = 24;

// Assignments in {0,1}^n are bitmasks: bit i holds X_i.
using Assignment = std::uint64_t;

// Parent sets of a DAG over n binary variables, each sorted ascending.
struct Dag {
  std::size_t n = 0;
  std::vector<std::vector<std::size_t>> parents;

  static Dag empty(std::size_t n);
  std::size_t max_in_degree() const;
  // Throws InvalidNet on cycles, self-loops, duplicate or out-of-range parents.
  std::vector<std::size_t> topological_order() const;
};

class BayesNet {
 public:
  // cpts[i][mask] = P(X_i = 1 | parents), where bit j of mask is the value of
  // the j-th parent in ascending order.
  BayesNet(Dag dag, std::size_t d, std::vector<std::vector<double>> cpts);

  std::size_t n() const { return dag_.n; }
  std::size_t d() const { return d_; }
  const Dag& dag() const { return dag_; }
  const std::vector<std::vector<double>>& cpts() const { return cpts_; }
  const std::vector<std::size_t>& order() const { return order_; }

  double p_one(std::size_t i, Assignment x) const;

 private:
  Dag dag_;
  std::size_t d_;
  std::vector<std::vector<double>> cpts_;
  std::vector<std::size_t> order_;
};

// Random DAG (each node draws up to d parents among earlier nodes of a random
// order) with CPT entries uniform on [lo, hi].
BayesNet random_net(std::size_t n, std::size_t d, Rng& rng, double lo = 0.05, double hi = 0.95);

void write_net(std::ostream& os, const BayesNet& net);
BayesNet read_net(std::istream& is);
void save_net(const std::string& path, const BayesNet& net);
BayesNet load_net(const std::string& path);

Assignment bn_sample(const BayesNet& net, Rng& rng);
Assignment bn_sample(const BayesNet& net, std::uint64_t seed);

// Ancestral sampling stream over [0, 2^n).
class NetStream final : public SampleStream {
 public:
  NetStream(const BayesNet& net, std::uint64_t seed);

  std::size_t domain() const override { return std::size_t{1} << net_.n(); }
  std::size_t next() override {
    ++drawn_;
    return static_cast<std::size_t>(bn_sample(net_, rng_));
  }
  Rng& rng() override { return rng_; }

 private:
  const BayesNet& net_;
  Rng rng_;
};

// Exact joint over [0, 2^n); TooLargeForExact beyond kMaxExactVariables.
DiscreteDistribution bn_exact_joint(const BayesNet& net);

struct SubsetMarginal {
  std::vector<std::size_t> subset;  // sorted
  std::vector<double> table;        // indexed by bitmask over subset positions
};

SubsetMarginal marginal_of(const DiscreteDistribution& joint, std::size_t n,
                           const std::vector<std::size_t>& subset);
SubsetMarginal bn_exact_marginal(const BayesNet& net, const std::vector<std::size_t>& subset);

// eps^2 / (max(d, 1) n log(n/eps)).
double bn_mixture_weight(std::size_t n, std::size_t d, double eps);
// eps^2 / (2^{d+1} max(d, 1) n log(n/eps)).
double bn_atom_floor(std::size_t n, std::size_t d, double eps);

MixStream bn_mixture_sampler(SampleStream& net_stream, std::size_t n, std::size_t d, double eps);
DiscreteDistribution bn_mixture_joint(const DiscreteDistribution& joint, std::size_t n,
                                      std::size_t d, double eps);

// All k-subsets of [0, n) in lexicographic order.
std::vector<std::vector<std::size_t>> subsets_of_size(std::size_t n, std::size_t k);
std::uint64_t binomial(std::size_t n, std::size_t k);

struct BnBudget {
  std::size_t subsets = 0;
  double delta_local = 0;     // 1 / (20 C(n, d+1))
  std::size_t blocks = 0;     // majority-vote repetitions
  std::uint64_t per_block = 0;
  std::uint64_t total = 0;    // per stream: blocks * per_block
  double eps1 = 0;            // local entropy accuracy
  double eps1_internal = 0;   // eps1 / c_split
  double eps2 = 0;            // local Hellinger accuracy
  double weight = 0;          // mixture weight
};

BnBudget bn_closeness_budget(std::size_t n, std::size_t d, double eps, const ThresholdConfig& cfg);
BnBudget bn_identity_budget(std::size_t n, std::size_t d, double eps, const ThresholdConfig& cfg);

// Streams emit raw net draws over [0, 2^n); the tester mixes them with the
// uniform distribution itself.
TestVerdict bn_closeness_test(SampleStream& sp, SampleStream& sq, std::size_t n, std::size_t d,
                              double eps, const ThresholdConfig& cfg);

TestVerdict bn_identity_test(SampleStream& sp, const BayesNet& q_known, std::size_t n,
                             std::size_t d, double eps, const ThresholdConfig& cfg);

// KL(p || p_G) for p the exact joint over [0, 2^n) and p_G its projection
// onto g, via sum_i H(X_i | Pi_i) - H(p).
double bn_kl_to_projection(const DiscreteDistribution& joint, const Dag& g);

// prod_i p(x_i | pi_i) as an explicit joint.
DiscreteDistribution bn_projection(const DiscreteDistribution& joint, const Dag& g);

// sum_i [KL(p_{X_i, Pi_i} || q_{X_i, Pi_i}) - KL(p_{Pi_i} || q_{Pi_i})] over
// the parent sets of g.
double bn_local_kl_sum(const DiscreteDistribution& p, const DiscreteDistribution& q, const Dag& g);

// Smallest atom over all (d+1)-subset marginals of `joint`.
double min_subset_atom(const DiscreteDistribution& joint, std::size_t n, std::size_t d);

// Changes CPT rows of `base` until the exact joint TV reaches `target`;
// Unachievable if no single-node rewrite gets there.
BayesNet make_far_net(const BayesNet& base, double target_tv, Rng& rng);

}  // namespace enttest
