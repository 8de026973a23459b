#include "enttest/bayesnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace enttest {

namespace {

constexpr std::size_t kDenseBlockVariables = 20;
constexpr double kMaxLocalCells = 1e8;

void require_exact(std::size_t n) {
  if (n > kMaxExactVariables)
    throw TooLargeForExact(std::to_string(n) + " variables exceed the exact limit of " +
                           std::to_string(kMaxExactVariables));
}

std::size_t project(Assignment x, const std::vector<std::size_t>& subset) {
  std::size_t idx = 0;
  for (std::size_t j = 0; j < subset.size(); ++j) idx |= ((x >> subset[j]) & 1u) << j;
  return idx;
}

double entropy_of(const std::vector<double>& t) {
  double h = 0;
  for (double v : t)
    if (v > 0) h -= v * std::log(v);
  return h;
}

double kl_of(const std::vector<double>& p, const std::vector<double>& q) {
  double acc = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0) continue;
    if (q[i] <= 0) return kInfinity;
    acc += p[i] * std::log(p[i] / q[i]);
  }
  return acc;
}

std::vector<std::size_t> with_node(const std::vector<std::size_t>& parents, std::size_t i) {
  std::vector<std::size_t> s = parents;
  s.insert(std::upper_bound(s.begin(), s.end(), i), i);
  return s;
}

// Distinct assignments with multiplicities for `count` draws.
std::vector<std::pair<Assignment, std::uint32_t>> draw_block(SampleStream& st, std::size_t n,
                                                             std::uint64_t count) {
  std::vector<std::pair<Assignment, std::uint32_t>> out;
  if (n <= kDenseBlockVariables) {
    std::vector<std::uint32_t> hist(std::size_t{1} << n, 0);
    st.accumulate(count, hist);
    for (std::size_t x = 0; x < hist.size(); ++x)
      if (hist[x] > 0) out.emplace_back(x, hist[x]);
    return out;
  }
  std::vector<Assignment> xs(count);
  for (auto& x : xs) x = st.next();
  std::sort(xs.begin(), xs.end());
  for (Assignment x : xs) {
    if (!out.empty() && out.back().first == x) {
      ++out.back().second;
    } else {
      out.emplace_back(x, 1);
    }
  }
  return out;
}

std::vector<std::uint32_t> project_counts(
    const std::vector<std::pair<Assignment, std::uint32_t>>& block,
    const std::vector<std::size_t>& subset) {
  std::vector<std::uint32_t> c(std::size_t{1} << subset.size(), 0);
  for (const auto& [x, k] : block) c[project(x, subset)] += k;
  return c;
}

void check_bn_args(SampleStream& sp, std::size_t n, std::size_t d, double eps) {
  if (!(eps > 0 && eps <= 1)) throw ParameterOutOfRange("eps must lie in (0, 1]");
  if (n == 0 || n > 62) throw ParameterOutOfRange("variable count must lie in [1, 62]");
  if (d >= n) throw ParameterOutOfRange("in-degree bound must be below n");
  if (sp.domain() != (std::size_t{1} << n)) throw DomainMismatch("stream domain is not 2^n");
}

std::string subset_label(const std::vector<std::size_t>& s) {
  std::string out = "{";
  for (std::size_t j = 0; j < s.size(); ++j) out += (j ? "," : "") + std::to_string(s[j]);
  return out + "}";
}

BnBudget base_budget(std::size_t n, std::size_t d, double eps, const ThresholdConfig& cfg,
                     double theory, double multiplier) {
  BnBudget b;
  b.subsets = static_cast<std::size_t>(binomial(n, d + 1));
  if (static_cast<double>(b.subsets) * std::ldexp(1.0, static_cast<int>(d + 1)) > kMaxLocalCells)
    throw ParameterOutOfRange("subset marginals exceed the memory guard");
  b.delta_local = 1.0 / (20.0 * static_cast<double>(b.subsets));
  b.blocks = amplification_reps(b.delta_local);
  const double total = multiplier * theory;
  if (!std::isfinite(total) || total > 1e15) throw ParameterOutOfRange("sample budget overflows");
  b.per_block = static_cast<std::uint64_t>(
      std::max(1.0, std::ceil(total / static_cast<double>(b.blocks))));
  b.total = b.per_block * b.blocks;
  const double nd = static_cast<double>(n), dd = static_cast<double>(std::max<std::size_t>(d, 1));
  b.eps1 = cfg.c_bn_eps1 * eps * eps / nd;
  b.eps1_internal = b.eps1 / cfg.c_split;
  b.eps2 = cfg.c_bn_eps2 * eps * eps / (dd * nd * log_clamped(dd * nd / eps));
  b.weight = bn_mixture_weight(n, d, eps);
  return b;
}

}  // namespace

Dag Dag::empty(std::size_t n) {
  Dag g;
  g.n = n;
  g.parents.assign(n, {});
  return g;
}

std::size_t Dag::max_in_degree() const {
  std::size_t m = 0;
  for (const auto& p : parents) m = std::max(m, p.size());
  return m;
}

std::vector<std::size_t> Dag::topological_order() const {
  if (parents.size() != n) throw InvalidNet("parent list count differs from n");
  std::vector<std::size_t> indeg(n, 0);
  std::vector<std::vector<std::size_t>> children(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ps = parents[i];
    for (std::size_t j = 0; j < ps.size(); ++j) {
      if (ps[j] >= n) throw InvalidNet("parent index out of range at node " + std::to_string(i));
      if (ps[j] == i) throw InvalidNet("self-loop at node " + std::to_string(i));
      if (j > 0 && ps[j] <= ps[j - 1])
        throw InvalidNet("parents of node " + std::to_string(i) + " must be strictly ascending");
      children[ps[j]].push_back(i);
    }
    indeg[i] = ps.size();
  }
  std::vector<std::size_t> order;
  order.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    if (indeg[i] == 0) order.push_back(i);
  for (std::size_t k = 0; k < order.size(); ++k)
    for (std::size_t c : children[order[k]])
      if (--indeg[c] == 0) order.push_back(c);
  if (order.size() != n) throw InvalidNet("graph contains a cycle");
  return order;
}

BayesNet::BayesNet(Dag dag, std::size_t d, std::vector<std::vector<double>> cpts)
    : dag_(std::move(dag)), d_(d), cpts_(std::move(cpts)) {
  if (dag_.n == 0 || dag_.n > 62) throw InvalidNet("variable count must lie in [1, 62]");
  order_ = dag_.topological_order();
  if (dag_.max_in_degree() > d_) throw InvalidNet("in-degree exceeds d");
  if (cpts_.size() != dag_.n) throw InvalidNet("one CPT per node required");
  for (std::size_t i = 0; i < dag_.n; ++i) {
    if (cpts_[i].size() != (std::size_t{1} << dag_.parents[i].size()))
      throw InvalidNet("CPT of node " + std::to_string(i) + " has the wrong row count");
    for (double v : cpts_[i])
      if (!(v >= 0 && v <= 1)) throw InvalidNet("CPT entry outside [0, 1]");
  }
}

double BayesNet::p_one(std::size_t i, Assignment x) const {
  return cpts_[i][project(x, dag_.parents[i])];
}

BayesNet random_net(std::size_t n, std::size_t d, Rng& rng, double lo, double hi) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
  Dag g = Dag::empty(n);
  std::vector<std::vector<double>> cpts(n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t node = order[r];
    std::vector<std::size_t> pool(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(r));
    const std::size_t k = uniform_index(rng, std::min(d, r) + 1);
    for (std::size_t j = 0; j < k; ++j)
      std::swap(pool[j], pool[j + uniform_index(rng, pool.size() - j)]);
    std::vector<std::size_t> ps(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(ps.begin(), ps.end());
    g.parents[node] = ps;
    cpts[node].resize(std::size_t{1} << k);
    for (double& v : cpts[node]) v = lo + (hi - lo) * uniform01(rng);
  }
  return BayesNet(std::move(g), d, std::move(cpts));
}

void write_net(std::ostream& os, const BayesNet& net) {
  os << "n=" << net.n() << " d=" << net.d() << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < net.n(); ++i) {
    os << "node " << i << " parents";
    const auto& ps = net.dag().parents[i];
    for (std::size_t j = 0; j < ps.size(); ++j) os << (j ? "," : " ") << ps[j];
    os << '\n';
    for (std::size_t mask = 0; mask < net.cpts()[i].size(); ++mask)
      os << "cpt " << mask << ' ' << net.cpts()[i][mask] << '\n';
  }
}

BayesNet read_net(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError("empty net file");
  std::size_t n = 0, d = 0;
  {
    std::istringstream hs(line);
    std::string a, b;
    hs >> a >> b;
    if (a.rfind("n=", 0) != 0 || b.rfind("d=", 0) != 0) throw FormatError("bad header: " + line);
    try {
      n = std::stoull(a.substr(2));
      d = std::stoull(b.substr(2));
    } catch (const std::exception&) {
      throw FormatError("bad header: " + line);
    }
  }
  Dag g = Dag::empty(n);
  std::vector<std::vector<double>> cpts(n);
  std::vector<bool> seen(n, false);
  long current = -1;
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "node") {
      std::size_t i = 0;
      std::string word, list;
      if (!(ls >> i >> word) || word != "parents" || i >= n || seen[i])
        throw FormatError("bad node line: " + line);
      seen[i] = true;
      current = static_cast<long>(i);
      ls >> list;
      std::vector<std::size_t> ps;
      std::istringstream items(list);
      std::string item;
      while (std::getline(items, item, ',')) {
        try {
          ps.push_back(std::stoull(item));
        } catch (const std::exception&) {
          throw FormatError("bad parent list: " + line);
        }
      }
      g.parents[i] = ps;
      cpts[i].assign(std::size_t{1} << ps.size(), -1.0);
    } else if (tag == "cpt") {
      std::size_t mask = 0;
      double v = 0;
      if (current < 0 || !(ls >> mask >> v)) throw FormatError("bad cpt line: " + line);
      auto& row = cpts[static_cast<std::size_t>(current)];
      if (mask >= row.size()) throw FormatError("cpt mask out of range: " + line);
      row[mask] = v;
    } else {
      throw FormatError("unknown line: " + line);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!seen[i]) throw FormatError("missing node " + std::to_string(i));
    for (double v : cpts[i])
      if (v < 0) throw FormatError("missing cpt row at node " + std::to_string(i));
  }
  return BayesNet(std::move(g), d, std::move(cpts));
}

void save_net(const std::string& path, const BayesNet& net) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot write " + path);
  write_net(os, net);
}

BayesNet load_net(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot read " + path);
  return read_net(is);
}

Assignment bn_sample(const BayesNet& net, Rng& rng) {
  Assignment x = 0;
  for (std::size_t i : net.order())
    if (uniform01(rng) < net.p_one(i, x)) x |= Assignment{1} << i;
  return x;
}

Assignment bn_sample(const BayesNet& net, std::uint64_t seed) {
  Rng rng(seed);
  return bn_sample(net, rng);
}

NetStream::NetStream(const BayesNet& net, std::uint64_t seed) : net_(net), rng_(seed) {}

DiscreteDistribution bn_exact_joint(const BayesNet& net) {
  require_exact(net.n());
  const std::size_t size = std::size_t{1} << net.n();
  std::vector<double> probs(size);
  for (Assignment x = 0; x < size; ++x) {
    double pr = 1;
    for (std::size_t i = 0; i < net.n(); ++i) {
      const double one = net.p_one(i, x);
      pr *= ((x >> i) & 1u) ? one : 1 - one;
    }
    probs[x] = pr;
  }
  return DiscreteDistribution::from_weights(std::move(probs));
}

SubsetMarginal marginal_of(const DiscreteDistribution& joint, std::size_t n,
                           const std::vector<std::size_t>& subset) {
  require_exact(n);
  if (joint.size() != (std::size_t{1} << n)) throw DomainMismatch("joint size is not 2^n");
  for (std::size_t j = 0; j < subset.size(); ++j)
    if (subset[j] >= n || (j > 0 && subset[j] <= subset[j - 1]))
      throw ParameterOutOfRange("subset must be strictly ascending within [0, n)");
  SubsetMarginal m{subset, std::vector<double>(std::size_t{1} << subset.size(), 0.0)};
  for (Assignment x = 0; x < joint.size(); ++x) m.table[project(x, subset)] += joint[x];
  return m;
}

SubsetMarginal bn_exact_marginal(const BayesNet& net, const std::vector<std::size_t>& subset) {
  return marginal_of(bn_exact_joint(net), net.n(), subset);
}

double bn_mixture_weight(std::size_t n, std::size_t d, double eps) {
  if (!(eps > 0 && eps <= 1)) throw ParameterOutOfRange("eps must lie in (0, 1]");
  const double nd = static_cast<double>(n);
  return eps * eps / (static_cast<double>(std::max<std::size_t>(d, 1)) * nd * log_clamped(nd / eps));
}

double bn_atom_floor(std::size_t n, std::size_t d, double eps) {
  return bn_mixture_weight(n, d, eps) / std::ldexp(1.0, static_cast<int>(d + 1));
}

MixStream bn_mixture_sampler(SampleStream& net_stream, std::size_t n, std::size_t d, double eps) {
  if (net_stream.domain() != (std::size_t{1} << n)) throw DomainMismatch("stream domain is not 2^n");
  return MixStream(net_stream, bn_mixture_weight(n, d, eps));
}

DiscreteDistribution bn_mixture_joint(const DiscreteDistribution& joint, std::size_t n,
                                      std::size_t d, double eps) {
  if (joint.size() != (std::size_t{1} << n)) throw DomainMismatch("joint size is not 2^n");
  const double w = bn_mixture_weight(n, d, eps);
  const double u = 1.0 / static_cast<double>(joint.size());
  std::vector<double> out(joint.size());
  for (std::size_t x = 0; x < joint.size(); ++x) out[x] = (1 - w) * joint[x] + w * u;
  return DiscreteDistribution::from_weights(std::move(out));
}

std::uint64_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::size_t j = 1; j <= k; ++j) r = r * (n - k + j) / j;
  return r;
}

std::vector<std::vector<std::size_t>> subsets_of_size(std::size_t n, std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  if (k > n) return out;
  std::vector<std::size_t> cur(k);
  std::iota(cur.begin(), cur.end(), 0);
  for (;;) {
    out.push_back(cur);
    std::size_t j = k;
    while (j > 0 && cur[j - 1] == n - k + j - 1) --j;
    if (j == 0) break;
    ++cur[j - 1];
    for (std::size_t t = j; t < k; ++t) cur[t] = cur[t - 1] + 1;
  }
  return out;
}

BnBudget bn_closeness_budget(std::size_t n, std::size_t d, double eps, const ThresholdConfig& cfg) {
  const double nd = static_cast<double>(n), dd = static_cast<double>(d);
  const double l = log_clamped(nd / eps);
  const double theory =
      std::min(std::pow(2.0, 0.75 * dd) * nd / (eps * eps),
               std::pow(2.0, 2.0 * dd / 3) * std::pow(nd, 4.0 / 3) / std::pow(eps, 8.0 / 3)) +
      dd * dd * dd * nd * nd * l * l / std::pow(eps, 4);
  return base_budget(n, d, eps, cfg, std::max(theory, 1.0), cfg.mult.bn_closeness);
}

BnBudget bn_identity_budget(std::size_t n, std::size_t d, double eps, const ThresholdConfig& cfg) {
  const double nd = static_cast<double>(n), dd = static_cast<double>(d);
  const double theory = std::pow(2.0, dd / 2) * nd / (eps * eps) + nd * nd / std::pow(eps, 4);
  return base_budget(n, d, eps, cfg, theory, cfg.mult.bn_identity);
}

TestVerdict bn_closeness_test(SampleStream& sp, SampleStream& sq, std::size_t n, std::size_t d,
                              double eps, const ThresholdConfig& cfg) {
  check_bn_args(sp, n, d, eps);
  if (sq.domain() != sp.domain()) throw DomainMismatch("streams differ in domain");
  const BnBudget b = bn_closeness_budget(n, d, eps, cfg);
  const auto subsets = subsets_of_size(n, d + 1);
  MixStream mp(sp, b.weight), mq(sq, b.weight);

  const std::size_t k = std::size_t{1} << (d + 1);
  const double mb = static_cast<double>(b.per_block);
  const double thr_bias = cfg.c_T_threshold * std::sqrt(static_cast<double>(k));
  const double thr_z = cfg.c_Z_threshold * b.eps1_internal;
  const double eps_l2 = cfg.c_l2_eps * b.eps1_internal / log_clamped(mb);
  const double thr_l2 = cfg.c_l2_threshold * eps_l2 * eps_l2;
  const double thr_h = t_threshold(cfg.c_hellinger_reject, k, b.per_block);

  std::vector<std::size_t> eet_rejects(subsets.size(), 0), hel_rejects(subsets.size(), 0),
      any_rejects(subsets.size(), 0);
  for (std::size_t blk = 0; blk < b.blocks; ++blk) {
    const auto bp = draw_block(mp, n, b.per_block);
    const auto bq = draw_block(mq, n, b.per_block);
    for (std::size_t s = 0; s < subsets.size(); ++s) {
      const auto x = project_counts(bp, subsets[s]);
      const auto y = project_counts(bq, subsets[s]);
      double t = 0, z = 0, l2 = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const double xc = x[c], yc = y[c], j = xc + yc;
        if (j == 0) continue;
        const double diff = xc - yc;
        t += (diff * diff - j) / j;
        z -= diff / mb * std::log(j);
        l2 += diff * diff - j;
      }
      l2 /= mb * mb;
      const bool eet = t > thr_bias || std::abs(z) > thr_z || l2 > thr_l2;
      const bool hel = t > thr_h;
      eet_rejects[s] += eet;
      hel_rejects[s] += hel;
      any_rejects[s] += (eet || hel);
    }
  }

  TestVerdict v;
  v.samples_used = mp.drawn() + mq.drawn();
  const std::string mode = subsets.size() == 1 ? " exhaustive" : "";
  for (std::size_t s = 0; s < subsets.size(); ++s) {
    const double frac = static_cast<double>(any_rejects[s]) / static_cast<double>(b.blocks);
    const Stage st =
        hel_rejects[s] > eet_rejects[s] ? Stage::bn_local_hellinger : Stage::bn_local_eet;
    v.add(st, frac, 0.5, subset_label(subsets[s]) + mode);
    if (2 * any_rejects[s] > b.blocks && !v.rejected()) v.reject(st);
  }
  return v;
}

TestVerdict bn_identity_test(SampleStream& sp, const BayesNet& q_known, std::size_t n,
                             std::size_t d, double eps, const ThresholdConfig& cfg) {
  check_bn_args(sp, n, d, eps);
  if (q_known.n() != n) throw DomainMismatch("known net has a different variable count");
  const BnBudget b = bn_identity_budget(n, d, eps, cfg);
  const auto subsets = subsets_of_size(n, d + 1);
  const DiscreteDistribution q_mix = bn_mixture_joint(bn_exact_joint(q_known), n, d, eps);
  std::vector<std::vector<double>> q_tables;
  q_tables.reserve(subsets.size());
  for (const auto& s : subsets) q_tables.push_back(marginal_of(q_mix, n, s).table);
  MixStream mp(sp, b.weight);

  const std::size_t k = std::size_t{1} << (d + 1);
  const double mb = static_cast<double>(b.per_block);
  const double thr_chi = cfg.c_identity_reject * std::sqrt(2.0 * static_cast<double>(k));
  const double thr_ent = cfg.c_Z_threshold * b.eps1_internal;

  std::vector<std::size_t> chi_rejects(subsets.size(), 0), ent_rejects(subsets.size(), 0),
      any_rejects(subsets.size(), 0);
  for (std::size_t blk = 0; blk < b.blocks; ++blk) {
    const auto bp = draw_block(mp, n, b.per_block);
    for (std::size_t s = 0; s < subsets.size(); ++s) {
      const auto x = project_counts(bp, subsets[s]);
      const auto& q = q_tables[s];
      double chi = 0, ent = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const double xc = x[c], mq = mb * q[c];
        chi += ((xc - mq) * (xc - mq) - xc) / mq;
        ent -= (xc / mb - q[c]) * std::log(q[c]);
      }
      const bool rc = chi > thr_chi, re = std::abs(ent) > thr_ent;
      chi_rejects[s] += rc;
      ent_rejects[s] += re;
      any_rejects[s] += (rc || re);
    }
  }

  TestVerdict v;
  v.samples_used = mp.drawn();
  for (std::size_t s = 0; s < subsets.size(); ++s) {
    const double frac = static_cast<double>(any_rejects[s]) / static_cast<double>(b.blocks);
    const Stage st =
        chi_rejects[s] >= ent_rejects[s] ? Stage::bn_identity_chi : Stage::bn_identity_entropy;
    v.add(st, frac, 0.5, subset_label(subsets[s]));
    if (2 * any_rejects[s] > b.blocks && !v.rejected()) v.reject(st);
  }
  return v;
}

double bn_kl_to_projection(const DiscreteDistribution& joint, const Dag& g) {
  g.topological_order();
  double acc = -entropy(joint);
  for (std::size_t i = 0; i < g.n; ++i) {
    acc += entropy_of(marginal_of(joint, g.n, with_node(g.parents[i], i)).table);
    acc -= entropy_of(marginal_of(joint, g.n, g.parents[i]).table);
  }
  return std::max(acc, 0.0);
}

DiscreteDistribution bn_projection(const DiscreteDistribution& joint, const Dag& g) {
  g.topological_order();
  std::vector<SubsetMarginal> fam, par;
  for (std::size_t i = 0; i < g.n; ++i) {
    fam.push_back(marginal_of(joint, g.n, with_node(g.parents[i], i)));
    par.push_back(marginal_of(joint, g.n, g.parents[i]));
  }
  std::vector<double> out(joint.size());
  for (Assignment x = 0; x < joint.size(); ++x) {
    double pr = 1;
    for (std::size_t i = 0; i < g.n && pr > 0; ++i) {
      const double den = par[i].table[project(x, par[i].subset)];
      pr = den > 0 ? pr * fam[i].table[project(x, fam[i].subset)] / den : 0;
    }
    out[x] = pr;
  }
  return DiscreteDistribution::from_weights(std::move(out));
}

double bn_local_kl_sum(const DiscreteDistribution& p, const DiscreteDistribution& q, const Dag& g) {
  g.topological_order();
  double acc = 0;
  for (std::size_t i = 0; i < g.n; ++i) {
    const auto fam = with_node(g.parents[i], i);
    acc += kl_of(marginal_of(p, g.n, fam).table, marginal_of(q, g.n, fam).table);
    acc -= kl_of(marginal_of(p, g.n, g.parents[i]).table, marginal_of(q, g.n, g.parents[i]).table);
  }
  return acc;
}

double min_subset_atom(const DiscreteDistribution& joint, std::size_t n, std::size_t d) {
  double m = kInfinity;
  for (const auto& s : subsets_of_size(n, std::min(d + 1, n))) {
    const auto t = marginal_of(joint, n, s).table;
    m = std::min(m, *std::min_element(t.begin(), t.end()));
  }
  return m;
}

BayesNet make_far_net(const BayesNet& base, double target_tv, Rng& rng) {
  const DiscreteDistribution p = bn_exact_joint(base);
  std::vector<std::size_t> nodes(base.n());
  std::iota(nodes.begin(), nodes.end(), 0);
  for (std::size_t i = nodes.size(); i > 1; --i) std::swap(nodes[i - 1], nodes[uniform_index(rng, i)]);
  for (int deterministic = 0; deterministic < 2; ++deterministic) {
    for (std::size_t i : nodes) {
      auto cpts = base.cpts();
      for (double& v : cpts[i]) v = deterministic ? (v >= 0.5 ? 0.0 : 1.0) : 1 - v;
      BayesNet cand(base.dag(), base.d(), std::move(cpts));
      if (divergences(p, bn_exact_joint(cand)).tv >= target_tv) return cand;
    }
  }
  throw Unachievable("no single-node CPT rewrite reaches TV " + std::to_string(target_tv));
}

}  // namespace enttest
