#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "ldinfo/boost.hpp"
#include "ldinfo/core.hpp"
#include "ldinfo/parallel.hpp"
#include "ldinfo/stable.hpp"

namespace ldinfo {

/// A function, or nullopt for Failure. Failure orders first.
using Outcome = std::optional<Hypothesis>;

inline std::string outcome_string(const Outcome& o) { return o ? o->to_string() : std::string("failure"); }

/// -sum p log2 p over the empirical distribution of the counts; 0 log 0 = 0.
template <class Range>
double plugin_entropy(const Range& counts) {
  long double total = 0;
  for (auto c : counts) total += static_cast<long double>(c);
  if (total <= 0) throw InvalidArgument("plugin_entropy: total count must be >= 1");
  long double h = 0;
  for (auto c : counts) {
    if (c == 0) continue;
    const long double p = static_cast<long double>(c) / total;
    h -= p * std::log2(p);
  }
  return static_cast<double>(h);
}

inline double plugin_entropy(std::initializer_list<std::size_t> counts) {
  return plugin_entropy(std::vector<std::size_t>(counts));
}

template <class K>
double plugin_entropy(const std::map<K, std::size_t>& counts) {
  std::vector<std::size_t> v;
  v.reserve(counts.size());
  for (const auto& kv : counts) v.push_back(kv.second);
  return plugin_entropy(v);
}

enum class Provenance { exact, monte_carlo };

/// Distribution of an algorithm's output, sorted by outcome.
struct OutputDistribution {
  std::vector<std::pair<Outcome, double>> support;
  Provenance provenance = Provenance::exact;
  std::size_t trials = 0;  // Monte Carlo only

  double probability(const Outcome& o) const {
    for (const auto& [k, p] : support) {
      if (k == o) return p;
    }
    return 0.0;
  }

  double entropy() const {
    long double h = 0;
    for (const auto& kv : support) {
      if (kv.second > 0) h -= kv.second * std::log2(static_cast<long double>(kv.second));
    }
    return static_cast<double>(h);
  }

  double total() const {
    double t = 0;
    for (const auto& kv : support) t += kv.second;
    return t;
  }
};

inline OutputDistribution distribution_from_counts(const std::map<Outcome, std::size_t>& counts,
                                                   std::size_t trials) {
  OutputDistribution d;
  d.provenance = Provenance::monte_carlo;
  d.trials = trials;
  for (const auto& [o, c] : counts) d.support.emplace_back(o, static_cast<double>(c) / static_cast<double>(trials));
  return d;
}

inline double total_variation(const OutputDistribution& a, const OutputDistribution& b) {
  std::map<Outcome, double> diff;
  for (const auto& [o, p] : a.support) diff[o] += p;
  for (const auto& [o, p] : b.support) diff[o] -= p;
  double tv = 0;
  for (const auto& kv : diff) tv += std::abs(kv.second);
  return tv / 2;
}

enum class EstimateMethod { exact, plug_in };

struct MIEstimate {
  double value = 0.0;  // bits
  EstimateMethod method = EstimateMethod::exact;
  std::size_t trials = 0;
  double marginal_entropy = 0.0;   // H(output); equals value for plug-in
  double miller_madow = 0.0;       // (m-1) / (2 T ln 2), plug-in only
  double confidence_radius = 0.0;  // 99% normal radius of the plug-in value
  std::size_t support_size = 0;
  std::string bias_note;

  double corrected() const { return value + miller_madow; }
  /// Corrected estimate plus its confidence radius.
  double upper() const { return corrected() + confidence_radius; }
};

/// Coin source that walks every sequence of choices depth first. Each call to
/// `choose` past the replayed prefix opens a new branch at choice 0.
template <class Weight = double>
class EnumeratingCoins {
 public:
  std::size_t choose(std::size_t m) {
    if (m == 0) throw InvalidArgument("choose: empty range");
    if (pos_ < path_.size()) {
      if (path_[pos_].second != m) throw InvalidArgument("enumeration: algorithm's coin arity is not deterministic");
      return path_[pos_++].first;
    }
    path_.emplace_back(0, m);
    ++pos_;
    return 0;
  }

  /// Probability of the path taken in the last run.
  Weight weight() const {
    Weight w(1);
    for (std::size_t i = 0; i < pos_; ++i) w /= Weight(path_[i].second);
    return w;
  }

  /// Moves to the next unexplored path; false when all have been visited.
  bool advance() {
    path_.resize(pos_);
    while (!path_.empty() && path_.back().first + 1 == path_.back().second) path_.pop_back();
    pos_ = 0;
    if (path_.empty()) return false;
    ++path_.back().first;
    return true;
  }

 private:
  std::vector<std::pair<std::size_t, std::size_t>> path_;
  std::size_t pos_ = 0;
};

inline constexpr std::size_t kEnumerationGuard = 10'000'000;

template <class Weight>
double to_double(const Weight& w) {
  if constexpr (std::is_arithmetic_v<Weight>) {
    return static_cast<double>(w);
  } else {
    return w.template convert_to<double>();
  }
}

template <class Weight>
struct ExactEnumeration {
  std::map<Outcome, Weight> marginal;
  double conditional_entropy = 0.0;  // sum over S^k of Pr(S^k) H(output | S^k)
  std::size_t data_atoms = 0;
  std::size_t weighted_atoms = 0;  // (data sequence, coin path) pairs
};

// Exact joint enumeration of A over every S^k in supp(D)^(n k) and every coin
// path of A. A is called as A(span<const Sample> (k samples of size n), coins).
template <class Weight = double, class Algorithm>
ExactEnumeration<Weight> enumerate_exact(const Algorithm& a, const RealizableDistribution& d, std::size_t n,
                                         std::size_t k, std::size_t guard = kEnumerationGuard) {
  if (n == 0 || k == 0) throw InvalidArgument("enumerate_exact: n and k must be >= 1");
  const auto support = d.support();
  const std::size_t draws = n * k;
  {
    long double atoms = std::pow(static_cast<long double>(support.size()), static_cast<long double>(draws));
    if (atoms > static_cast<long double>(guard)) throw ResourceError("enumerate_exact: data space exceeds the enumeration guard");
  }
  ExactEnumeration<Weight> out;
  std::vector<std::size_t> digits(draws, 0);
  std::vector<Sample> samples(k, Sample(n));
  for (;;) {
    Weight p_data(1);
    for (std::size_t j = 0; j < draws; ++j) {
      const DomainPoint x = support[digits[j]];
      samples[j / n][j % n] = d.labeled(x);
      p_data *= Weight(d.pmf()[x.index]);
    }
    std::map<Outcome, Weight> conditional;
    EnumeratingCoins<Weight> coins;
    do {
      if (++out.weighted_atoms > guard) throw ResourceError("enumerate_exact: joint space exceeds the enumeration guard");
      Outcome o = a(std::span<const Sample>(samples), coins);
      conditional[std::move(o)] += coins.weight();
    } while (coins.advance());
    ++out.data_atoms;

    long double h = 0;
    for (auto& [o, w] : conditional) {
      const double pw = to_double(w);
      if (pw > 0) h -= pw * std::log2(static_cast<long double>(pw));
      out.marginal[o] += p_data * w;
    }
    out.conditional_entropy += static_cast<double>(to_double(p_data) * h);

    std::size_t j = 0;
    while (j < draws && ++digits[j] == support.size()) digits[j++] = 0;
    if (j == draws) break;
  }
  return out;
}

template <class Weight = double, class Algorithm>
OutputDistribution exact_output_distribution(const Algorithm& a, const RealizableDistribution& d, std::size_t n,
                                             std::size_t k, std::size_t guard = kEnumerationGuard) {
  const auto e = enumerate_exact<Weight>(a, d, n, k, guard);
  OutputDistribution out;
  for (const auto& [o, w] : e.marginal) out.support.emplace_back(o, to_double(w));
  return out;
}

/// I(S^k; A(S^k)) = H(marginal) - E_S H(output | S).
template <class Weight = double, class Algorithm>
MIEstimate exact_mutual_information(const Algorithm& a, const RealizableDistribution& d, std::size_t n,
                                    std::size_t k, std::size_t guard = kEnumerationGuard) {
  const auto e = enumerate_exact<Weight>(a, d, n, k, guard);
  OutputDistribution marginal;
  for (const auto& [o, w] : e.marginal) marginal.support.emplace_back(o, to_double(w));
  MIEstimate m;
  m.method = EstimateMethod::exact;
  m.marginal_entropy = marginal.entropy();
  m.value = std::max(0.0, m.marginal_entropy - e.conditional_entropy);
  m.support_size = marginal.support.size();
  m.bias_note = "exact enumeration over " + std::to_string(e.data_atoms) + " data sequences and " +
                std::to_string(e.weighted_atoms) + " weighted atoms";
  return m;
}

struct EntropyEstimate {
  MIEstimate estimate;
  std::map<Outcome, std::size_t> counts;
  std::vector<Outcome> per_trial;

  OutputDistribution distribution() const { return distribution_from_counts(counts, per_trial.size()); }
};

/// Plug-in entropy with Miller-Madow term and a delta-method 99% radius.
inline MIEstimate plugin_estimate(const std::map<Outcome, std::size_t>& counts, std::size_t trials) {
  MIEstimate m;
  m.method = EstimateMethod::plug_in;
  m.trials = trials;
  m.value = plugin_entropy(counts);
  m.marginal_entropy = m.value;
  m.support_size = counts.size();
  const double t = static_cast<double>(trials);
  m.miller_madow = (static_cast<double>(m.support_size) - 1.0) / (2.0 * t * std::numbers::ln2);
  long double second = 0;
  for (const auto& kv : counts) {
    const long double p = static_cast<long double>(kv.second) / t;
    const long double l = std::log2(p);
    second += p * l * l;
  }
  const double var = std::max(0.0, static_cast<double>(second) - m.value * m.value);
  m.confidence_radius = kZ99 * std::sqrt(var / t);
  m.bias_note = "plug-in estimate; Miller-Madow term reported separately, not added";
  return m;
}

// Monte Carlo estimate of H(A(S^k)). Trial i draws its k samples from
// rng.derive(i).derive(j) and the algorithm's coins from rng.derive(i).derive(k).
template <class Algorithm>
EntropyEstimate estimate_entropy_mc(const Algorithm& a, const RealizableDistribution& d, std::size_t n,
                                    std::size_t k, std::size_t trials, const RandomSource& rng,
                                    std::size_t threads = 1) {
  if (trials < 100) throw InvalidArgument("estimate_entropy_mc: trials must be >= 100");
  if (n == 0 || k == 0) throw InvalidArgument("estimate_entropy_mc: n and k must be >= 1");
  EntropyEstimate out;
  out.per_trial = parallel_map<Outcome>(trials, threads, [&](std::size_t i) {
    const RandomSource trial = rng.derive(i);
    std::vector<Sample> samples;
    samples.reserve(k);
    for (std::size_t j = 0; j < k; ++j) {
      RandomSource data_rng = trial.derive(j);
      samples.push_back(draw_sample(d, n, data_rng));
    }
    RandomSource coins = trial.derive(k);
    return Outcome(a(std::span<const Sample>(samples), coins));
  });
  for (const auto& o : out.per_trial) ++out.counts[o];
  out.estimate = plugin_estimate(out.counts, trials);
  return out;
}

/// A_G as an algorithm over S^k: G on each sample, then the vote.
template <class G>
auto boosted_algorithm(G g, std::size_t threshold) {
  return [g = std::move(g), threshold](std::span<const Sample> samples, auto& coins) -> Outcome {
    return boost_on_samples(g, samples, threshold, coins).function;
  };
}

/// A single run of G as an algorithm over S^1.
template <class G>
auto single_run_algorithm(G g) {
  return [g = std::move(g)](std::span<const Sample> samples, auto& coins) -> Outcome {
    return Outcome(g(samples.front(), coins));
  };
}

// ---------------------------------------------------------------------------
// Closed-form bounds.

/// 1 / (e ln 2), the maximum of -p log2 p.
inline double entropy_term_cap() { return 1.0 / (std::numbers::e * std::numbers::ln2); }

struct Theorem1Bound {
  std::size_t k = 0;
  double eta = 0.0;
  double r = 0.0;                // 2^(1 - eta k / 2)
  double log2_first_term = 0.0;  // 3 + log2 k - eta k / 2 - k log2(1 - eta / 2)
  double first_term = 0.0;       // 4 k r (1 - eta/2)^-k
  double h1_series = 0.0;        // 2 k r (1 - eta/2)^-k / (1 - r^2), before the 1-r^2 > 1/2 step
  double h2_term = 0.0;          // log2(4 / eta)
  double h_failure_cap = 0.0;    // 1 / (e ln 2)
  double h1_correction = 0.0;    // 2 / (e ln 2)
  double total = 0.0;
  double k_trend = 0.0;          // eta/2 + log2(1 - eta/2); negative means the first term grows with k

  double constant_term() const { return h_failure_cap + h1_correction; }
};

inline Theorem1Bound bound_theorem1(std::size_t k, double eta) {
  if (!(eta > 0.0 && eta <= 1.0)) throw InvalidArgument("bound_theorem1: eta must lie in (0, 1]");
  if (k == 0) throw InvalidArgument("bound_theorem1: k must be >= 1");
  const double kd = static_cast<double>(k);
  if (eta * kd / 2.0 < 2.0 - 1e-9) throw InvalidArgument("bound_theorem1: requires eta * k / 2 >= 2");
  Theorem1Bound b;
  b.k = k;
  b.eta = eta;
  const double log2_keep = std::log2(1.0 - eta / 2.0);
  b.r = std::exp2(1.0 - eta * kd / 2.0);
  b.log2_first_term = 3.0 + std::log2(kd) - eta * kd / 2.0 - kd * log2_keep;
  b.first_term = std::exp2(b.log2_first_term);
  b.h1_series = std::exp2(1.0 + std::log2(kd) + std::log2(b.r) - kd * log2_keep) / (1.0 - b.r * b.r);
  b.h2_term = std::log2(4.0 / eta);
  b.h_failure_cap = entropy_term_cap();
  b.h1_correction = 2.0 * entropy_term_cap();
  b.total = b.first_term + b.h2_term + b.h_failure_cap + b.h1_correction;
  b.k_trend = eta / 2.0 + log2_keep;
  return b;
}

/// 2^d + log2(d+1) + 3 + 3/(e ln 2).
inline double bound_theorem2(int d) {
  if (d < 0) throw InvalidArgument("bound_theorem2: d must be >= 0");
  return std::ldexp(1.0, d) + std::log2(static_cast<double>(d) + 1.0) + 3.0 + 3.0 * entropy_term_cap();
}

/// log2(d+1) + 2 + 3/(e ln 2).
inline double proposition_affine_bound(int d) {
  if (d < 0) throw InvalidArgument("proposition_affine_bound: d must be >= 0");
  return std::log2(static_cast<double>(d) + 1.0) + 2.0 + 3.0 * entropy_term_cap();
}

struct FailureAndLemmaBounds {
  double failure_bound = 0.0;  // e^(-k eta^2 / 2)
  double lemma2_bound = 0.0;   // log2(1/eta) / n1
  double lemma3_loss = 0.0;    // log2(4/eta) / n1
  double h_failure_cap = 0.0;  // 1 / (e ln 2)
};

inline FailureAndLemmaBounds failure_and_lemma_bounds(std::size_t k, double eta, std::uint64_t n1) {
  if (!(eta > 0.0 && eta <= 1.0)) throw InvalidArgument("failure_and_lemma_bounds: eta must lie in (0, 1]");
  if (k == 0 || n1 == 0) throw InvalidArgument("failure_and_lemma_bounds: k and n1 must be >= 1");
  FailureAndLemmaBounds b;
  b.failure_bound = std::exp(-static_cast<double>(k) * eta * eta / 2.0);
  b.lemma2_bound = std::log2(1.0 / eta) / static_cast<double>(n1);
  b.lemma3_loss = std::log2(4.0 / eta) / static_cast<double>(n1);
  b.h_failure_cap = entropy_term_cap();
  return b;
}

struct BoundInputs {
  int d = 0;
  std::size_t k = 0;
  double eta = 0.0;
  std::uint64_t n1 = 0;
  double epsilon = 0.0;
  double delta = 0.0;
};

struct BoundReport {
  BoundInputs inputs;
  std::optional<Theorem1Bound> theorem1;  // absent when eta k / 2 < 2
  double theorem2_rhs = 0.0;
  double proposition_rhs = 0.0;
  FailureAndLemmaBounds lemmas;
};

inline BoundReport bound_report(const BoundInputs& in) {
  BoundReport r;
  r.inputs = in;
  if (in.eta * static_cast<double>(in.k) / 2.0 >= 2.0 - 1e-9) r.theorem1 = bound_theorem1(in.k, in.eta);
  r.theorem2_rhs = bound_theorem2(in.d);
  r.proposition_rhs = proposition_affine_bound(in.d);
  r.lemmas = failure_and_lemma_bounds(in.k, in.eta, in.n1);
  return r;
}

// Split of G's single-run outputs: F1 has probability <= eta/4, F2 above.
struct OutputPartition {
  double eta = 0.0;
  double failure_mass = 0.0;
  std::vector<std::pair<Hypothesis, double>> f1;
  std::vector<std::pair<Hypothesis, double>> f2;

  /// |F2| < 4 / eta.
  bool f2_bound_holds() const { return static_cast<double>(f2.size()) < 4.0 / eta; }
};

inline OutputPartition partition_outputs(const OutputDistribution& dist, double eta) {
  if (!(eta > 0.0 && eta <= 1.0)) throw InvalidArgument("partition_outputs: eta must lie in (0, 1]");
  OutputPartition p;
  p.eta = eta;
  for (const auto& [o, prob] : dist.support) {
    if (!o) {
      p.failure_mass += prob;
    } else if (prob <= eta / 4.0) {
      p.f1.emplace_back(*o, prob);
    } else {
      p.f2.emplace_back(*o, prob);
    }
  }
  return p;
}

}  // namespace ldinfo
