#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ldinfo/core.hpp"
#include "ldinfo/littlestone.hpp"
#include "ldinfo/parallel.hpp"

namespace ldinfo {

using BigInt = boost::multiprecision::cpp_int;

/// ceil(x), except that values within a relative 1e-9 of an integer snap to
/// it; keeps decimal inputs such as 32/0.1 from rounding up a whole unit.
inline std::uint64_t snapped_ceil(double x) {
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x))) return static_cast<std::uint64_t>(r);
  return static_cast<std::uint64_t>(std::ceil(x));
}

enum class Regime { faithful, desk_scale };

inline const char* to_string(Regime r) { return r == Regime::faithful ? "faithful" : "desk-scale"; }

/// Sample-size budget at which faithful runs are still considered executable.
inline constexpr std::uint64_t kDeskScaleLimit = 1'000'000;

struct StabilityParams {
  int d = 0;
  double epsilon = 0.0;
  BigInt n;                   // 2^(2^(d+2)+1) * 4^(d+1) * n1
  std::uint64_t n1 = 0;       // ceil(2^(d+2) / epsilon)
  double eta = 0.0;           // 2^-(2^d+1) / (d+1)
  double log2_eta = 0.0;
  std::size_t leaf_size = 0;  // examples per tournament leaf
  Regime regime = Regime::faithful;
  bool executable = false;    // n fits the desk-scale budget

  /// Examples G reads from its input: the consistency prefix plus 2^d leaves.
  std::size_t sample_size() const { return static_cast<std::size_t>(n1) + (std::size_t{1} << d) * leaf_size; }
};

inline StabilityParams lemma1_params(int d, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidArgument("lemma1_params: epsilon must lie in (0, 1)");
  if (d < 0) throw InvalidArgument("lemma1_params: d must be >= 0");
  if (d > 20) throw ResourceError("lemma1_params: d > 20 gives a sample size beyond 2^(2^22) bits");
  StabilityParams p;
  p.d = d;
  p.epsilon = epsilon;
  p.n1 = snapped_ceil(std::ldexp(1.0, d + 2) / epsilon);
  const unsigned exponent = (1U << (d + 2)) + 1U + 2U * static_cast<unsigned>(d + 1);
  p.n = (BigInt(1) << exponent) * p.n1;
  p.log2_eta = -(std::ldexp(1.0, d) + 1.0) - std::log2(static_cast<double>(d + 1));
  p.eta = std::ldexp(1.0, -((1 << d) + 1)) / static_cast<double>(d + 1);
  p.executable = p.n <= kDeskScaleLimit;
  // Faithful leaves split the rest of n evenly over the 2^d deepest leaves.
  const BigInt leaves = (p.n - p.n1) >> d;
  p.leaf_size = leaves <= BigInt(std::numeric_limits<std::size_t>::max() >> (d + 1))
                    ? static_cast<std::size_t>(leaves)
                    : 0;
  p.regime = Regime::faithful;
  return p;
}

/// Same d, epsilon and eta with explicit small leaf and prefix sizes.
inline StabilityParams desk_scale(StabilityParams p, std::size_t leaf_size, std::uint64_t n1) {
  if (leaf_size == 0 || n1 == 0) throw InvalidArgument("desk_scale: leaf_size and n1 must be >= 1");
  p.leaf_size = leaf_size;
  p.n1 = n1;
  p.regime = Regime::desk_scale;
  p.executable = true;
  return p;
}

struct AugmentedEntry {
  LabeledExample example;
  bool hallucinated = false;
};

/// Real examples interleaved with hallucinated disagreement examples.
struct AugmentedSequence {
  std::vector<AugmentedEntry> entries;
  std::size_t forced_mistakes = 0;

  void append_real(std::span<const LabeledExample> s) {
    for (const auto& ex : s) entries.push_back({ex, false});
  }
  void append_hallucinated(const LabeledExample& ex) {
    entries.push_back({ex, true});
    ++forced_mistakes;
  }

  Sample examples() const {
    Sample s;
    s.reserve(entries.size());
    for (const auto& e : entries) s.push_back(e.example);
    return s;
  }
  Sample real_examples() const {
    Sample s;
    for (const auto& e : entries) {
      if (!e.hallucinated) s.push_back(e.example);
    }
    return s;
  }
};

enum class Resolution {
  leaf,      // level 0
  agreed,    // both halves produced the same function
  chosen,    // disagreement, the coin's branch was extended
  switched,  // disagreement, the coin's branch was infeasible so the other one was extended
  stalled,   // disagreement, neither extension is realizable; left half returned as is
};

struct TournamentResult {
  AugmentedSequence sequence;
  RowSet version_space;  // rows consistent with every entry of `sequence`
  Hypothesis output;     // SOA output on `sequence`
  Resolution resolution = Resolution::leaf;

  bool agreed() const { return resolution == Resolution::agreed; }
};

namespace detail {

template <CoinSource Coins>
TournamentResult tournament(int t, const LdimSolver& solver, SampleCursor& data, std::size_t leaf_size,
                            Coins& coins) {
  const auto& c = solver.hypothesis_class();
  if (t == 0) {
    TournamentResult r;
    const Sample leaf = data.take(leaf_size);
    r.sequence.append_real(leaf);
    r.version_space = c.consistent(leaf);
    if (r.version_space.none()) throw NotRealizableError(leaf.size(), "tournament: leaf sample not realizable");
    r.output = solver.soa_output(r.version_space);
    return r;
  }
  TournamentResult left = detail::tournament(t - 1, solver, data, leaf_size, coins);
  TournamentResult right = detail::tournament(t - 1, solver, data, leaf_size, coins);
  if (left.output == right.output) {
    left.resolution = Resolution::agreed;
    return left;
  }
  std::size_t xi = 0;
  while (left.output.label(xi) == right.output.label(xi)) ++xi;
  const DomainPoint x{xi};

  // Extend `base` by x labeled with the other side's prediction; the SOA on
  // base predicts the opposite label there, so this forces one mistake.
  auto extend = [&](TournamentResult& base, const Hypothesis& other) -> bool {
    const bool y = other(x);
    RowSet next = c.consistent(base.version_space, x, y);
    if (next.none()) return false;
    base.sequence.append_hallucinated({x, y});
    base.version_space = std::move(next);
    base.output = solver.soa_output(base.version_space);
    return true;
  };

  const bool pick_right = coins.choose(2) == 1;
  TournamentResult& first = pick_right ? right : left;
  TournamentResult& second = pick_right ? left : right;
  const Hypothesis first_other = pick_right ? left.output : right.output;
  const Hypothesis second_other = pick_right ? right.output : left.output;
  if (extend(first, first_other)) {
    first.resolution = Resolution::chosen;
    return std::move(first);
  }
  if (extend(second, second_other)) {
    second.resolution = Resolution::switched;
    return std::move(second);
  }
  left.resolution = Resolution::stalled;
  return left;
}

}  // namespace detail

/// Level-t tournament reading 2^t * leaf_size examples from `data`.
template <CoinSource Coins>
TournamentResult tournament(int t, const LdimSolver& solver, SampleCursor& data, std::size_t leaf_size,
                            Coins& coins) {
  if (t < 0) throw InvalidArgument("tournament: level must be >= 0");
  if (t > 30) throw ResourceError("tournament: level too deep");
  if (leaf_size == 0) throw InvalidArgument("tournament: leaf_size must be >= 1");
  return detail::tournament(t, solver, data, leaf_size, coins);
}

/// Draws the 2^t * leaf_size examples from D (data stream 0 of rng) and flips
/// the comparison coins from stream 1.
inline TournamentResult tournament(int t, const LdimSolver& solver, const RealizableDistribution& d,
                                   std::size_t leaf_size, const RandomSource& rng) {
  if (t < 0 || t > 30) throw InvalidArgument("tournament: level out of range");
  RandomSource data_rng = rng.derive(0);
  RandomSource coin_rng = rng.derive(1);
  const Sample s = draw_sample(d, (std::size_t{1} << t) * leaf_size, data_rng);
  SampleCursor cursor(s);
  return tournament(t, solver, cursor, leaf_size, coin_rng);
}

struct StableRun {
  Hypothesis output;
  int level = 0;
  TournamentResult tournament;
  Sample prefix;                        // designated consistency prefix S[0:n1]
  std::size_t dropped_hallucinations = 0;
};

// The globally stable learner G. Reads the consistency prefix P = S[0:n1],
// draws a level uniformly from {0..d}, runs the tournament on the following
// examples, and returns the SOA output on (tournament sequence, P).
// Hallucinated entries that would make that sequence non-realizable together
// with the real data are skipped, so the output is always consistent with P.
class GloballyStableLearner {
 public:
  GloballyStableLearner(std::shared_ptr<const LdimSolver> solver, StabilityParams params)
      : solver_(std::move(solver)), params_(std::move(params)) {
    if (params_.leaf_size == 0) throw InvalidArgument("stable learner: leaf_size is 0 (parameters not executable)");
    if (params_.d < 0 || params_.d > 30) throw InvalidArgument("stable learner: d out of range");
  }

  const StabilityParams& params() const noexcept { return params_; }
  const LdimSolver& solver() const noexcept { return *solver_; }
  std::size_t sample_size() const { return params_.sample_size(); }

  template <CoinSource Coins>
  StableRun run(std::span<const LabeledExample> s, Coins& coins) const {
    const auto& c = solver_->hypothesis_class();
    SampleCursor cursor(s);
    StableRun out;
    out.prefix = cursor.take(static_cast<std::size_t>(params_.n1));
    out.level = static_cast<int>(coins.choose(static_cast<std::size_t>(params_.d) + 1));
    out.tournament = ldinfo::tournament(out.level, *solver_, cursor, params_.leaf_size, coins);

    const RowSet prefix_space = c.consistent(out.prefix);
    const RowSet real_space = c.consistent(out.tournament.sequence.real_examples()) & prefix_space;
    if (real_space.none()) throw NotRealizableError(s.size(), "stable learner: input sample not realizable");
    RowSet v = c.all();
    for (const auto& e : out.tournament.sequence.entries) {
      RowSet next = c.consistent(v, e.example.x, e.example.y);
      if (e.hallucinated && !next.intersects(real_space)) {
        ++out.dropped_hallucinations;
        continue;
      }
      v = std::move(next);
    }
    v &= prefix_space;
    out.output = solver_->soa_output(v);
    return out;
  }

  template <CoinSource Coins>
  Hypothesis operator()(std::span<const LabeledExample> s, Coins& coins) const {
    return run(s, coins).output;
  }

 private:
  std::shared_ptr<const LdimSolver> solver_;
  StabilityParams params_;
};

/// One run of G on a fresh sample from D: data from stream 0, coins from 1.
inline StableRun globally_stable_learn(const GloballyStableLearner& g, const RealizableDistribution& d,
                                       const RandomSource& rng) {
  RandomSource data_rng = rng.derive(0);
  RandomSource coin_rng = rng.derive(1);
  const Sample s = draw_sample(d, g.sample_size(), data_rng);
  return g.run(s, coin_rng);
}

inline StableRun globally_stable_learn(const HypothesisClass& c, const RealizableDistribution& d,
                                       const StabilityParams& params, const RandomSource& rng) {
  GloballyStableLearner g(std::make_shared<const LdimSolver>(c), params);
  return globally_stable_learn(g, d, rng);
}

/// Two-sided 99% normal quantile.
inline constexpr double kZ99 = 2.5758293035489004;

struct WilsonInterval {
  double center = 0.0;
  double radius = 0.0;
  double lower() const { return center - radius; }
  double upper() const { return center + radius; }
};

inline WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z = kZ99) {
  if (trials == 0) throw InvalidArgument("wilson_interval: no trials");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  WilsonInterval w;
  w.center = (p + z2 / (2.0 * n)) / denom;
  w.radius = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  return w;
}

struct StabilityReport {
  std::map<Hypothesis, std::size_t> counts;
  std::size_t trials = 0;
  std::size_t failures = 0;  // trials with no function output
  Hypothesis f0;             // most frequent output, smallest on ties
  double eta_hat = 0.0;
  double confidence_radius = 0.0;  // Wilson, 99%
  double wilson_lower = 0.0;

  double frequency(const Hypothesis& h) const {
    auto it = counts.find(h);
    return it == counts.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(trials);
  }
};

/// Builds the report from per-trial outputs (nullopt = no function).
inline StabilityReport make_stability_report(const std::vector<std::optional<Hypothesis>>& outputs) {
  if (outputs.empty()) throw InvalidArgument("stability report: no trials");
  StabilityReport r;
  r.trials = outputs.size();
  for (const auto& o : outputs) {
    if (o) {
      ++r.counts[*o];
    } else {
      ++r.failures;
    }
  }
  std::size_t best = 0;
  for (const auto& [h, c] : r.counts) {
    if (c > best) {
      best = c;
      r.f0 = h;
    }
  }
  r.eta_hat = static_cast<double>(best) / static_cast<double>(r.trials);
  const auto w = wilson_interval(best, r.trials);
  r.confidence_radius = w.radius;
  r.wilson_lower = w.lower();
  return r;
}

/// Runs `learner(rng_i)` for trial streams rng_i = rng.derive(i). The learner
/// returns a Hypothesis or an optional one.
template <class Learner>
StabilityReport empirical_stability(const Learner& learner, std::size_t trials, const RandomSource& rng,
                                    std::size_t threads = 1) {
  if (trials == 0) throw InvalidArgument("empirical_stability: trials must be >= 1");
  auto outputs = parallel_map<std::optional<Hypothesis>>(trials, threads, [&](std::size_t i) {
    RandomSource r = rng.derive(i);
    return std::optional<Hypothesis>(learner(r));
  });
  return make_stability_report(outputs);
}

}  // namespace ldinfo
