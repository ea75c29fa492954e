#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "ldinfo/core.hpp"
#include "ldinfo/parallel.hpp"
#include "ldinfo/stable.hpp"

namespace ldinfo {

/// C_k: how often each function occurs among k outputs, keyed in canonical
/// (lexicographic) order.
class FrequencyTable {
 public:
  void add(const Hypothesis& h, std::size_t times = 1) {
    counts_[h] += times;
    k_ += times;
  }

  std::size_t k() const noexcept { return k_; }
  const std::map<Hypothesis, std::size_t>& counts() const noexcept { return counts_; }

  std::size_t count(const Hypothesis& h) const {
    auto it = counts_.find(h);
    return it == counts_.end() ? 0 : it->second;
  }

  /// Largest count, first in canonical order among ties.
  std::optional<std::pair<Hypothesis, std::size_t>> plurality() const {
    std::optional<std::pair<Hypothesis, std::size_t>> best;
    for (const auto& [h, c] : counts_) {
      if (!best || c > best->second) best.emplace(h, c);
    }
    return best;
  }

 private:
  std::map<Hypothesis, std::size_t> counts_;
  std::size_t k_ = 0;
};

inline FrequencyTable frequency_table(std::span<const Hypothesis> outputs) {
  if (outputs.empty()) throw InvalidArgument("frequency_table: no outputs");
  FrequencyTable t;
  for (const auto& h : outputs) t.add(h);
  return t;
}

/// Integer vote threshold ceil(eta * k / 2).
inline std::size_t vote_threshold(double eta, std::size_t k) {
  return static_cast<std::size_t>(snapped_ceil(eta * static_cast<double>(k) / 2.0));
}

struct BoostConfig {
  std::size_t k = 0;
  double eta = 0.0;
  std::size_t n = 0;  // per-run sample size
  std::uint64_t seed = 0;

  void validate() const {
    if (k == 0) throw InvalidArgument("boost config: k must be >= 1");
    if (!(eta > 0.0 && eta <= 1.0)) throw InvalidArgument("boost config: eta must lie in (0, 1]");
    if (n == 0) throw InvalidArgument("boost config: n must be >= 1");
    if (eta * static_cast<double>(k) / 2.0 < 2.0 - 1e-9) {
      throw InvalidArgument("boost config: eta * k / 2 must be >= 2");
    }
  }

  std::size_t threshold() const { return vote_threshold(eta, k); }
};

/// Either the plurality function or Failure, with the table it came from.
struct BoostOutcome {
  std::optional<Hypothesis> function;
  FrequencyTable table;
  std::size_t threshold = 0;

  bool failed() const noexcept { return !function.has_value(); }
  std::size_t count() const { return function ? table.count(*function) : 0; }
};

/// The vote of Algorithm A_G on given outputs g_1..g_k.
inline BoostOutcome majority_vote(std::span<const Hypothesis> outputs, std::size_t threshold) {
  BoostOutcome out;
  out.table = frequency_table(outputs);
  out.threshold = threshold;
  auto best = out.table.plurality();
  if (best && best->second >= threshold) out.function = best->first;
  return out;
}

/// A_G over already-drawn samples S_1..S_k; every run of G draws from
/// `coins` in order.
template <class G, class Coins>
BoostOutcome boost_on_samples(const G& g, std::span<const Sample> samples, std::size_t threshold, Coins& coins) {
  std::vector<Hypothesis> outputs;
  outputs.reserve(samples.size());
  for (const auto& s : samples) outputs.push_back(g(s, coins));
  return majority_vote(outputs, threshold);
}

// Draws S_i ~ D^n for i < k and votes over g_i = G(S_i). Run i uses
// rng.derive(2i) for data and rng.derive(2i+1) for G's coins, so the outcome
// does not depend on `threads`.
template <class G>
BoostOutcome run_boost(const G& g, const RealizableDistribution& d, const BoostConfig& cfg,
                       const RandomSource& rng, std::size_t threads = 1) {
  cfg.validate();
  auto outputs = parallel_map<Hypothesis>(cfg.k, threads, [&](std::size_t i) {
    RandomSource data_rng = rng.derive(2 * i);
    RandomSource coin_rng = rng.derive(2 * i + 1);
    const Sample s = draw_sample(d, cfg.n, data_rng);
    return Hypothesis(g(s, coin_rng));
  });
  return majority_vote(outputs, cfg.threshold());
}

/// k = ceil(max(4 ln(1/delta) / eta, 10 / eta)).
inline std::size_t k_choice(double delta, double eta) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("k_choice: delta must lie in (0, 1)");
  if (!(eta > 0.0 && eta <= 1.0)) throw InvalidArgument("k_choice: eta must lie in (0, 1]");
  const double k = std::max(4.0 * std::log(1.0 / delta) / eta, 10.0 / eta);
  return static_cast<std::size_t>(snapped_ceil(k));
}

}  // namespace ldinfo
