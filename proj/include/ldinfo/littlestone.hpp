#pragma once

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ldinfo/core.hpp"

namespace ldinfo {

/// ldim of an empty version space; ranks below every real value.
inline constexpr int kEmptyLdim = -1;

// Recursive Littlestone dimension over version spaces of one class, memoized
// on the row set. Lookups may run concurrently; inserts are serialized.
class LdimSolver {
 public:
  explicit LdimSolver(HypothesisClass c) : class_(std::move(c)) {}

  const HypothesisClass& hypothesis_class() const noexcept { return class_; }

  int ldim() const { return ldim(class_.all()); }

  int ldim(const RowSet& v) const {
    const std::size_t n = v.count();
    if (n == 0) return kEmptyLdim;
    if (n == 1) return 0;
    {
      std::shared_lock lock(mu_);
      if (auto it = memo_.find(v); it != memo_.end()) return it->second;
    }
    const int value = compute(v, n);
    std::unique_lock lock(mu_);
    memo_.emplace(v, value);
    return value;
  }

  std::size_t memo_size() const {
    std::shared_lock lock(mu_);
    return memo_.size();
  }

  /// SOA label for x under version space v: the label whose restriction has
  /// the larger ldim, empty restrictions losing and ties going to 1.
  bool soa_label(const RowSet& v, DomainPoint x) const {
    const RowSet one = v & class_.ones(x);
    const RowSet zero = v.minus(class_.ones(x));
    if (one.none() && zero.none()) throw InvalidArgument("soa: empty version space");
    if (zero.none()) return true;
    if (one.none()) return false;
    return ldim(one) >= ldim(zero);
  }

  /// SOA output function: soa_label at every domain point.
  Hypothesis soa_output(const RowSet& v) const {
    Hypothesis::Row row(class_.domain_size());
    for (std::size_t i = 0; i < row.size(); ++i) row[i] = soa_label(v, DomainPoint{i}) ? 1 : 0;
    return Hypothesis(std::move(row));
  }

 private:
  static int floor_log2(std::size_t n) { return static_cast<int>(std::bit_width(n)) - 1; }

  int compute(const RowSet& v, std::size_t n) const {
    const int cap = floor_log2(n);
    int best = 0;
    for (std::size_t i = 0; i < class_.domain_size() && best < cap; ++i) {
      const RowSet& col = class_.ones(DomainPoint{i});
      RowSet one = v & col;
      const std::size_t c1 = one.count();
      if (c1 == 0 || c1 == n) continue;
      RowSet zero = v.minus(col);
      const bool one_smaller = c1 <= n - c1;
      const RowSet& small = one_smaller ? one : zero;
      const RowSet& large = one_smaller ? zero : one;
      if (1 + floor_log2(std::min(c1, n - c1)) <= best) continue;
      const int ls = ldim(small);
      if (1 + ls <= best) continue;
      const int ll = ldim(large);
      best = std::max(best, 1 + std::min(ls, ll));
    }
    return best;
  }

  HypothesisClass class_;
  mutable std::shared_mutex mu_;
  mutable std::unordered_map<RowSet, int, RowSetHash> memo_;
};

inline int ldim(const HypothesisClass& c) { return LdimSolver(c).ldim(); }

inline constexpr std::size_t kDefaultSearchBudget = 50'000'000;

// Independent check for ldim: searches explicitly for a complete mistake tree
// of the given depth whose every root-to-leaf path is realized by the class.
// Nodes are assigned in heap order (root 1, children 2i and 2i+1) and each
// candidate is tested by scanning the rows directly.
inline bool ldim_bruteforce(const HypothesisClass& c, int depth,
                            std::size_t max_nodes = kDefaultSearchBudget) {
  if (depth < 1) throw InvalidArgument("ldim_bruteforce: depth must be >= 1");
  if (depth > 16) throw ResourceError("ldim_bruteforce: depth beyond 16 is not searchable");
  const std::size_t internal = (std::size_t{1} << depth) - 1;
  std::vector<std::size_t> node(internal + 1, 0);
  std::size_t explored = 0;
  const auto& rows = c.rows();

  // Is there a row agreeing with every ancestor edge of `i` and labeling x by y?
  auto realizable = [&](std::size_t i, std::size_t x, bool y) {
    for (const auto& h : rows) {
      if (h.label(x) != y) continue;
      bool ok = true;
      for (std::size_t child = i; child > 1; child /= 2) {
        const std::size_t parent = child / 2;
        const bool edge = (child & 1U) != 0;
        if (h.label(node[parent]) != edge) {
          ok = false;
          break;
        }
      }
      if (ok) return true;
    }
    return false;
  };

  std::function<bool(std::size_t)> assign = [&](std::size_t i) -> bool {
    if (i > internal) return true;
    for (std::size_t x = 0; x < c.domain_size(); ++x) {
      if (++explored > max_nodes) throw ResourceError("ldim_bruteforce: search budget exceeded");
      if (!realizable(i, x, false) || !realizable(i, x, true)) continue;
      node[i] = x;
      if (assign(i + 1)) return true;
    }
    return false;
  };
  return assign(1);
}

/// Largest depth accepted by ldim_bruteforce (0 when none is).
inline int ldim_by_trees(const HypothesisClass& c, std::size_t max_nodes = kDefaultSearchBudget) {
  int d = 0;
  while (ldim_bruteforce(c, d + 1, max_nodes)) ++d;
  return d;
}

// Online SOA learner with the version space kept as a row set of the class.
class Soa {
 public:
  explicit Soa(std::shared_ptr<const LdimSolver> solver)
      : solver_(std::move(solver)), version_(solver_->hypothesis_class().all()) {}

  bool predict(DomainPoint x) const {
    solver_->hypothesis_class().check_point(x);
    return solver_->soa_label(version_, x);
  }

  /// Predict, reveal, restrict. Returns whether the prediction was a mistake.
  bool observe(const LabeledExample& ex) {
    const bool mistake = predict(ex.x) != ex.y;
    RowSet next = solver_->hypothesis_class().consistent(version_, ex.x, ex.y);
    history_.push_back(ex);
    if (next.none()) throw NotRealizableError(history_.size(), "soa: sequence is not realizable by the class");
    version_ = std::move(next);
    if (mistake) ++mistakes_;
    return mistake;
  }

  const RowSet& rows() const noexcept { return version_; }
  std::size_t mistakes() const noexcept { return mistakes_; }
  const Sample& history() const noexcept { return history_; }
  const LdimSolver& solver() const noexcept { return *solver_; }

  HypothesisClass version_space() const { return *solver_->hypothesis_class().subset(version_); }

  Hypothesis output() const { return solver_->soa_output(version_); }

 private:
  std::shared_ptr<const LdimSolver> solver_;
  RowSet version_;
  std::size_t mistakes_ = 0;
  Sample history_;
};

inline bool soa_predict(const Soa& state, DomainPoint x) { return state.predict(x); }

struct SoaRun {
  Hypothesis output;
  std::size_t mistakes = 0;
};

inline SoaRun soa_run(std::shared_ptr<const LdimSolver> solver, std::span<const LabeledExample> sequence) {
  Soa soa(std::move(solver));
  for (const auto& ex : sequence) soa.observe(ex);
  return {soa.output(), soa.mistakes()};
}

inline SoaRun soa_run(const HypothesisClass& c, std::span<const LabeledExample> sequence) {
  return soa_run(std::make_shared<const LdimSolver>(c), sequence);
}

/// Deterministic online learner driven by an explicit state value.
template <class L>
concept OnlineLearner = requires(const L& l, const typename L::State& s, DomainPoint x, bool y) {
  { l.initial() } -> std::convertible_to<typename L::State>;
  { l.predict(s, x) } -> std::convertible_to<bool>;
  { l.update(s, x, y) } -> std::convertible_to<typename L::State>;
};

struct SoaLearner {
  using State = RowSet;
  std::shared_ptr<const LdimSolver> solver;

  State initial() const { return solver->hypothesis_class().all(); }
  bool predict(const State& v, DomainPoint x) const { return solver->soa_label(v, x); }
  State update(const State& v, DomainPoint x, bool y) const {
    return solver->hypothesis_class().consistent(v, x, y);
  }
};

struct ConstantLearner {
  struct State {};
  bool label = false;

  State initial() const { return {}; }
  bool predict(const State&, DomainPoint) const { return label; }
  State update(const State& s, DomainPoint, bool) const { return s; }
};

/// Wraps any callable (history, x) -> bool as an online learner.
template <class F>
struct HistoryLearner {
  using State = Sample;
  F predict_fn;

  State initial() const { return {}; }
  bool predict(const State& h, DomainPoint x) const { return predict_fn(h, x); }
  State update(State h, DomainPoint x, bool y) const {
    h.push_back({x, y});
    return h;
  }
};

template <class F>
HistoryLearner(F) -> HistoryLearner<F>;

// Exact value of the finite-horizon mistake game: the adversary picks a point
// and any label that keeps the sequence realizable, the learner predicts
// first, and the result is the largest mistake count over all sequences of
// length <= horizon.
template <OnlineLearner L>
std::size_t worst_case_mistakes(const L& learner, const HypothesisClass& c, std::size_t horizon,
                                std::size_t max_nodes = kDefaultSearchBudget) {
  std::size_t explored = 0;
  std::function<std::size_t(const RowSet&, const typename L::State&, std::size_t)> value =
      [&](const RowSet& v, const typename L::State& s, std::size_t remaining) -> std::size_t {
    if (remaining == 0) return 0;
    std::size_t best = 0;
    for (std::size_t i = 0; i < c.domain_size() && best < remaining; ++i) {
      const DomainPoint x{i};
      const bool guess = learner.predict(s, x);
      for (bool y : {false, true}) {
        if (++explored > max_nodes) throw ResourceError("worst_case_mistakes: search budget exceeded");
        RowSet next = c.consistent(v, x, y);
        if (next.none()) continue;
        const std::size_t here = (guess != y ? 1 : 0);
        // This branch is worth at most here + remaining - 1.
        if (here + remaining - 1 <= best) continue;
        best = std::max(best, here + value(next, learner.update(s, x, y), remaining - 1));
      }
    }
    return best;
  };
  return value(c.all(), learner.initial(), horizon);
}

}  // namespace ldinfo
