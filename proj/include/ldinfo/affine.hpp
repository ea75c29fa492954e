#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ldinfo/core.hpp"
#include "ldinfo/random.hpp"

namespace ldinfo {

using FqVector = std::vector<std::uint32_t>;

/// Arithmetic mod a prime q.
class PrimeField {
 public:
  explicit PrimeField(std::uint32_t q) : q_(q) {
    if (!is_prime(q)) throw InvalidArgument("PrimeField: q must be prime, got " + std::to_string(q));
    if (q > 65521) throw InvalidArgument("PrimeField: q must be < 2^16");
  }

  static bool is_prime(std::uint32_t q) {
    if (q < 2) return false;
    for (std::uint32_t p = 2; p * p <= q; ++p) {
      if (q % p == 0) return false;
    }
    return true;
  }

  std::uint32_t q() const noexcept { return q_; }
  std::uint32_t add(std::uint32_t a, std::uint32_t b) const { return (a + b) % q_; }
  std::uint32_t sub(std::uint32_t a, std::uint32_t b) const { return (a + q_ - b) % q_; }
  std::uint32_t mul(std::uint32_t a, std::uint32_t b) const {
    return static_cast<std::uint32_t>((std::uint64_t{a} * b) % q_);
  }
  std::uint32_t inv(std::uint32_t a) const {
    if (a % q_ == 0) throw InvalidArgument("PrimeField: zero has no inverse");
    // a^(q-2)
    std::uint32_t result = 1, base = a % q_, e = q_ - 2;
    while (e) {
      if (e & 1U) result = mul(result, base);
      base = mul(base, base);
      e >>= 1;
    }
    return result;
  }

 private:
  std::uint32_t q_;
};

/// H_{d,l} over F_q^l: indicators of affine subspaces of dimension <= d.
struct AffineClassParams {
  std::uint32_t q = 2;
  std::size_t l = 1;
  int d = 0;

  void validate() const {
    PrimeField f(q);
    if (l == 0) throw InvalidArgument("affine params: l must be >= 1");
    if (d < 0 || static_cast<std::size_t>(d) >= l) throw InvalidArgument("affine params: need 0 <= d < l");
    if (domain_size() > (std::size_t{1} << 20)) throw ResourceError("affine params: q^l exceeds 2^20 points");
  }

  std::size_t domain_size() const {
    std::size_t n = 1;
    for (std::size_t i = 0; i < l; ++i) {
      n *= q;
      if (n > (std::size_t{1} << 40)) return n;
    }
    return n;
  }

  /// Domain index -> vector; coordinate 0 is the most significant digit, so
  /// index order is lexicographic order.
  FqVector point(std::size_t index) const {
    FqVector v(l);
    for (std::size_t i = l; i-- > 0;) {
      v[i] = static_cast<std::uint32_t>(index % q);
      index /= q;
    }
    return v;
  }

  std::size_t index(const FqVector& v) const {
    if (v.size() != l) throw InvalidArgument("affine: vector has the wrong dimension");
    std::size_t idx = 0;
    for (auto c : v) {
      if (c >= q) throw InvalidArgument("affine: coordinate out of range");
      idx = idx * q + c;
    }
    return idx;
  }
};

// Affine subspace in canonical form: reduced row echelon direction basis and
// the lexicographically smallest member as basepoint. dim == -1 is the empty
// subspace (the all-zero indicator).
class AffineSubspace {
 public:
  static AffineSubspace empty(std::uint32_t q, std::size_t l) {
    AffineSubspace s;
    s.q_ = q;
    s.l_ = l;
    return s;
  }

  std::uint32_t q() const noexcept { return q_; }
  std::size_t l() const noexcept { return l_; }
  int dim() const noexcept { return dim_; }
  bool is_empty() const noexcept { return dim_ < 0; }
  const FqVector& basepoint() const noexcept { return base_; }
  const std::vector<FqVector>& basis() const noexcept { return basis_; }

  bool contains(const FqVector& x) const {
    if (x.size() != l_) throw InvalidArgument("affine member: dimension mismatch");
    if (is_empty()) return false;
    return reduce(x) == base_;
  }

  /// All q^dim members, in no particular order.
  std::vector<FqVector> members() const {
    std::vector<FqVector> out;
    if (is_empty()) return out;
    const PrimeField f(q_);
    std::vector<std::uint32_t> coef(basis_.size(), 0);
    for (;;) {
      FqVector v = base_;
      for (std::size_t r = 0; r < basis_.size(); ++r) {
        for (std::size_t i = 0; i < l_; ++i) v[i] = f.add(v[i], f.mul(coef[r], basis_[r][i]));
      }
      out.push_back(std::move(v));
      std::size_t j = 0;
      while (j < coef.size() && ++coef[j] == q_) coef[j++] = 0;
      if (j == coef.size()) break;
    }
    return out;
  }

  friend auto operator<=>(const AffineSubspace&, const AffineSubspace&) = default;

  friend AffineSubspace affine_hull(std::uint32_t q, std::span<const FqVector> points);
  friend AffineSubspace extend_hull(const AffineSubspace& s, const FqVector& x);

 private:
  // Clears every pivot coordinate of v using the basis rows.
  FqVector reduce(FqVector v) const {
    const PrimeField f(q_);
    for (const auto& row : basis_) {
      const std::size_t p = pivot(row);
      const std::uint32_t c = v[p];
      if (c == 0) continue;
      for (std::size_t i = 0; i < l_; ++i) v[i] = f.sub(v[i], f.mul(c, row[i]));
    }
    return v;
  }

  static std::size_t pivot(const FqVector& row) {
    return static_cast<std::size_t>(std::find_if(row.begin(), row.end(), [](auto c) { return c != 0; }) - row.begin());
  }

  // Gauss-Jordan over F_q; keeps nonzero rows with unit pivots, sorted by pivot.
  static std::vector<FqVector> rref(std::vector<FqVector> rows, std::uint32_t q, std::size_t l) {
    const PrimeField f(q);
    std::size_t rank = 0;
    for (std::size_t col = 0; col < l && rank < rows.size(); ++col) {
      std::size_t sel = rank;
      while (sel < rows.size() && rows[sel][col] == 0) ++sel;
      if (sel == rows.size()) continue;
      std::swap(rows[rank], rows[sel]);
      const std::uint32_t inv = f.inv(rows[rank][col]);
      for (auto& c : rows[rank]) c = f.mul(c, inv);
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (r == rank || rows[r][col] == 0) continue;
        const std::uint32_t m = rows[r][col];
        for (std::size_t i = 0; i < l; ++i) rows[r][i] = f.sub(rows[r][i], f.mul(m, rows[rank][i]));
      }
      ++rank;
    }
    rows.resize(rank);
    return rows;
  }

  static AffineSubspace build(std::uint32_t q, std::size_t l, const FqVector& anchor, std::vector<FqVector> directions) {
    AffineSubspace s;
    s.q_ = q;
    s.l_ = l;
    s.basis_ = rref(std::move(directions), q, l);
    s.dim_ = static_cast<int>(s.basis_.size());
    s.base_ = s.reduce(anchor);
    return s;
  }

  std::uint32_t q_ = 2;
  std::size_t l_ = 0;
  int dim_ = -1;
  FqVector base_;
  std::vector<FqVector> basis_;
};

/// Smallest affine subspace containing the points: translate to the first
/// point and row-reduce the differences.
inline AffineSubspace affine_hull(std::uint32_t q, std::span<const FqVector> points) {
  if (points.empty()) throw InvalidArgument("affine_hull: no points");
  const PrimeField f(q);
  const std::size_t l = points.front().size();
  std::vector<FqVector> diffs;
  for (const auto& p : points) {
    if (p.size() != l) throw InvalidArgument("affine_hull: points of different dimension");
    FqVector d(l);
    for (std::size_t i = 0; i < l; ++i) {
      if (p[i] >= q) throw InvalidArgument("affine_hull: coordinate out of range");
      d[i] = f.sub(p[i], points.front()[i]);
    }
    diffs.push_back(std::move(d));
  }
  return AffineSubspace::build(q, l, points.front(), std::move(diffs));
}

inline AffineSubspace affine_hull(std::uint32_t q, std::initializer_list<FqVector> points) {
  return affine_hull(q, std::span<const FqVector>(points.begin(), points.size()));
}

/// hull(s ∪ {x}).
inline AffineSubspace extend_hull(const AffineSubspace& s, const FqVector& x) {
  if (s.is_empty()) return affine_hull(s.q(), std::span<const FqVector>(&x, 1));
  if (x.size() != s.l()) throw InvalidArgument("extend_hull: dimension mismatch");
  const PrimeField f(s.q());
  std::vector<FqVector> dirs = s.basis();
  FqVector d(s.l());
  for (std::size_t i = 0; i < s.l(); ++i) d[i] = f.sub(x[i], s.basepoint()[i]);
  dirs.push_back(std::move(d));
  return AffineSubspace::build(s.q(), s.l(), s.basepoint(), std::move(dirs));
}

inline bool member(const AffineSubspace& s, const FqVector& x) { return s.contains(x); }

/// Extensional indicator of s over the domain F_q^l in index order.
inline Hypothesis indicator(const AffineClassParams& p, const AffineSubspace& s) {
  Hypothesis::Row row(p.domain_size(), 0);
  for (const auto& v : s.members()) row[p.index(v)] = 1;
  return Hypothesis(std::move(row));
}

struct AffineExample {
  FqVector x;
  bool y = false;
};

struct SoaAffineResult {
  AffineSubspace hull;  // the final predictor is member(hull, .)
  std::size_t mistakes = 0;
};

// Online hull-of-positives learner: predicts member(A, x) and on a missed
// positive replaces A by hull(A ∪ {x}).
inline SoaAffineResult soa_affine(const AffineClassParams& p, std::span<const AffineExample> sequence) {
  SoaAffineResult r{AffineSubspace::empty(p.q, p.l), 0};
  std::vector<const FqVector*> negatives;
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    const auto& ex = sequence[i];
    const bool guess = r.hull.contains(ex.x);
    if (!ex.y) {
      if (guess) throw NotRealizableError(i + 1, "soa_affine: negative example inside the hull of positives");
      negatives.push_back(&ex.x);
      continue;
    }
    if (guess) continue;
    ++r.mistakes;
    r.hull = extend_hull(r.hull, ex.x);
    if (r.hull.dim() > p.d) throw NotRealizableError(i + 1, "soa_affine: positives span more than dimension d");
    for (const auto* neg : negatives) {
      if (r.hull.contains(*neg)) throw NotRealizableError(i + 1, "soa_affine: hull of positives now covers a negative example");
    }
  }
  return r;
}

inline std::vector<AffineExample> to_affine_examples(const AffineClassParams& p, std::span<const LabeledExample> s) {
  std::vector<AffineExample> out;
  out.reserve(s.size());
  for (const auto& ex : s) out.push_back({p.point(ex.x.index), ex.y});
  return out;
}

inline SoaAffineResult soa_affine(const AffineClassParams& p, std::span<const LabeledExample> sequence) {
  const auto ex = to_affine_examples(p, sequence);
  return soa_affine(p, std::span<const AffineExample>(ex));
}

inline constexpr std::size_t kAffineEnumerationLimit = 64;

/// Every affine subspace of dimension 0..d (canonical forms, sorted).
inline std::vector<AffineSubspace> enumerate_affine_subspaces(const AffineClassParams& p) {
  p.validate();
  if (p.domain_size() > kAffineEnumerationLimit) throw ResourceError("enumerate_affine_class: q^l must be <= 64");
  std::set<AffineSubspace> all;
  std::vector<AffineSubspace> frontier;
  for (std::size_t i = 0; i < p.domain_size(); ++i) {
    const FqVector v = p.point(i);
    frontier.push_back(affine_hull(p.q, std::span<const FqVector>(&v, 1)));
  }
  all.insert(frontier.begin(), frontier.end());
  for (int dim = 0; dim < p.d; ++dim) {
    std::set<AffineSubspace> next;
    for (const auto& s : frontier) {
      for (std::size_t i = 0; i < p.domain_size(); ++i) {
        const FqVector v = p.point(i);
        if (!s.contains(v)) next.insert(extend_hull(s, v));
      }
    }
    all.insert(next.begin(), next.end());
    frontier.assign(next.begin(), next.end());
  }
  return {all.begin(), all.end()};
}

/// H_{d,l} as an extensional class: all subspace indicators plus all-zero.
inline HypothesisClass enumerate_affine_class(const AffineClassParams& p) {
  std::vector<Hypothesis::Row> rows;
  rows.emplace_back(p.domain_size(), 0);
  for (const auto& s : enumerate_affine_subspaces(p)) rows.push_back(indicator(p, s).labels());
  return make_class(std::move(rows));
}

struct AffineRun {
  AffineSubspace output;
  Hypothesis output_indicator;
  int level = 0;
  std::size_t appended = 0;        // disagreement examples (x, 1) added
  std::size_t appended_false = 0;  // of those, how many the audit target labels 0
};

// Globally stable learner specialized to H_{d,l}. Same layout as the generic
// learner (prefix S[0:n1], then leaves), but at a disagreement x the true
// label is known to be 1, so the branch whose hull misses x is extended by
// (x, 1) and no coin is flipped. The level is uniform on {0..d+1}.
class StableAffineLearner {
 public:
  StableAffineLearner(AffineClassParams params, std::size_t leaf_size, std::uint64_t n1,
                      std::optional<Hypothesis> audit_target = std::nullopt)
      : params_(params), leaf_size_(leaf_size), n1_(n1), audit_(std::move(audit_target)) {
    params_.validate();
    if (leaf_size_ == 0 || n1_ == 0) throw InvalidArgument("stable affine learner: leaf_size and n1 must be >= 1");
  }

  const AffineClassParams& params() const noexcept { return params_; }
  std::size_t sample_size() const {
    return static_cast<std::size_t>(n1_) + (std::size_t{1} << (params_.d + 1)) * leaf_size_;
  }

  template <CoinSource Coins>
  AffineRun run(std::span<const LabeledExample> s, Coins& coins) const {
    SampleCursor cursor(s);
    const Sample prefix = cursor.take(static_cast<std::size_t>(n1_));
    AffineRun out;
    out.level = static_cast<int>(coins.choose(static_cast<std::size_t>(params_.d) + 2));
    Node root = tournament(out.level, cursor, out);
    auto seq = std::move(root.sequence);
    for (const auto& ex : to_affine_examples(params_, prefix)) seq.push_back(ex);
    out.output = soa_affine(params_, std::span<const AffineExample>(seq)).hull;
    out.output_indicator = indicator(params_, out.output);
    return out;
  }

  template <CoinSource Coins>
  Hypothesis operator()(std::span<const LabeledExample> s, Coins& coins) const {
    return run(s, coins).output_indicator;
  }

 private:
  struct Node {
    std::vector<AffineExample> sequence;
    AffineSubspace hull;
  };

  Node tournament(int t, SampleCursor& cursor, AffineRun& out) const {
    if (t == 0) {
      Node n;
      n.sequence = to_affine_examples(params_, cursor.take(leaf_size_));
      n.hull = soa_affine(params_, std::span<const AffineExample>(n.sequence)).hull;
      return n;
    }
    Node a = tournament(t - 1, cursor, out);
    Node b = tournament(t - 1, cursor, out);
    if (a.hull == b.hull) return a;
    for (std::size_t i = 0; i < params_.domain_size(); ++i) {
      FqVector x = params_.point(i);
      const bool in_a = a.hull.contains(x);
      if (in_a == b.hull.contains(x)) continue;
      Node& grow = in_a ? b : a;
      ++out.appended;
      if (audit_ && !audit_->label(i)) ++out.appended_false;
      grow.hull = extend_hull(grow.hull, x);
      grow.sequence.push_back({std::move(x), true});
      return std::move(grow);
    }
    return a;  // unreachable: distinct canonical hulls differ somewhere
  }

  AffineClassParams params_;
  std::size_t leaf_size_;
  std::uint64_t n1_;
  std::optional<Hypothesis> audit_;
};

/// One run on a fresh sample from D (data stream 0, coins stream 1).
inline AffineRun stable_affine_learn(const StableAffineLearner& g, const RealizableDistribution& d,
                                     const RandomSource& rng) {
  RandomSource data_rng = rng.derive(0);
  RandomSource coin_rng = rng.derive(1);
  const Sample s = draw_sample(d, g.sample_size(), data_rng);
  return g.run(s, coin_rng);
}

}  // namespace ldinfo
