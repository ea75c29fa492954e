#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ldinfo/error.hpp"
#include "ldinfo/random.hpp"

namespace ldinfo {

/// Index of an element of the finite domain X.
struct DomainPoint {
  std::size_t index = 0;

  friend auto operator<=>(const DomainPoint&, const DomainPoint&) = default;
};

/// Extensional 0/1 function over a finite domain. Equality and ordering are
/// those of the label row, so lexicographic order is the canonical order.
class Hypothesis {
 public:
  using Row = std::vector<std::uint8_t>;

  Hypothesis() = default;

  explicit Hypothesis(Row labels) : labels_(std::move(labels)) {
    for (auto& b : labels_) {
      if (b > 1) throw InvalidArgument("hypothesis labels must be 0 or 1");
    }
  }

  /// Parses a row such as "0101" (x_0 first).
  static Hypothesis from_string(std::string_view bits) {
    Row row;
    row.reserve(bits.size());
    for (char c : bits) {
      if (c != '0' && c != '1') throw InvalidArgument("bit row must contain only '0'/'1'");
      row.push_back(static_cast<std::uint8_t>(c - '0'));
    }
    return Hypothesis(std::move(row));
  }

  static Hypothesis constant(std::size_t domain_size, bool label) {
    return Hypothesis(Row(domain_size, label ? 1 : 0));
  }

  std::size_t domain_size() const noexcept { return labels_.size(); }
  const Row& labels() const noexcept { return labels_; }

  bool operator()(DomainPoint x) const { return label(x.index); }
  bool label(std::size_t i) const { return labels_.at(i) != 0; }

  std::string to_string() const {
    std::string s(labels_.size(), '0');
    for (std::size_t i = 0; i < labels_.size(); ++i) s[i] = labels_[i] ? '1' : '0';
    return s;
  }

  /// The row read as a binary number with x_0 as the most significant bit.
  /// Agrees with lexicographic order; needs domain_size <= 64.
  std::uint64_t canonical_id() const {
    if (labels_.size() > 64) throw InvalidArgument("canonical_id needs a domain of at most 64 points");
    std::uint64_t v = 0;
    for (auto b : labels_) v = (v << 1) | b;
    return v;
  }

  friend auto operator<=>(const Hypothesis&, const Hypothesis&) = default;

 private:
  Row labels_;
};

struct LabeledExample {
  DomainPoint x;
  bool y = false;

  friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

using Sample = std::vector<LabeledExample>;

/// Fixed-capacity bitset over the rows of a HypothesisClass; used as the
/// version-space representation.
class RowSet {
 public:
  RowSet() = default;
  explicit RowSet(std::size_t size, bool full = false)
      : size_(size), words_((size + 63) / 64, full ? ~std::uint64_t{0} : 0) {
    if (full) trim();
  }

  std::size_t size() const noexcept { return size_; }

  bool test(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1U; }
  void set(std::size_t i) { words_[i / 64] |= std::uint64_t{1} << (i % 64); }
  void reset(std::size_t i) { words_[i / 64] &= ~(std::uint64_t{1} << (i % 64)); }

  std::size_t count() const noexcept {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }
  bool any() const noexcept {
    return std::any_of(words_.begin(), words_.end(), [](std::uint64_t w) { return w != 0; });
  }
  bool none() const noexcept { return !any(); }

  /// First set index, or size() if empty.
  std::size_t first() const noexcept {
    for (std::size_t w = 0; w < words_.size(); ++w) {
      if (words_[w]) return w * 64 + static_cast<std::size_t>(std::countr_zero(words_[w]));
    }
    return size_;
  }

  RowSet& operator&=(const RowSet& o) {
    for (std::size_t w = 0; w < words_.size(); ++w) words_[w] &= o.words_[w];
    return *this;
  }
  friend RowSet operator&(RowSet a, const RowSet& b) { return a &= b; }

  /// this & ~o
  RowSet minus(const RowSet& o) const {
    RowSet r = *this;
    for (std::size_t w = 0; w < words_.size(); ++w) r.words_[w] &= ~o.words_[w];
    return r;
  }

  bool intersects(const RowSet& o) const noexcept {
    for (std::size_t w = 0; w < words_.size(); ++w) {
      if (words_[w] & o.words_[w]) return true;
    }
    return false;
  }

  std::size_t hash() const noexcept {
    std::uint64_t h = detail::mix64(size_);
    for (auto w : words_) h = detail::mix64(h ^ w);
    return static_cast<std::size_t>(h);
  }

  template <class F>
  void for_each(F&& f) const {
    for (std::size_t w = 0; w < words_.size(); ++w) {
      std::uint64_t bits = words_[w];
      while (bits) {
        f(w * 64 + static_cast<std::size_t>(std::countr_zero(bits)));
        bits &= bits - 1;
      }
    }
  }

  friend bool operator==(const RowSet&, const RowSet&) = default;

 private:
  void trim() {
    if (size_ % 64 && !words_.empty()) words_.back() &= (std::uint64_t{1} << (size_ % 64)) - 1;
  }

  std::size_t size_ = 0;
  std::vector<std::uint64_t> words_;
};

struct RowSetHash {
  std::size_t operator()(const RowSet& s) const noexcept { return s.hash(); }
};

/// Nonempty set of distinct hypotheses over a common finite domain, sorted
/// lexicographically; a hypothesis' id is its rank.
class HypothesisClass {
 public:
  std::size_t domain_size() const noexcept { return domain_size_; }
  std::size_t size() const noexcept { return rows_.size(); }
  const std::vector<Hypothesis>& rows() const noexcept { return rows_; }
  const Hypothesis& row(std::size_t id) const { return rows_.at(id); }

  std::optional<std::size_t> id_of(const Hypothesis& h) const {
    auto it = std::lower_bound(rows_.begin(), rows_.end(), h);
    if (it == rows_.end() || *it != h) return std::nullopt;
    return static_cast<std::size_t>(it - rows_.begin());
  }
  bool contains(const Hypothesis& h) const { return id_of(h).has_value(); }

  RowSet all() const { return RowSet(rows_.size(), true); }

  /// Rows with h(x) = 1.
  const RowSet& ones(DomainPoint x) const { return ones_.at(x.index); }

  /// Rows of `v` with h(x) = y.
  RowSet consistent(const RowSet& v, DomainPoint x, bool y) const {
    return y ? (v & ones(x)) : v.minus(ones(x));
  }

  /// Rows consistent with every example.
  RowSet consistent(std::span<const LabeledExample> sample) const {
    RowSet v = all();
    for (const auto& ex : sample) v = consistent(v, ex.x, ex.y);
    return v;
  }

  /// Materializes a subset of rows as its own class; nullopt when empty.
  std::optional<HypothesisClass> subset(const RowSet& v) const {
    if (v.none()) return std::nullopt;
    HypothesisClass c;
    c.domain_size_ = domain_size_;
    v.for_each([&](std::size_t i) { c.rows_.push_back(rows_[i]); });
    c.build_columns();
    return c;
  }

  void check_point(DomainPoint x) const {
    if (x.index >= domain_size_) throw InvalidArgument("domain point out of range");
  }

  friend HypothesisClass make_class(std::vector<Hypothesis::Row> label_matrix);

 private:
  void build_columns() {
    ones_.assign(domain_size_, RowSet(rows_.size()));
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      for (std::size_t x = 0; x < domain_size_; ++x) {
        if (rows_[r].label(x)) ones_[x].set(r);
      }
    }
  }

  std::size_t domain_size_ = 0;
  std::vector<Hypothesis> rows_;
  std::vector<RowSet> ones_;
};

/// Deduplicates and sorts the rows; ids become sorted ranks.
inline HypothesisClass make_class(std::vector<Hypothesis::Row> label_matrix) {
  if (label_matrix.empty()) throw InvalidArgument("make_class: empty label matrix");
  const std::size_t m = label_matrix.front().size();
  if (m == 0) throw InvalidArgument("make_class: rows must have length >= 1");
  HypothesisClass c;
  c.domain_size_ = m;
  c.rows_.reserve(label_matrix.size());
  for (auto& row : label_matrix) {
    if (row.size() != m) throw InvalidArgument("make_class: ragged label matrix");
    c.rows_.emplace_back(std::move(row));
  }
  std::sort(c.rows_.begin(), c.rows_.end());
  c.rows_.erase(std::unique(c.rows_.begin(), c.rows_.end()), c.rows_.end());
  c.build_columns();
  return c;
}

inline HypothesisClass make_class(const std::vector<std::string>& rows) {
  std::vector<Hypothesis::Row> m;
  m.reserve(rows.size());
  for (const auto& r : rows) m.push_back(Hypothesis::from_string(r).labels());
  return make_class(std::move(m));
}

/// Thresholds 1[x >= a] on the domain {1..N} (index i is the value i+1), for
/// a in {1..N+1}; a = N+1 is the all-zero function.
inline HypothesisClass threshold_class(std::size_t n) {
  if (n == 0) throw InvalidArgument("threshold_class: N must be >= 1");
  std::vector<Hypothesis::Row> m;
  for (std::size_t a = 1; a <= n + 1; ++a) {
    Hypothesis::Row row(n);
    for (std::size_t v = 1; v <= n; ++v) row[v - 1] = v >= a ? 1 : 0;
    m.push_back(std::move(row));
  }
  return make_class(std::move(m));
}

/// All 2^m functions on m points.
inline HypothesisClass full_cube(std::size_t m) {
  if (m == 0 || m > 20) throw InvalidArgument("full_cube: m must be in [1, 20]");
  std::vector<Hypothesis::Row> rows;
  for (std::uint64_t v = 0; v < (std::uint64_t{1} << m); ++v) {
    Hypothesis::Row row(m);
    for (std::size_t i = 0; i < m; ++i) row[i] = (v >> (m - 1 - i)) & 1U;
    rows.push_back(std::move(row));
  }
  return make_class(std::move(rows));
}

/// {h in class : h(x) = y}; nullopt when no hypothesis survives.
inline std::optional<HypothesisClass> restrict(const HypothesisClass& c, DomainPoint x, bool y) {
  c.check_point(x);
  return c.subset(c.consistent(c.all(), x, y));
}

/// Exact empirical error as a count over the sample size.
struct ErrorRate {
  std::size_t disagreements = 0;
  std::size_t sample_size = 0;

  double value() const { return static_cast<double>(disagreements) / static_cast<double>(sample_size); }
  friend bool operator==(const ErrorRate&, const ErrorRate&) = default;
};

inline ErrorRate empirical_error(const Hypothesis& h, std::span<const LabeledExample> s) {
  if (s.empty()) throw InvalidArgument("empirical_error: empty sample");
  ErrorRate e{0, s.size()};
  for (const auto& ex : s) {
    if (h(ex.x) != ex.y) ++e.disagreements;
  }
  return e;
}

/// Probability mass over the domain plus the labeling target.
class RealizableDistribution {
 public:
  static constexpr double kTolerance = 1e-12;

  RealizableDistribution(std::vector<double> pmf, Hypothesis target)
      : pmf_(std::move(pmf)), target_(std::move(target)) {
    if (pmf_.empty()) throw InvalidArgument("distribution: empty pmf");
    if (pmf_.size() != target_.domain_size()) {
      throw InvalidArgument("distribution: pmf length does not match the target's domain");
    }
    double total = 0.0;
    cdf_.reserve(pmf_.size());
    for (double p : pmf_) {
      if (!(p >= 0.0) || !std::isfinite(p)) throw InvalidArgument("distribution: weights must be finite and >= 0");
      total += p;
      cdf_.push_back(total);
    }
    if (std::abs(total - 1.0) > kTolerance) throw InvalidArgument("distribution: weights must sum to 1");
  }

  static RealizableDistribution uniform(const Hypothesis& target) {
    const auto m = target.domain_size();
    return RealizableDistribution(std::vector<double>(m, 1.0 / static_cast<double>(m)), target);
  }

  static RealizableDistribution point_mass(DomainPoint x, const Hypothesis& target) {
    std::vector<double> pmf(target.domain_size(), 0.0);
    pmf.at(x.index) = 1.0;
    return RealizableDistribution(std::move(pmf), target);
  }

  std::size_t domain_size() const noexcept { return pmf_.size(); }
  const std::vector<double>& pmf() const noexcept { return pmf_; }
  const Hypothesis& target() const noexcept { return target_; }

  /// Points with positive mass, in index order.
  std::vector<DomainPoint> support() const {
    std::vector<DomainPoint> s;
    for (std::size_t i = 0; i < pmf_.size(); ++i) {
      if (pmf_[i] > 0.0) s.push_back({i});
    }
    return s;
  }

  LabeledExample draw(RandomSource& rng) const {
    const double u = rng.uniform01() * cdf_.back();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    std::size_t i = it == cdf_.end() ? cdf_.size() - 1 : static_cast<std::size_t>(it - cdf_.begin());
    while (pmf_[i] == 0.0 && i > 0) --i;
    return {DomainPoint{i}, target_.label(i)};
  }

  LabeledExample labeled(DomainPoint x) const { return {x, target_(x)}; }

 private:
  std::vector<double> pmf_;
  std::vector<double> cdf_;
  Hypothesis target_;
};

/// Distribution whose target is a member of `c`, picked by id.
inline RealizableDistribution make_distribution(const HypothesisClass& c, std::vector<double> pmf,
                                                std::size_t target_id) {
  if (target_id >= c.size()) throw InvalidArgument("distribution: target_id not in class");
  return RealizableDistribution(std::move(pmf), c.row(target_id));
}

/// Sum of pmf(x) over the points where h disagrees with the target.
inline double true_error(const Hypothesis& h, const RealizableDistribution& d) {
  if (h.domain_size() != d.domain_size()) throw InvalidArgument("true_error: domain mismatch");
  double e = 0.0;
  for (std::size_t i = 0; i < h.domain_size(); ++i) {
    if (h.label(i) != d.target().label(i)) e += d.pmf()[i];
  }
  return e;
}

inline Sample draw_sample(const RealizableDistribution& d, std::size_t n, RandomSource& rng) {
  if (n == 0) throw InvalidArgument("draw_sample: n must be >= 1");
  Sample s;
  s.reserve(n);
  for (std::size_t i = 0; i < n; ++i) s.push_back(d.draw(rng));
  return s;
}

/// Sequential reader over a fixed sample; algorithms that "draw fresh
/// examples" take them from here so the data can be enumerated externally.
class SampleCursor {
 public:
  explicit SampleCursor(std::span<const LabeledExample> data) : data_(data) {}

  LabeledExample next() {
    if (pos_ >= data_.size()) throw InvalidArgument("sample exhausted: the algorithm needs a larger input sample");
    return data_[pos_++];
  }

  Sample take(std::size_t n) {
    Sample s;
    s.reserve(n);
    for (std::size_t i = 0; i < n; ++i) s.push_back(next());
    return s;
  }

  std::size_t consumed() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }

 private:
  std::span<const LabeledExample> data_;
  std::size_t pos_ = 0;
};

}  // namespace ldinfo
