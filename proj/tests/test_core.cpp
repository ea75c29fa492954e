#include <gtest/gtest.h>

#include <set>

#include "ldinfo/core.hpp"

using namespace ldinfo;

TEST(MakeClass, TwoRowsOverTwoPoints) {
  auto c = make_class(std::vector<std::string>{"00", "11"});
  EXPECT_EQ(c.size(), 2u);
  EXPECT_EQ(c.domain_size(), 2u);
}

TEST(MakeClass, DuplicatesCollapse) {
  auto c = make_class(std::vector<std::string>{"0", "0"});
  EXPECT_EQ(c.size(), 1u);
}

TEST(MakeClass, IdsAreLexicographicRanks) {
  auto c = make_class(std::vector<std::string>{"11", "01", "10", "00"});
  ASSERT_EQ(c.size(), 4u);
  const std::vector<std::string> expected{"00", "01", "10", "11"};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(c.row(i).to_string(), expected[i]);
    EXPECT_EQ(c.id_of(c.row(i)), i);
    EXPECT_EQ(c.row(i).canonical_id(), i);
  }
}

TEST(MakeClass, RejectsBadShapes) {
  EXPECT_THROW(make_class(std::vector<Hypothesis::Row>{}), InvalidArgument);
  EXPECT_THROW(make_class(std::vector<std::string>{"01", "1"}), InvalidArgument);
  EXPECT_THROW(make_class(std::vector<std::string>{""}), InvalidArgument);
  EXPECT_THROW(Hypothesis::from_string("012"), InvalidArgument);
}

TEST(Restrict, CubeFirstBitOne) {
  auto r = restrict(full_cube(2), {0}, true);
  ASSERT_TRUE(r);
  ASSERT_EQ(r->size(), 2u);
  EXPECT_EQ(r->row(0).to_string(), "10");
  EXPECT_EQ(r->row(1).to_string(), "11");
}

TEST(Restrict, SingletonKeepsItself) {
  auto c = make_class(std::vector<std::string>{"101"});
  auto r = restrict(c, {2}, true);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->rows(), c.rows());
  EXPECT_FALSE(restrict(c, {2}, false));
}

TEST(Restrict, ThresholdsAtFour) {
  // 1[x >= a] with x = 4 labeled 1 keeps a in {1,2,3,4}.
  auto r = restrict(threshold_class(8), {3}, true);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->size(), 4u);
}

TEST(Restrict, Idempotent) {
  auto c = full_cube(3);
  for (std::size_t x = 0; x < 3; ++x) {
    for (bool y : {false, true}) {
      auto once = restrict(c, {x}, y);
      auto twice = restrict(*once, {x}, y);
      EXPECT_EQ(once->rows(), twice->rows());
    }
  }
}

TEST(Restrict, OutOfRangePointThrows) { EXPECT_THROW(restrict(full_cube(2), {2}, true), InvalidArgument); }

TEST(EmpiricalError, Counting) {
  const auto h = Hypothesis::from_string("0110");
  Sample s{{{0}, false}, {{1}, true}, {{2}, true}, {{3}, false}};
  EXPECT_EQ(empirical_error(h, s).disagreements, 0u);
  Sample flipped = s;
  for (auto& e : flipped) e.y = !e.y;
  EXPECT_EQ(empirical_error(h, flipped).value(), 1.0);
  s[3].y = true;
  const auto e = empirical_error(h, s);
  EXPECT_EQ(e.disagreements, 1u);
  EXPECT_EQ(e.sample_size, 4u);
  EXPECT_DOUBLE_EQ(e.value(), 0.25);
  EXPECT_THROW(empirical_error(h, Sample{}), InvalidArgument);
}

TEST(TrueError, Definition) {
  const auto target = Hypothesis::from_string("0101");
  RealizableDistribution d({0.1, 0.3, 0.2, 0.4}, target);
  EXPECT_EQ(true_error(target, d), 0.0);
  EXPECT_DOUBLE_EQ(true_error(Hypothesis::from_string("0001"), d), 0.3);
  auto u = RealizableDistribution::uniform(target);
  EXPECT_DOUBLE_EQ(true_error(Hypothesis::from_string("1001"), u), 0.5);
  EXPECT_THROW(true_error(Hypothesis::from_string("01"), d), InvalidArgument);
}

TEST(Distribution, Validation) {
  const auto t = Hypothesis::from_string("01");
  EXPECT_THROW(RealizableDistribution({0.5, 0.6}, t), InvalidArgument);
  EXPECT_THROW(RealizableDistribution({-0.5, 1.5}, t), InvalidArgument);
  EXPECT_THROW(RealizableDistribution({1.0}, t), InvalidArgument);
  EXPECT_NO_THROW(RealizableDistribution({0.5, 0.5 + 1e-13}, t));
  auto c = make_class(std::vector<std::string>{"00", "01"});
  EXPECT_THROW(make_distribution(c, {0.5, 0.5}, 2), InvalidArgument);
}

TEST(DrawSample, PointMass) {
  const auto t = Hypothesis::from_string("011");
  auto d = RealizableDistribution::point_mass({1}, t);
  RandomSource rng(5, 0);
  const Sample s = draw_sample(d, 50, rng);
  for (const auto& e : s) {
    EXPECT_EQ(e.x.index, 1u);
    EXPECT_TRUE(e.y);
  }
}

TEST(DrawSample, ReproducibleAndRejectsZero) {
  auto d = RealizableDistribution::uniform(Hypothesis::from_string("0110"));
  RandomSource a(42, 3), b(42, 3), c(42, 4);
  const Sample sa = draw_sample(d, 200, a);
  EXPECT_EQ(sa, draw_sample(d, 200, b));
  EXPECT_NE(sa, draw_sample(d, 200, c));
  EXPECT_THROW(draw_sample(d, 0, a), InvalidArgument);
}

TEST(DrawSample, UniformFrequencies) {
  auto d = RealizableDistribution::uniform(Hypothesis::from_string("01"));
  RandomSource rng(9, 0);
  const Sample s = draw_sample(d, 100000, rng);
  std::size_t zeros = 0;
  for (const auto& e : s) {
    zeros += e.x.index == 0;
    EXPECT_EQ(e.y, e.x.index == 1);
  }
  EXPECT_NEAR(static_cast<double>(zeros) / 1e5, 0.5, 0.01);
}

TEST(DrawSample, ZeroMassPointsNeverDrawn) {
  auto d = RealizableDistribution({0.0, 0.5, 0.0, 0.5}, Hypothesis::from_string("0000"));
  RandomSource rng(1, 1);
  for (const auto& e : draw_sample(d, 10000, rng)) EXPECT_TRUE(e.x.index == 1 || e.x.index == 3);
}

TEST(RandomSource, DeriveIgnoresDrawCount) {
  RandomSource a(7, 0), b(7, 0);
  for (int i = 0; i < 10; ++i) b.next_u64();
  EXPECT_EQ(a.derive(3).next_u64(), b.derive(3).next_u64());
  EXPECT_NE(a.derive(3).next_u64(), a.derive(4).next_u64());
}

TEST(RandomSource, ChooseIsUniformish) {
  RandomSource rng(11, 2);
  std::vector<int> hist(3);
  for (int i = 0; i < 30000; ++i) ++hist[rng.choose(3)];
  for (int h : hist) EXPECT_NEAR(h, 10000, 500);
  EXPECT_THROW(rng.choose(0), InvalidArgument);
}

TEST(SampleCursor, ExhaustionThrows) {
  Sample s{{{0}, true}, {{1}, false}};
  SampleCursor cur(s);
  EXPECT_EQ(cur.take(2).size(), 2u);
  EXPECT_EQ(cur.remaining(), 0u);
  EXPECT_THROW(cur.next(), InvalidArgument);
}

TEST(Property, EmpiricalErrorHasSampleDenominator) {
  RandomSource rng(3, 0);
  auto c = full_cube(4);
  for (int trial = 0; trial < 200; ++trial) {
    const auto& target = c.row(rng.choose(c.size()));
    const auto& h = c.row(rng.choose(c.size()));
    auto d = RealizableDistribution::uniform(target);
    const Sample s = draw_sample(d, 1 + rng.choose(20), rng);
    const auto e = empirical_error(h, s);
    EXPECT_EQ(e.sample_size, s.size());
    EXPECT_LE(e.disagreements, s.size());
    EXPECT_EQ(empirical_error(target, s).disagreements, 0u);
    EXPECT_EQ(true_error(target, d), 0.0);
  }
}

TEST(Property, ClassColumnsMatchRows) {
  auto c = threshold_class(6);
  for (std::size_t x = 0; x < c.domain_size(); ++x) {
    std::set<std::size_t> ones;
    c.ones({x}).for_each([&](std::size_t r) { ones.insert(r); });
    for (std::size_t r = 0; r < c.size(); ++r) EXPECT_EQ(ones.count(r) == 1, c.row(r).label(x));
  }
}
