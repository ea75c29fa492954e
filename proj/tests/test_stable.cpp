#include <gtest/gtest.h>

#include <boost/math/distributions/normal.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "ldinfo/info.hpp"
#include "ldinfo/stable.hpp"

using namespace ldinfo;

namespace {

std::shared_ptr<const LdimSolver> solver_of(std::vector<std::string> rows) {
  return std::make_shared<const LdimSolver>(make_class(rows));
}

// Exact output law of a level-t tournament: every data sequence from the
// support of d and every coin path, weighted.
OutputDistribution exact_tournament(int t, const LdimSolver& solver, const RealizableDistribution& d,
                                    std::size_t leaf) {
  auto a = [&](std::span<const Sample> s, auto& coins) -> Outcome {
    SampleCursor cur(s.front());
    return tournament(t, solver, cur, leaf, coins).output;
  };
  return exact_output_distribution(a, d, (std::size_t{1} << t) * leaf, 1);
}

OutputDistribution mc_tournament(int t, const LdimSolver& solver, const RealizableDistribution& d, std::size_t leaf,
                                 std::size_t trials, std::uint64_t seed) {
  std::map<Outcome, std::size_t> counts;
  const RandomSource root(seed, 0);
  for (std::size_t i = 0; i < trials; ++i) ++counts[tournament(t, solver, d, leaf, root.derive(i)).output];
  return distribution_from_counts(counts, trials);
}

}  // namespace

TEST(Lemma1Params, DimensionOne) {
  const auto p = lemma1_params(1, 0.5);
  EXPECT_EQ(p.n, 131072);
  EXPECT_EQ(p.n1, 16u);
  EXPECT_DOUBLE_EQ(p.eta, 0.0625);
  EXPECT_TRUE(p.executable);
  EXPECT_EQ(p.leaf_size, (131072u - 16u) / 2u);
}

TEST(Lemma1Params, DimensionZero) {
  const auto p = lemma1_params(0, 0.5);
  EXPECT_EQ(p.n1, 8u);
  EXPECT_EQ(p.n, 1024);  // 2^5 * 4 * 8
  EXPECT_DOUBLE_EQ(p.eta, 0.25);
}

TEST(Lemma1Params, DimensionThreeIsNotExecutable) {
  const auto p = lemma1_params(3, 0.1);
  EXPECT_EQ(p.n1, 320u);
  EXPECT_EQ(p.n, BigInt("703687441776640"));
  EXPECT_FALSE(p.executable);
}

TEST(Lemma1Params, IdentitiesHoldExactly) {
  using boost::multiprecision::pow;
  for (int d = 0; d <= 6; ++d) {
    for (double eps : {0.9, 0.5, 0.3, 0.1, 0.01}) {
      const auto p = lemma1_params(d, eps);
      const BigInt n = pow(BigInt(2), (1U << (d + 2)) + 1) * pow(BigInt(4), static_cast<unsigned>(d + 1)) * p.n1;
      EXPECT_EQ(p.n, n);
      EXPECT_EQ(p.n1, static_cast<std::uint64_t>(std::ceil(std::ldexp(1.0, d + 2) / eps - 1e-9)));
      EXPECT_DOUBLE_EQ(p.eta, std::pow(2.0, -(std::pow(2.0, d) + 1)) / (d + 1));
    }
  }
}

TEST(Lemma1Params, Errors) {
  EXPECT_THROW(lemma1_params(1, 0.0), InvalidArgument);
  EXPECT_THROW(lemma1_params(1, 1.0), InvalidArgument);
  EXPECT_THROW(lemma1_params(-1, 0.5), InvalidArgument);
  EXPECT_THROW(lemma1_params(25, 0.5), ResourceError);
}

TEST(SnappedCeil, DecimalNoise) {
  EXPECT_EQ(snapped_ceil(32.0 / 0.1), 320u);
  EXPECT_EQ(snapped_ceil(2.0000001), 3u);
  EXPECT_EQ(snapped_ceil(191.73), 192u);
}

TEST(Tournament, LeafOnPointMassIsDeterministic) {
  auto s = solver_of({"00", "01", "10", "11"});
  auto d = RealizableDistribution::point_mass({1}, Hypothesis::from_string("01"));
  const auto a = tournament(0, *s, d, 3, RandomSource(1, 0));
  const auto b = tournament(0, *s, d, 3, RandomSource(2, 0));
  EXPECT_EQ(a.output, b.output);
  EXPECT_EQ(a.output.to_string(), "11");
  EXPECT_EQ(a.resolution, Resolution::leaf);
}

TEST(Tournament, AgreementShortCircuits) {
  auto s = solver_of({"00", "11"});
  auto d = RealizableDistribution::uniform(Hypothesis::from_string("11"));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = tournament(1, *s, d, 2, RandomSource(seed, 0));
    EXPECT_TRUE(r.agreed());
    EXPECT_EQ(r.output.to_string(), "11");
    EXPECT_EQ(r.sequence.forced_mistakes, 0u);
  }
}

TEST(Tournament, ToyMatchesEnumeration) {
  auto s = solver_of({"00", "11"});
  auto d = RealizableDistribution::uniform(Hypothesis::from_string("11"));
  const auto exact = exact_tournament(1, *s, d, 1);
  const auto mc = mc_tournament(1, *s, d, 1, 100000, 5);
  EXPECT_LE(total_variation(exact, mc), 0.01);
}

TEST(Tournament, HandEnumeratedThreeRowClass) {
  // Leaves see one example: x0 gives 01, x1 gives 10. Equal leaves pass
  // through; unequal ones always end at 00 after the disagreement at x0.
  auto s = solver_of({"00", "01", "10"});
  auto d = RealizableDistribution::uniform(Hypothesis::from_string("00"));
  const auto exact = exact_tournament(1, *s, d, 1);
  EXPECT_NEAR(exact.probability(Hypothesis::from_string("00")), 0.5, 1e-12);
  EXPECT_NEAR(exact.probability(Hypothesis::from_string("01")), 0.25, 1e-12);
  EXPECT_NEAR(exact.probability(Hypothesis::from_string("10")), 0.25, 1e-12);
  const auto mc = mc_tournament(1, *s, d, 1, 100000, 6);
  EXPECT_LE(total_variation(exact, mc), 0.01);
}

TEST(Tournament, RejectsBadArguments) {
  auto s = solver_of({"00", "11"});
  auto d = RealizableDistribution::uniform(Hypothesis::from_string("11"));
  EXPECT_THROW(tournament(-1, *s, d, 1, RandomSource(0, 0)), InvalidArgument);
  Sample empty;
  SampleCursor cur(empty);
  RandomSource coins(0, 0);
  EXPECT_THROW(tournament(1, *s, cur, 0, coins), InvalidArgument);
}

TEST(Property, ForcedMistakesLowerTheLdim) {
  RandomSource rng(31, 0);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Hypothesis::Row> rows;
    const std::size_t m = 2 + rng.choose(3);
    for (std::size_t r = 0, k = 2 + rng.choose(10); r < k; ++r) {
      Hypothesis::Row row(m);
      for (auto& b : row) b = static_cast<std::uint8_t>(rng.choose(2));
      rows.push_back(row);
    }
    auto solver = std::make_shared<const LdimSolver>(make_class(rows));
    const auto& c = solver->hypothesis_class();
    const int d = solver->ldim();
    auto dist = RealizableDistribution::uniform(c.row(rng.choose(c.size())));
    const int t = static_cast<int>(rng.choose(4));
    const auto r = tournament(t, *solver, dist, 1 + rng.choose(3), rng.derive(trial));
    EXPECT_EQ(r.sequence.forced_mistakes,
              static_cast<std::size_t>(std::count_if(r.sequence.entries.begin(), r.sequence.entries.end(),
                                                     [](const auto& e) { return e.hallucinated; })));
    EXPECT_LE(solver->ldim(r.version_space), d - static_cast<int>(r.sequence.forced_mistakes));
    EXPECT_EQ(r.version_space, c.consistent(r.sequence.examples()));
    EXPECT_EQ(empirical_error(r.output, r.sequence.examples()).disagreements, 0u);
    // The SOA run over the augmented sequence errs on every hallucinated entry.
    Soa soa(solver);
    for (const auto& e : r.sequence.entries) {
      const bool mistake = soa.observe(e.example);
      if (e.hallucinated) {
        EXPECT_TRUE(mistake);
      }
    }
  }
}

TEST(GloballyStable, SingletonClassIsDeterministic) {
  auto c = make_class(std::vector<std::string>{"0110"});
  auto d = RealizableDistribution::uniform(c.row(0));
  const auto p = desk_scale(lemma1_params(0, 0.5), 2, 4);
  GloballyStableLearner g(std::make_shared<const LdimSolver>(c), p);
  const auto rep = empirical_stability([&](RandomSource& r) { return globally_stable_learn(g, d, r).output; }, 200,
                                       RandomSource(3, 0));
  EXPECT_EQ(rep.eta_hat, 1.0);
  EXPECT_EQ(rep.f0, c.row(0));
}

TEST(GloballyStable, ConsistentWithPrefixAndReproducible) {
  auto solver = std::make_shared<const LdimSolver>(threshold_class(8));
  auto d = RealizableDistribution({0.3, 0.05, 0.05, 0.1, 0.1, 0.1, 0.1, 0.2}, Hypothesis::from_string("00011111"));
  GloballyStableLearner g(solver, desk_scale(lemma1_params(3, 0.5), 2, 6));
  for (std::uint64_t i = 0; i < 300; ++i) {
    const RandomSource r(99, i);
    const auto run = globally_stable_learn(g, d, r);
    EXPECT_EQ(empirical_error(run.output, run.prefix).disagreements, 0u);
    EXPECT_EQ(run.prefix.size(), 6u);
    EXPECT_GE(run.level, 0);
    EXPECT_LE(run.level, 3);
    EXPECT_EQ(globally_stable_learn(g, d, r).output, run.output);
  }
}

TEST(GloballyStable, ToyClassIsStableWithLemma2Loss) {
  auto c = make_class(std::vector<std::string>{"00", "11"});
  auto d = RealizableDistribution::uniform(Hypothesis::from_string("11"));
  const auto p = desk_scale(lemma1_params(1, 0.5), 4, 8);
  GloballyStableLearner g(std::make_shared<const LdimSolver>(c), p);
  const auto rep = empirical_stability([&](RandomSource& r) { return globally_stable_learn(g, d, r).output; }, 2000,
                                       RandomSource(12, 0));
  EXPECT_GE(rep.wilson_lower, p.eta);
  EXPECT_LE(true_error(rep.f0, d), std::log2(1.0 / p.eta) / static_cast<double>(p.n1));
}

TEST(EmpiricalStability, FairCoinLearner) {
  const auto a = Hypothesis::from_string("01"), b = Hypothesis::from_string("10");
  const auto rep = empirical_stability([&](RandomSource& r) { return r.coin() ? a : b; }, 10000, RandomSource(4, 0));
  const double sigma = std::sqrt(0.25 / 10000);
  EXPECT_GE(rep.eta_hat, 0.5 - 3 * sigma);
  EXPECT_LE(rep.eta_hat, 0.5 + 3 * sigma);
  EXPECT_EQ(rep.counts.size(), 2u);
}

TEST(EmpiricalStability, IndependentOfThreads) {
  auto c = threshold_class(4);
  auto d = RealizableDistribution::uniform(Hypothesis::from_string("0011"));
  GloballyStableLearner g(std::make_shared<const LdimSolver>(c), desk_scale(lemma1_params(2, 0.5), 1, 2));
  auto learner = [&](RandomSource& r) { return globally_stable_learn(g, d, r).output; };
  const auto one = empirical_stability(learner, 500, RandomSource(8, 0), 1);
  const auto many = empirical_stability(learner, 500, RandomSource(8, 0), 3);
  EXPECT_EQ(one.counts, many.counts);
  EXPECT_EQ(one.eta_hat, many.eta_hat);
}

TEST(Wilson, QuantileAndFormula) {
  boost::math::normal n;
  EXPECT_NEAR(kZ99, boost::math::quantile(n, 0.995), 1e-12);
  // Wilson score interval at p = 0.3, n = 100, z = 1.96 from its textbook form.
  const auto w = wilson_interval(30, 100, 1.96);
  EXPECT_NEAR(w.lower(), 0.2189, 1e-4);
  EXPECT_NEAR(w.upper(), 0.3958, 1e-4);
  EXPECT_THROW(wilson_interval(0, 0), InvalidArgument);
}
