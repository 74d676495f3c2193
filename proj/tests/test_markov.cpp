#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "models.hpp"
#include "oracle.hpp"

using namespace seqheat;
using testmodels::levels;
using testmodels::qubit;

namespace {

Chain resonant_chain(double beta) { return compile(testmodels::resonant({beta})); }

}  // namespace

TEST(Propagator, ResonantQubitFrozenValues) {
  const auto c = resonant_chain(2.0);
  const auto& m = c.propagators[0];
  EXPECT_NEAR(m(0, 0), 0.9403985389889411, 1e-15);
  EXPECT_NEAR(m(0, 1), 0.44039853898894105, 1e-15);
  EXPECT_NEAR(m(1, 0), 0.05960146101105876, 1e-15);
  EXPECT_NEAR(m(1, 1), 0.5596014610110588, 1e-15);
}

TEST(Propagator, MatchesFullBasisSum) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto c = compile(testmodels::haar(levels({0, 1, 2}), levels({0, 1, 2}), {0.4, 1.7}, seed));
    const auto ref = oracle::propagators(c);
    for (std::size_t i = 0; i < c.size(); ++i) {
      EXPECT_LT((c.propagators[i].matrix - ref[i]).cwiseAbs().maxCoeff(), 1e-14);
      EXPECT_LT((c.propagators[i].matrix.colwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
      EXPECT_GE(c.propagators[i].matrix.minCoeff(), 0.0);
    }
  }
}

TEST(Propagator, IdentityUnitaryGivesIdentity) {
  const auto c = compile(testmodels::identity(2));
  for (const auto& m : c.propagators) EXPECT_TRUE(m.matrix.isIdentity(0.0));
}

TEST(Propagator, RejectsMismatchedAncillaState) {
  const auto c = resonant_chain(1.0);
  const auto wrong = gibbs_state(levels({0, 1, 2}), 1.0);
  EXPECT_THROW(propagator_from_tensor(c.collisions[0].transitions, wrong, 0), DimensionError);
}

TEST(DetailedBalance, HoldsWhenShellsHaveAtMostTwoMembers) {
  const std::vector<std::pair<Spectrum, Spectrum>> dims = {
      {qubit(), qubit()}, {levels({0, 1, 2}), qubit()}, {qubit(), levels({0, 1, 2})},
      {levels({0, 1, 3}), levels({0, 2, 5})}, {levels({0, Rational(1, 2), 2}), levels({0, Rational(1, 2), 3})}};
  for (const auto& [sys, anc] : dims) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto c = compile(testmodels::haar(sys, anc, {0.3, 2.2}, seed));
      for (std::size_t i = 0; i < c.size(); ++i) {
        const auto rep = assert_detailed_balance(c.propagators[i], c.ancilla_beta(i), c.model.system, 1e-10);
        EXPECT_TRUE(rep.passed) << rep.maxResidual;
      }
    }
  }
}

TEST(DetailedBalance, ThreeMemberShellsNeedTheConjugatedPartner) {
  // A Haar block on a three-member shell has |B_jk| != |B_kj| in general, so
  // M is not reversible with itself. It is always balanced against the
  // propagator of the conjugated collision U^dagger.
  const auto c = compile(testmodels::haar(levels({0, 1, 2}), levels({0, 1, 2}), {0.8}, 3));
  const auto& m = c.propagators[0];
  EXPECT_FALSE(assert_detailed_balance(m, 0.8, c.model.system, 1e-10).passed);

  const auto dagger = oracle::propagator(oracle::dense(c.collisions[0].unitary).adjoint(),
                                         c.collisions[0].ancillaThermal.populations, 3);
  const auto g = gibbs_state(c.model.system, 0.8);
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b)
      EXPECT_NEAR(m(a, b) * g.populations[b],
                  dagger(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) * g.populations[a], 1e-15);
}

TEST(DetailedBalance, ReportsTheViolatingPair) {
  Propagator m{Eigen::MatrixXd::Constant(2, 2, 0.5), 0};
  const auto rep = assert_detailed_balance(m, 1.0, qubit(), 1e-10);
  EXPECT_FALSE(rep.passed);
  EXPECT_EQ(rep.worstFirst, 0u);
  EXPECT_EQ(rep.worstSecond, 1u);
  EXPECT_NEAR(rep.maxResidual, 1.0 - std::exp(-1.0), 1e-15);
  EXPECT_THROW(assert_detailed_balance(m, 1.0, levels({0, 1, 2}), 1e-10), DimensionError);
}

TEST(Evolve, FrozenValueAndFixedPoint) {
  const auto c = resonant_chain(2.0);
  const auto p1 = evolve(c.systemThermal.populations, c.propagators[0]);
  EXPECT_NEAR(p1[0], 0.8059278283039435, 1e-15);
  EXPECT_NEAR(p1[1], 0.1940721716960563, 1e-15);

  // Gibbs at the ancilla temperature is stationary.
  const auto g = gibbs_state(qubit(), 2.0);
  const auto same = evolve(g.populations, c.propagators[0]);
  EXPECT_NEAR(same[0], g.populations[0], 1e-15);
  EXPECT_THROW(evolve(std::vector<double>{1.0}, c.propagators[0]), DimensionError);
}

TEST(Evolve, FixedPointForRandomHaarModels) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto c = compile(testmodels::haar(levels({0, 1, 3}), levels({0, 1, 2, 3}), {0.9}, seed));
    const auto g = gibbs_state(c.model.system, 0.9);
    const auto out = evolve(g.populations, c.propagators[0]);
    for (std::size_t a = 0; a < 3; ++a) EXPECT_NEAR(out[a], g.populations[a], 1e-13);
  }
}

TEST(PathProbability, SingleStepExamples) {
  const auto c = resonant_chain(2.0);
  EXPECT_NEAR(forward_path_probability({0, 1}, c.propagators, c.systemThermal), 0.04357215937101627, 1e-15);
  EXPECT_NEAR(backward_path_probability({0, 1}, c.propagators, c.systemThermal), 0.11844140904495501, 1e-15);
  EXPECT_THROW(forward_path_probability({0}, c.propagators, c.systemThermal), DimensionError);
  EXPECT_THROW(forward_path_probability({0, 2}, c.propagators, c.systemThermal), DimensionError);
}

TEST(PathProbability, ForwardAndBackwardAreNormalized) {
  const auto c = compile(testmodels::haar(levels({0, 1, 2}), qubit(), {0.5, 1.5, 2.5}, 3));
  double fwd = 0.0, bwd = 0.0;
  oracle::for_each_path(3, 4, [&](const std::vector<std::size_t>& g) {
    fwd += forward_path_probability(g, c.propagators, c.systemThermal);
    bwd += backward_path_probability(g, c.propagators, c.systemThermal);
  });
  EXPECT_NEAR(fwd, 1.0, 1e-13);
  EXPECT_NEAR(bwd, 1.0, 1e-13);
}

TEST(PathProbability, MarginalsFollowTheEvolvedState) {
  const auto c = compile(testmodels::haar(levels({0, 1, 2}), levels({0, 1, 2}), {0.5, 1.5, 2.5}, 8));
  std::vector<double> p(c.systemThermal.populations);
  std::vector<std::vector<double>> evolved{p};
  for (const auto& m : c.propagators) evolved.push_back(p = evolve(p, m));

  std::vector<std::vector<double>> marg(4, std::vector<double>(3, 0.0));
  oracle::for_each_path(3, 4, [&](const std::vector<std::size_t>& g) {
    const double w = forward_path_probability(g, c.propagators, c.systemThermal);
    for (std::size_t i = 0; i < 4; ++i) marg[i][g[i]] += w;
  });
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t a = 0; a < 3; ++a) EXPECT_NEAR(marg[i][a], evolved[i][a], 1e-14);
}

TEST(PathProbability, ChainRuleAgainstTruncation) {
  const auto c = compile(testmodels::haar(levels({0, 1, 2}), qubit(), {0.5, 1.5, 2.5}, 12));
  const auto t = truncate(c, 2);
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::size_t> lvl(0, 2);
  for (int k = 0; k < 100; ++k) {
    SystemTrajectory g{lvl(rng), lvl(rng), lvl(rng), lvl(rng)};
    const SystemTrajectory prefix(g.begin(), g.begin() + 3);
    EXPECT_NEAR(forward_path_probability(g, c.propagators, c.systemThermal),
                forward_path_probability(prefix, t.propagators, t.systemThermal) * c.propagators[2](g[3], g[2]),
                1e-16);
  }
}

TEST(PathProbability, SingleCollisionRatioIsBoltzmann) {
  // With beta_s equal to the ancilla beta the forward/backward ratio of one
  // step is exp(-(beta_i - beta_s) Q) = 1; with different betas it is
  // exp((beta_i - beta_s) Q).
  const auto c = compile(testmodels::resonant({2.0}, 1.0));
  const double pf = forward_path_probability({0, 1}, c.propagators, c.systemThermal);
  const double pb = backward_path_probability({0, 1}, c.propagators, c.systemThermal);
  EXPECT_NEAR(std::log(pf / pb), (2.0 - 1.0) * -1.0, 1e-14);
}
