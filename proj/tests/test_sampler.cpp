#include <gtest/gtest.h>

#include <cmath>
#include <array>
#include <numbers>

#include "models.hpp"
#include "oracle.hpp"

using namespace seqheat;
using testmodels::levels;
using testmodels::qubit;

namespace {

HeatTuple Q(std::initializer_list<long> v) {
  HeatTuple q;
  for (long x : v) q.emplace_back(x);
  return q;
}

using Pairs = std::vector<std::pair<std::size_t, std::size_t>>;

}  // namespace

TEST(SampleTrajectory, IdentityKeepsEverything) {
  const auto c = compile(testmodels::identity(4));
  CounterStream s(stream_key({1, 2}));
  for (int k = 0; k < 200; ++k) {
    const auto t = sample_trajectory(c, s);
    ASSERT_EQ(t.alphas.size(), 5u);
    for (std::size_t i = 1; i < t.alphas.size(); ++i) EXPECT_EQ(t.alphas[i], t.alphas[0]);
    for (const auto& [n, np] : t.ancillaPairs) EXPECT_EQ(n, np);
  }
}

TEST(SampleTrajectory, FullSwapExchanges) {
  const auto c = compile(testmodels::resonant({0.3, 1.2, 0.8}, 1.0, std::numbers::pi / 2));
  CounterStream s(stream_key({3}));
  for (int k = 0; k < 500; ++k) {
    const auto t = sample_trajectory(c, s);
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_EQ(t.alphas[i + 1], t.ancillaPairs[i].first);
      EXPECT_EQ(t.ancillaPairs[i].second, t.alphas[i]);
    }
  }
}

TEST(SampleTrajectory, RecordsFollowTheAugmentedWeights) {
  const auto c = compile(testmodels::haar(levels({0, 1, 2}), qubit(), {0.4, 1.6}, 9));
  std::map<std::pair<std::vector<std::size_t>, Pairs>, double> exact;
  for_each_augmented_path(c, [&](std::span<const std::size_t> a,
                                 std::span<const std::pair<std::size_t, std::size_t>> p, double w) {
    exact[{std::vector<std::size_t>(a.begin(), a.end()), Pairs(p.begin(), p.end())}] += w;
  });

  CounterStream s(stream_key({77}));
  std::map<std::pair<std::vector<std::size_t>, Pairs>, double> freq;
  const int shots = 200000;
  for (int k = 0; k < shots; ++k) {
    const auto rec = make_record(c, sample_trajectory(c, s));
    const auto key = std::make_pair(rec.trajectory.alphas, rec.trajectory.ancillaPairs);
    auto it = exact.find(key);
    ASSERT_NE(it, exact.end());
    if (k < 1000) {
      EXPECT_NEAR(rec.logPathProbability, std::log(it->second), 1e-12);
    }
    freq[key] += 1.0 / shots;
  }
  double tv = 0.0;
  for (const auto& [key, p] : exact) tv += std::abs(p - (freq.count(key) ? freq[key] : 0.0));
  EXPECT_LT(0.5 * tv, 0.01);
}

TEST(Heats, FromSystemPath) {
  EXPECT_EQ(heats_from_system_path(std::vector<std::size_t>{1, 1, 1}, qubit()), Q({0, 0}));
  EXPECT_EQ(heats_from_system_path(std::vector<std::size_t>{1, 0}, qubit()), Q({1}));
  EXPECT_EQ(heats_from_system_path(std::vector<std::size_t>{0, 1, 0}, qubit()), Q({-1, 1}));
  const auto thirds = levels({0, Rational(1, 3), 1});
  EXPECT_EQ(heats_from_system_path(std::vector<std::size_t>{2, 1}, thirds), HeatTuple{Rational(2, 3)});
}

TEST(Heats, FromAncillaPath) {
  const std::vector<Spectrum> two{qubit(), qubit()};
  EXPECT_EQ(heats_from_ancilla_path(Pairs{{0, 0}, {1, 1}}, two), Q({0, 0}));
  EXPECT_EQ(heats_from_ancilla_path(Pairs{{0, 1}, {1, 0}}, two), Q({1, -1}));
  EXPECT_THROW(heats_from_ancilla_path(Pairs{{0, 1}}, two), DimensionError);
}

TEST(Heats, BothDefinitionsAgreeOnEverySampledShot) {
  const auto c = compile(testmodels::haar(levels({0, Rational(1, 3), 1}), levels({0, Rational(2, 3), 1}),
                                          {0.4, 1.6, 2.2}, 4));
  CounterStream s(stream_key({5}));
  for (int k = 0; k < 20000; ++k) {
    const auto t = sample_trajectory(c, s);
    EXPECT_EQ(heats_from_system_path(t.alphas, c.model.system),
              heats_from_ancilla_path(t.ancillaPairs, c.ancillaSpectra));
  }
}

TEST(EntropyProduction, Examples) {
  const auto one = compile(testmodels::resonant({2.0}));
  EXPECT_EQ(entropy_production({{0, 0}, {{1, 1}}}, Q({0}), one), 0.0);
  EXPECT_NEAR(entropy_production({{1, 0}, {{0, 1}}}, Q({1}), one), 1.0, 1e-15);

  const auto two = compile(testmodels::resonant({2.0, 3.0}));
  EXPECT_NEAR(entropy_production({{1, 0, 1}, {{0, 1}, {1, 0}}}, Q({1, -1}), two), -1.0, 1e-15);
}

TEST(EntropyProduction, InconsistentRecordIsRejected) {
  const auto one = compile(testmodels::resonant({2.0}));
  // Heat +1 claimed for a trajectory where nothing moved.
  EXPECT_THROW(entropy_production({{0, 0}, {{0, 0}}}, Q({1}), one), ConsistencyError);
  EXPECT_THROW(entropy_production({{0, 0}, {{0, 0}}}, Q({0, 0}), one), DimensionError);
}

TEST(AncillaPostState, Examples) {
  const auto id = compile(testmodels::identity(2));
  for (std::size_t i = 0; i < 2; ++i) {
    const auto post = ancilla_post_state(id, i);
    for (std::size_t n = 0; n < 2; ++n) EXPECT_NEAR(post[n], id.collisions[i].ancillaThermal.populations[n], 1e-15);
  }

  const auto swap = compile(testmodels::resonant({2.0, 0.5}, 1.0, std::numbers::pi / 2));
  const auto q1 = ancilla_post_state(swap, 0);
  EXPECT_NEAR(q1[0], swap.systemThermal.populations[0], 1e-15);
  // The second ancilla receives the first ancilla's original state.
  const auto q2 = ancilla_post_state(swap, 1);
  EXPECT_NEAR(q2[1], swap.collisions[0].ancillaThermal.populations[1], 1e-15);

  const auto c = compile(testmodels::resonant({2.0}));
  const auto post = ancilla_post_state(c, 0);
  EXPECT_NEAR(post[1], 0.19407217169605628, 1e-15);
  EXPECT_NEAR(post[0] + post[1], 1.0, 1e-15);
  EXPECT_THROW(ancilla_post_state(c, 1), DimensionError);
}

TEST(AncillaPostState, MatchesBruteForceSum) {
  const auto c = compile(testmodels::haar(levels({0, 1, 2}), levels({0, 1, 2}), {0.4, 1.6}, 2));
  const auto p1 = evolve(c.systemThermal.populations, c.propagators[0]);
  const auto u = oracle::dense(c.collisions[1].unitary);
  const auto& q = c.collisions[1].ancillaThermal.populations;
  std::vector<double> ref(3, 0.0);
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t n = 0; n < 3; ++n)
      for (std::size_t b = 0; b < 3; ++b)
        for (std::size_t k = 0; k < 3; ++k)
          ref[k] += std::norm(u(static_cast<Eigen::Index>(b * 3 + k), static_cast<Eigen::Index>(a * 3 + n))) *
                    q[n] * p1[a];
  const auto post = ancilla_post_state(c, 1);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(post[k], ref[k], 1e-15);
}

TEST(AverageEntropyProduction, IdentityIsZero) {
  const auto rep = average_entropy_production(compile(testmodels::identity(3)));
  EXPECT_TRUE(rep.passed);
  EXPECT_NEAR(rep.fromHeat, 0.0, 1e-15);
  EXPECT_NEAR(rep.fromLogRatio, 0.0, 1e-15);
  EXPECT_NEAR(rep.informational, 0.0, 1e-15);
}

TEST(AverageEntropyProduction, ResonantSingleCollision) {
  const auto rep = average_entropy_production(compile(testmodels::resonant({2.0})));
  EXPECT_TRUE(rep.passed);
  EXPECT_NEAR(rep.fromHeat, 0.07486924967393874, 1e-14);
  EXPECT_LT(rep.maxDisagreement, 1e-9);
  EXPECT_GT(rep.informational, 0.0);
}

TEST(AverageEntropyProduction, ThreeRoutesAgreeOnHaarModels) {
  const std::vector<std::pair<Spectrum, Spectrum>> dims = {
      {qubit(), qubit()}, {levels({0, 1, 2}), qubit()}, {levels({0, 1, 2}), levels({0, 1, 2})}};
  for (const auto& [sys, anc] : dims) {
    const auto rep = average_entropy_production(compile(testmodels::haar(sys, anc, {0.5, 1.5, 2.5}, 5)));
    EXPECT_TRUE(rep.passed) << rep.maxDisagreement;
    EXPECT_GE(rep.fromHeat, -1e-12);
  }
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto rep = average_entropy_production(
        compile(testmodels::haar(levels({0, 1, 2}), qubit(), {3.0, 0.1, 1.2, 0.7}, seed, 1.4)));
    EXPECT_TRUE(rep.passed);
    EXPECT_GE(rep.informational, -1e-12);
  }
}

TEST(EmpiricalJoint, FrequenciesAndStandardErrors) {
  std::vector<TrajectoryRecord> recs(4);
  recs[0].heats = Q({1});
  recs[1].heats = Q({0});
  recs[2].heats = Q({0});
  recs[3].heats = Q({0});
  const auto e = empirical_joint(recs);
  EXPECT_EQ(e.shots, 4u);
  EXPECT_DOUBLE_EQ(e.distribution.probability(Q({0})), 0.75);
  EXPECT_DOUBLE_EQ(e.standardErrors.at(Q({1})), std::sqrt(0.25 * 0.75 / 4));
}

TEST(RunSampler, IdentityGivesPointMass) {
  const auto s = run_sampler(compile(testmodels::identity(2)), {.shots = 1000, .masterSeed = 3, .workerCount = 2});
  ASSERT_EQ(s.empirical.distribution.entries.size(), 1u);
  EXPECT_EQ(s.empirical.distribution.entries.begin()->first, Q({0, 0}));
  EXPECT_DOUBLE_EQ(s.meanExpNegSigma, 1.0);
}

TEST(RunSampler, ConvergesOnTheResonantModel) {
  const auto c = compile(testmodels::resonant({2.0}));
  const auto s = run_sampler(c, {.shots = 1000000, .masterSeed = 1, .workerCount = 1});
  const auto exact = exact_forward_joint(c);
  const double se = s.empirical.standardErrors.at(Q({1}));
  EXPECT_NEAR(s.empirical.distribution.probability(Q({1})), 0.118442, 3 * se);
  EXPECT_LE(total_variation(s.empirical.distribution, exact), 0.005);
  EXPECT_NEAR(s.meanExpNegSigma, 1.0, 5 * s.stdErrExpNegSigma);
}

TEST(RunSampler, DeterministicForFixedSeedAndWorkers) {
  const auto c = compile(testmodels::haar(levels({0, 1, 2}), qubit(), {0.4, 1.6}, 9));
  for (std::size_t workers : {1u, 3u}) {
    std::vector<std::string> a, b;
    const auto s1 = run_sampler(c, {.shots = 70001, .masterSeed = 8, .workerCount = workers},
                                [&](std::uint64_t j, const TrajectoryRecord& r) { a.push_back(trajectory_line(j, r)); });
    const auto s2 = run_sampler(c, {.shots = 70001, .masterSeed = 8, .workerCount = workers},
                                [&](std::uint64_t j, const TrajectoryRecord& r) { b.push_back(trajectory_line(j, r)); });
    EXPECT_EQ(a, b);
    EXPECT_EQ(s1.empirical.distribution, s2.empirical.distribution);
    EXPECT_EQ(s1.meanExpNegSigma, s2.meanExpNegSigma);
  }
  const auto other = run_sampler(c, {.shots = 1000, .masterSeed = 9, .workerCount = 1});
  const auto base = run_sampler(c, {.shots = 1000, .masterSeed = 8, .workerCount = 1});
  EXPECT_NE(other.empirical.distribution, base.empirical.distribution);
}

TEST(RunSampler, RejectsEmptyRuns) {
  const auto c = compile(testmodels::resonant({2.0}));
  EXPECT_THROW(run_sampler(c, {.shots = 0}), ConfigError);
  EXPECT_THROW(run_sampler(c, {.shots = 5, .masterSeed = 0, .workerCount = 0}), ConfigError);
}

TEST(HiddenMarkov, AncillaRecordIsNotMarkov) {
  // P(n_2' | n_2, n_1') still depends on n_1 when the system is hidden.
  const auto c = compile(testmodels::resonant({0.5, 2.5}));
  const auto rec = ancilla_record_distribution(c);
  // key = (alpha_0, n_1, n_1', n_2, n_2')
  std::map<std::array<std::size_t, 3>, std::array<double, 2>> cond;  // (n_1, n_1', n_2) -> n_2'
  for (const auto& [k, p] : rec) cond[{k[1], k[2], k[3]}][k[4]] += p;
  double worst = 0.0;
  for (std::size_t n1p = 0; n1p < 2; ++n1p) {
    for (std::size_t n2 = 0; n2 < 2; ++n2) {
      const auto& a = cond[{0, n1p, n2}];
      const auto& b = cond[{1, n1p, n2}];
      const double za = a[0] + a[1], zb = b[0] + b[1];
      if (za <= 0.0 || zb <= 0.0) continue;
      worst = std::max(worst, 0.5 * (std::abs(a[0] / za - b[0] / zb) + std::abs(a[1] / za - b[1] / zb)));
    }
  }
  EXPECT_GT(worst, 1e-3);
}
