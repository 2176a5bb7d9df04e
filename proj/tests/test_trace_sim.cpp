#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "qsynth/presets.hpp"
#include "qsynth/trace_sim.hpp"
#include "support/oracles.hpp"

using namespace qsynth;
using namespace qsynth::sim;

namespace {

double excited_fraction(const std::vector<int>& states) {
  double n = 0.0;
  for (int s : states) n += s;
  return n / static_cast<double>(states.size());
}

/// Mean length of complete dwells in `state` from a continuous event log.
double mean_dwell(const std::vector<Transition>& events, int state, std::size_t* count = nullptr) {
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 1; i < events.size(); ++i)
    if (events[i - 1].to == state) {
      total += events[i].time_s - events[i - 1].time_s;
      ++n;
    }
  if (count) *count = n;
  return total / static_cast<double>(n);
}

/// Standard deviation of a telegraph-process occupancy estimate over T
/// seconds: var = 2 p0 p1 / ((up + down) T).
double occupancy_sigma(double up, double down, double seconds) {
  const double total = up + down;
  return std::sqrt(2.0 * (down / total) * (up / total) / (total * seconds));
}

}  // namespace

TEST(StationaryDistribution, Symmetric) {
  const auto d = stationary_distribution(1, 1);
  EXPECT_DOUBLE_EQ(d.p_ground, 0.5);
  EXPECT_DOUBLE_EQ(d.p_excited, 0.5);
}

TEST(StationaryDistribution, Analytic) {
  const auto d = stationary_distribution(1, 9);
  EXPECT_DOUBLE_EQ(d.p_ground, 0.9);
  EXPECT_DOUBLE_EQ(d.p_excited, 0.1);
}

TEST(StationaryDistribution, ScaleInvariant) {
  for (double k : {0.001, 1.0, 37.0, 1e6}) {
    const auto d = stationary_distribution(0.06 * k, 0.94 * k);
    EXPECT_NEAR(d.p_ground, 0.94, 1e-12);
    EXPECT_NEAR(d.p_excited, 0.06, 1e-12);
  }
}

TEST(StationaryDistribution, DegenerateChainThrows) {
  EXPECT_THROW(stationary_distribution(0, 0), ParameterError);
  EXPECT_THROW(stationary_distribution(-1, 1), ParameterError);
}

TEST(TwoState, AbsorbingGroundIsConstant) {
  TwoStateParams p;
  p.rate_up = 0.0;
  p.noise_sigma = 0.0;
  const auto t = simulate_two_state(p, 1.0, 5);
  ASSERT_EQ(t.length(), 10'000u);
  for (double v : t.samples[0]) ASSERT_EQ(v, p.level_ground);
}

TEST(TwoState, DeterministicPerSeed) {
  const auto p = presets::sparse_excitation();
  const auto a = simulate_two_state(p, 2.0, 123);
  const auto b = simulate_two_state(p, 2.0, 123);
  const auto c = simulate_two_state(p, 2.0, 124);
  EXPECT_EQ(a, b);
  EXPECT_NE(a.samples, c.samples);
  EXPECT_EQ(a.seed, 123u);
}

TEST(TwoState, FrozenSamplesForSeed7) {
  // Regression guard for cross-platform bit-identity of the generator chain.
  const auto t = simulate_two_state(presets::sparse_excitation(), 0.001, 7);
  ASSERT_EQ(t.length(), 10u);
  EXPECT_EQ(t.samples[0][0], -0.9644762160665133);
  EXPECT_EQ(t.samples[0][1], -0.9067906742825995);
}

TEST(TwoState, SampleCountAndRate) {
  TwoStateParams p;
  p.sample_rate_hz = 25'000;
  const auto t = simulate_two_state(p, 0.5, 1);
  EXPECT_EQ(t.length(), 12'500u);
  EXPECT_EQ(t.sample_rate_hz, 25'000.0);
  EXPECT_EQ(t.channels(), 1u);
}

TEST(TwoState, InvalidParamsThrow) {
  TwoStateParams p;
  p.rate_up = p.rate_down = 0.0;
  EXPECT_THROW(simulate_two_state(p, 1, 0), ParameterError);
  p = {};
  p.sample_rate_hz = 500;
  EXPECT_THROW(simulate_two_state(p, 1, 0), ParameterError);
  p = {};
  p.level_excited = p.level_ground;
  EXPECT_THROW(simulate_two_state(p, 1, 0), ParameterError);
  p = {};
  p.noise_sigma = -0.1;
  EXPECT_THROW(simulate_two_state(p, 1, 0), ParameterError);
  EXPECT_THROW(simulate_two_state(TwoStateParams{}, 0.0, 0), ParameterError);
  EXPECT_THROW(simulate_two_state(TwoStateParams{}, -1.0, 0), ParameterError);
}

TEST(TwoState, SampleCountOverflowIsCapacityError) {
  TwoStateParams p;
  p.sample_rate_hz = 1e6;
  EXPECT_THROW(simulate_two_state(p, 1e7, 0), CapacityError);
}

TEST(TwoState, OccupancyWithinThreeSigma) {
  struct Case {
    double up, down, seconds;
  };
  for (const auto& c : {Case{6.38297872, 100.0, 60.0}, Case{200.0, 300.0, 20.0}, Case{50.0, 50.0, 30.0}}) {
    TwoStateParams p;
    p.rate_up = c.up;
    p.rate_down = c.down;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const auto run = simulate_two_state_run(p, c.seconds, seed);
      const double expected = stationary_distribution(c.up, c.down).p_excited;
      EXPECT_NEAR(excited_fraction(run.states), expected, 3.0 * occupancy_sigma(c.up, c.down, c.seconds))
          << "up=" << c.up << " down=" << c.down << " seed=" << seed;
    }
  }
}

TEST(TwoState, DwellTimesMatchIndependentGillespieOracle) {
  TwoStateParams p;
  p.rate_up = 100.0;
  p.rate_down = 100.0;
  const auto run = simulate_two_state_run(p, 120.0, 9);
  std::size_t n_excited = 0, n_ground = 0;
  const double excited = mean_dwell(run.events, 1, &n_excited);
  const double ground = mean_dwell(run.events, 0, &n_ground);
  ASSERT_GE(n_excited, 1000u);
  ASSERT_GE(n_ground, 1000u);

  // Independent event-time simulation with the standard library generator.
  std::mt19937_64 gen(2024);
  std::exponential_distribution<double> leave(p.rate_down);
  double oracle = 0.0;
  for (std::size_t i = 0; i < n_excited; ++i) oracle += leave(gen);
  oracle /= static_cast<double>(n_excited);

  EXPECT_NEAR(excited / (1.0 / p.rate_down), 1.0, 0.05);
  EXPECT_NEAR(ground / (1.0 / p.rate_up), 1.0, 0.05);
  EXPECT_NEAR(excited / oracle, 1.0, 0.05);
}

TEST(TwoState, EventLogMatchesSampledStates) {
  const auto p = presets::sparse_excitation();
  const auto run = simulate_two_state_run(p, 5.0, 4);
  const auto from_log = qtest::sample_event_log(run.events, p.initial_state, p.sample_rate_hz, run.states.size());
  EXPECT_EQ(from_log, run.states);
}

TEST(TwoState, SamplesAreLevelPlusNoise) {
  TwoStateParams p;
  p.noise_sigma = 0.0;
  p.level_ground = -0.3;
  p.level_excited = 0.7;
  const auto run = simulate_two_state_run(p, 1.0, 2);
  for (std::size_t i = 0; i < run.states.size(); ++i)
    ASSERT_EQ(run.trace.samples[0][i], run.states[i] ? 0.7 : -0.3);
}

TEST(FourState, AllRatesZeroIsConstant) {
  FourStateParams p;
  p.rate_up = p.rate_down = p.parity_rate = 0.0;
  p.noise_sigma = 0.0;
  const auto t = simulate_four_state(p, 0.5, 3);
  for (double v : t.samples[0]) ASSERT_EQ(v, p.levels[0]);
}

TEST(FourState, ParityFlipCountIsPoisson) {
  FourStateParams p;
  p.rate_up = p.rate_down = 0.0;
  p.parity_rate = 100.0;
  const auto run = simulate_four_state_run(p, 10.0, 17);
  const double count = static_cast<double>(run.parity_events.size());
  EXPECT_NEAR(count, 1000.0, 100.0);
  EXPECT_TRUE(run.qubit_events.empty());
}

TEST(FourState, JointOccupancyIsProductOfMarginals) {
  const auto p = presets::parity_tunneling();
  const auto run = simulate_four_state_run(p, 120.0, 21);
  std::array<double, 4> occ{};
  for (int l : run.labels) occ[static_cast<std::size_t>(l)] += 1.0;
  const auto q = stationary_distribution(p.rate_up, p.rate_down);
  const auto par = stationary_distribution(p.parity_rate, p.parity_rate);
  for (int qb = 0; qb < 2; ++qb)
    for (int pb = 0; pb < 2; ++pb) {
      const double expected = (qb ? q.p_excited : q.p_ground) * (pb ? par.p_excited : par.p_ground);
      EXPECT_NEAR(occ[static_cast<std::size_t>(four_state_index(qb, pb))] / run.labels.size(), expected, 0.01);
    }
}

TEST(FourState, ParityDwellMeanMatchesRate) {
  const auto p = presets::parity_tunneling();
  const auto run = simulate_four_state_run(p, 20.0, 8);
  std::size_t n = 0;
  double sum = 0.0;
  for (std::size_t i = 1; i < run.parity_events.size(); ++i, ++n)
    sum += run.parity_events[i].time_s - run.parity_events[i - 1].time_s;
  ASSERT_GE(n, 1000u);
  EXPECT_NEAR(sum / n, 1.0 / p.parity_rate, 0.05 / p.parity_rate);
}

TEST(FourState, ZeroParityRateReproducesTwoState) {
  for (std::uint64_t seed : {0u, 5u, 99u}) {
    FourStateParams f;
    f.parity_rate = 0.0;
    f.noise_sigma = 0.1;
    TwoStateParams t;
    t.noise_sigma = 0.1;
    f.levels = {t.level_ground, 0.2, t.level_excited, 0.5};  // (q, even) entries coincide with two-state
    const auto a = simulate_four_state(f, 3.0, seed);
    const auto b = simulate_two_state(t, 3.0, seed);
    EXPECT_EQ(a.samples, b.samples) << "seed " << seed;
  }
}

TEST(FourState, LevelsMustBeDistinct) {
  FourStateParams p;
  p.levels = {0, 1, 1, 2};
  EXPECT_THROW(simulate_four_state(p, 1, 0), ParameterError);
  p = {};
  p.parity_rate = -1;
  EXPECT_THROW(simulate_four_state(p, 1, 0), ParameterError);
}

TEST(Follower, ThetaPiTracksLeaderExactly) {
  auto p = presets::follower(presets::FollowQuality::good);
  p.noise_sigma = 0.0;
  const auto run = simulate_follower_run(p, 2.0, 31);
  const auto& t = run.trace;
  ASSERT_EQ(t.channels(), 2u);
  for (std::size_t i = 0; i < t.length(); ++i)
    if (run.round_of_sample[i] >= 1) {
      ASSERT_EQ(t.samples[0][i], t.samples[1][i]) << "sample " << i;
    }
}

TEST(Follower, ThetaZeroNeverChanges) {
  auto p = presets::follower(presets::FollowQuality::good);
  p.theta = 0.0;
  p.noise_sigma = 0.0;
  const auto run = simulate_follower_run(p, 3.0, 5);
  for (int f : run.follower_rounds) ASSERT_EQ(f, 0);
  for (double v : run.trace.samples[1]) ASSERT_EQ(v, p.leader.level_ground);
}

TEST(Follower, LatencyDelaysPerfectFollowing) {
  auto p = presets::follower(presets::FollowQuality::good);
  p.noise_sigma = 0.0;
  p.feedback_latency_rounds = 3;
  const auto run = simulate_follower_run(p, 1.0, 12);
  for (std::size_t k = 3; k < run.follower_rounds.size(); ++k)
    ASSERT_EQ(run.follower_rounds[k], run.leader_rounds[k - 3]);
}

TEST(Follower, HalfPiMatchFractionEqualsChainOracle) {
  auto p = presets::follower(presets::FollowQuality::bad);
  ASSERT_DOUBLE_EQ(p.theta, std::numbers::pi / 2);
  p.noise_sigma = 0.0;
  const auto run = simulate_follower_run(p, 60.0, 77);
  double match = 0.0;
  for (std::size_t i = 0; i < run.trace.length(); ++i) match += run.trace.samples[0][i] == run.trace.samples[1][i];
  match /= static_cast<double>(run.trace.length());
  const double oracle =
      qtest::follower_match_oracle(p.leader.rate_up, p.leader.rate_down, p.round_rate_hz, p.theta);
  EXPECT_NEAR(match, oracle, 0.02);
}

TEST(Follower, MatchMonotoneInFlipProbability) {
  auto p = presets::follower(presets::FollowQuality::good);
  p.noise_sigma = 0.0;
  double prev = -1.0;
  for (int i = 0; i <= 8; ++i) {
    p.theta = std::numbers::pi * i / 8.0;
    const auto run = simulate_follower_run(p, 30.0, 2024);
    double match = 0.0;
    for (std::size_t k = 0; k < run.leader_rounds.size(); ++k) match += run.leader_rounds[k] == run.follower_rounds[k];
    match /= static_cast<double>(run.leader_rounds.size());
    EXPECT_GE(match, prev) << "theta index " << i;
    prev = match;
  }
}

TEST(Follower, ThetaScheduleInterpolates) {
  FollowerParams p;
  p.theta_schedule = {{1.0, 0.0}, {3.0, 2.0}};
  EXPECT_DOUBLE_EQ(p.theta_at(0.0), 0.0);
  EXPECT_DOUBLE_EQ(p.theta_at(2.0), 1.0);
  EXPECT_DOUBLE_EQ(p.theta_at(2.5), 1.5);
  EXPECT_DOUBLE_EQ(p.theta_at(10.0), 2.0);
}

TEST(Follower, ThetaSweepModulatesOccupation) {
  // Sweeping theta from 0 to pi raises the match fraction over time.
  auto p = presets::follower(presets::FollowQuality::good);
  p.noise_sigma = 0.0;
  p.theta_schedule = {{0.0, 0.0}, {20.0, std::numbers::pi}};
  const auto run = simulate_follower_run(p, 20.0, 3);
  auto match_between = [&](std::size_t a, std::size_t b) {
    double m = 0.0;
    for (std::size_t k = a; k < b; ++k) m += run.leader_rounds[k] == run.follower_rounds[k];
    return m / static_cast<double>(b - a);
  };
  EXPECT_LT(match_between(0, 4000), match_between(16000, 20000));
}

TEST(Follower, InvalidParamsThrow) {
  FollowerParams p;
  p.theta = 2.0 * std::numbers::pi;
  EXPECT_THROW(simulate_follower(p, 1, 0), ParameterError);
  p = {};
  p.round_rate_hz = p.leader.sample_rate_hz * 2;
  EXPECT_THROW(simulate_follower(p, 1, 0), ParameterError);
  p = {};
  p.theta_schedule = {{2.0, 0.0}, {1.0, 0.0}};
  EXPECT_THROW(simulate_follower(p, 1, 0), ParameterError);
}

TEST(Drift, ConstantWithoutWanderOrJumps) {
  DriftParams p;
  p.wander_sigma_per_sqrt_s = 0.0;
  p.jump_mean_interval_s = 1e12;
  p.initial_value = 0.3;
  const auto d = simulate_drift(p, 600.0, 4);
  for (double v : d.values) ASSERT_EQ(v, 0.3);
}

TEST(Drift, JumpCountMeanOverSeeds) {
  const auto p = presets::offset_charge();
  double total = 0.0;
  const int seeds = 50;
  for (int s = 0; s < seeds; ++s) total += static_cast<double>(simulate_drift_run(p, 3600.0, s).jump_times_s.size());
  // Mean of 50 Poisson(30) counts: standard error ~0.77.
  EXPECT_NEAR(total / seeds, 30.0, 2.5);
}

TEST(Drift, ValuesAlwaysInUnitInterval) {
  DriftParams p;
  p.wander_sigma_per_sqrt_s = 0.5;
  p.jump_mean_interval_s = 5.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto d = simulate_drift(p, 300.0, seed);
    for (double v : d.values) {
      ASSERT_GE(v, 0.0);
      ASSERT_LT(v, 1.0);
    }
  }
}

TEST(Drift, InvalidParamsThrow) {
  DriftParams p;
  p.jump_mean_interval_s = 0.0;
  EXPECT_THROW(simulate_drift(p, 1, 0), ParameterError);
  p = {};
  p.initial_value = 1.0;
  EXPECT_THROW(simulate_drift(p, 1, 0), ParameterError);
}
