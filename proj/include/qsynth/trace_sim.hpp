#pragma once

// Synthetic measurement records: two-state telegraph readout, joint
// qubit/charge-parity readout, leader/follower feedback, and offset-charge
// drift.
//
// Markov chains are simulated with exact exponential holding times and then
// read off on the sample grid: sample n reports the state at t = n / rate.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "qsynth/error.hpp"
#include "qsynth/rng.hpp"
#include "qsynth/trace.hpp"

namespace qsynth::sim {

inline constexpr double kMinSampleRate = 1e3;
inline constexpr double kMaxSampleRate = 1e6;
inline constexpr std::size_t kMaxSamples = std::size_t{1} << 31;

struct TwoStateParams {
  double rate_up = 6.3829787234042552;  // ground -> excited, 1/s
  double rate_down = 100.0;             // excited -> ground, 1/s
  double level_ground = -1.0;
  double level_excited = 1.0;
  double noise_sigma = 0.1;
  double sample_rate_hz = 10'000.0;
  int initial_state = 0;

  void validate() const;
};

/// Joint qubit/parity readout. levels are indexed by four_state_index().
struct FourStateParams {
  double rate_up = 6.3829787234042552;
  double rate_down = 100.0;
  double parity_rate = 250.0;  // symmetric even <-> odd, 1/s
  std::array<double, 4> levels{-1.0, -1.0 / 3.0, 1.0 / 3.0, 1.0};
  double noise_sigma = 0.05;
  double sample_rate_hz = 10'000.0;
  int initial_qubit = 0;
  int initial_parity = 0;

  void validate() const;
};

constexpr int four_state_index(int qubit, int parity) noexcept { return 2 * qubit + parity; }
constexpr int qubit_of(int four_state_label) noexcept { return four_state_label >> 1; }
constexpr int parity_of(int four_state_label) noexcept { return four_state_label & 1; }

/// One point of a piecewise-linear theta schedule.
struct ThetaBreakpoint {
  double time_s = 0.0;
  double theta = 0.0;
};

struct FollowerParams {
  TwoStateParams leader{.rate_up = 50.0, .rate_down = 50.0};
  double theta = std::numbers::pi;
  std::vector<ThetaBreakpoint> theta_schedule;  // overrides theta when non-empty
  std::size_t feedback_latency_rounds = 0;
  double round_rate_hz = 1'000.0;
  double noise_sigma = 0.05;  // applied to both channels

  void validate() const;
  double theta_at(double t) const;
};

struct DriftParams {
  double jump_mean_interval_s = 120.0;
  double wander_sigma_per_sqrt_s = 0.002;
  double sample_rate_hz = 10.0;
  std::optional<double> initial_value;  // uniform draw when absent

  void validate() const;
};

struct StationaryDistribution {
  double p_ground = 0.0;
  double p_excited = 0.0;
};

/// Analytic stationary distribution of the two-state chain.
inline StationaryDistribution stationary_distribution(double rate_up, double rate_down) {
  if (!(rate_up >= 0.0) || !(rate_down >= 0.0))
    throw ParameterError("transition rates must be >= 0");
  const double total = rate_up + rate_down;
  if (total == 0.0) throw ParameterError("degenerate chain: both rates are 0");
  return {rate_down / total, rate_up / total};
}

/// A chain transition at continuous time `time_s` into state `to`.
struct Transition {
  double time_s = 0.0;
  int to = 0;
};

struct TwoStateRun {
  MeasurementTrace trace;
  std::vector<int> states;        // true state per sample
  std::vector<Transition> events;  // every chain event up to the last sample
};

struct FourStateRun {
  MeasurementTrace trace;
  std::vector<int> labels;  // four_state_index per sample
  std::vector<Transition> qubit_events;
  std::vector<Transition> parity_events;
};

struct FollowerRun {
  MeasurementTrace trace;  // channel 0 leader, channel 1 follower
  std::vector<int> leader_rounds;
  std::vector<int> follower_rounds;  // after feedback
  std::vector<int> round_of_sample;
};

struct DriftRun {
  DriftTrace trace;
  std::vector<double> jump_times_s;
};

namespace detail {

inline void check_rate(double rate, const char* what) {
  if (!(rate >= kMinSampleRate && rate <= kMaxSampleRate))
    throw ParameterError(std::string(what) + " must be in [1e3, 1e6] Hz");
}

inline void check_nonneg(double v, const char* what) {
  if (!(v >= 0.0) || !std::isfinite(v)) throw ParameterError(std::string(what) + " must be finite and >= 0");
}

inline std::size_t sample_count(double duration_s, double rate) {
  if (!(duration_s > 0.0)) throw ParameterError("duration must be > 0");
  const double count = duration_s * rate;
  if (!std::isfinite(count) || count > static_cast<double>(kMaxSamples))
    throw CapacityError("duration * sample rate exceeds " + std::to_string(kMaxSamples) + " samples");
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(count)));
}

/// Two-state continuous-time chain advanced lazily in time.
class TelegraphChain {
 public:
  TelegraphChain(double rate_01, double rate_10, int initial, rng::Xoshiro256 stream)
      : rates_{rate_01, rate_10}, state_(initial), stream_(stream) {
    schedule();
  }

  /// State at time t; t must not decrease between calls.
  int advance_to(double t, std::vector<Transition>* log) {
    while (next_event_ <= t) {
      now_ = next_event_;
      state_ ^= 1;
      if (log) log->push_back({now_, state_});
      schedule();
    }
    return state_;
  }

  int state() const noexcept { return state_; }

 private:
  void schedule() {
    const double r = rates_[state_];
    next_event_ = r > 0.0 ? now_ + stream_.exponential(r) : std::numeric_limits<double>::infinity();
  }

  std::array<double, 2> rates_;
  int state_;
  double now_ = 0.0;
  double next_event_ = 0.0;
  rng::Xoshiro256 stream_;
};

class ReadoutNoise {
 public:
  ReadoutNoise(double sigma, std::uint64_t seed, std::uint64_t channel)
      : sigma_(sigma), stream_(seed, channel, rng::Purpose::readout_noise) {}

  double operator()(double level) { return sigma_ > 0.0 ? level + sigma_ * stream_.normal() : level; }

 private:
  double sigma_;
  rng::Xoshiro256 stream_;
};

inline double wrap_unit(double v) {
  double w = v - std::floor(v);
  if (w >= 1.0 || w < 0.0) w = 0.0;  // -tiny rounds up to 1.0
  return w;
}

}  // namespace detail

inline void TwoStateParams::validate() const {
  detail::check_nonneg(rate_up, "rate_up");
  detail::check_nonneg(rate_down, "rate_down");
  if (rate_up == 0.0 && rate_down == 0.0) throw ParameterError("rate_up and rate_down are both 0");
  if (!std::isfinite(level_ground) || !std::isfinite(level_excited))
    throw ParameterError("levels must be finite");
  if (level_ground == level_excited) throw ParameterError("level_ground must differ from level_excited");
  detail::check_nonneg(noise_sigma, "noise_sigma");
  detail::check_rate(sample_rate_hz, "sample_rate_hz");
  if (initial_state != 0 && initial_state != 1) throw ParameterError("initial_state must be 0 or 1");
}

inline void FourStateParams::validate() const {
  detail::check_nonneg(rate_up, "rate_up");
  detail::check_nonneg(rate_down, "rate_down");
  detail::check_nonneg(parity_rate, "parity_rate");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (!std::isfinite(levels[i])) throw ParameterError("levels must be finite");
    for (std::size_t j = 0; j < i; ++j)
      if (levels[i] == levels[j]) throw ParameterError("four-state levels must be pairwise distinct");
  }
  detail::check_nonneg(noise_sigma, "noise_sigma");
  detail::check_rate(sample_rate_hz, "sample_rate_hz");
  if (initial_qubit != 0 && initial_qubit != 1) throw ParameterError("initial_qubit must be 0 or 1");
  if (initial_parity != 0 && initial_parity != 1) throw ParameterError("initial_parity must be 0 or 1");
}

inline void FollowerParams::validate() const {
  leader.validate();
  if (!(theta >= 0.0 && theta < 2.0 * std::numbers::pi)) throw ParameterError("theta must be in [0, 2pi)");
  if (!(round_rate_hz > 0.0) || round_rate_hz > leader.sample_rate_hz)
    throw ParameterError("round_rate_hz must be in (0, leader.sample_rate_hz]");
  detail::check_nonneg(noise_sigma, "noise_sigma");
  for (std::size_t i = 0; i < theta_schedule.size(); ++i) {
    const auto& bp = theta_schedule[i];
    if (!std::isfinite(bp.time_s) || !std::isfinite(bp.theta))
      throw ParameterError("theta_schedule entries must be finite");
    if (i > 0 && bp.time_s < theta_schedule[i - 1].time_s)
      throw ParameterError("theta_schedule times must be nondecreasing");
  }
}

inline double FollowerParams::theta_at(double t) const {
  if (theta_schedule.empty()) return theta;
  if (t <= theta_schedule.front().time_s) return theta_schedule.front().theta;
  if (t >= theta_schedule.back().time_s) return theta_schedule.back().theta;
  const auto hi = std::upper_bound(theta_schedule.begin(), theta_schedule.end(), t,
                                   [](double x, const ThetaBreakpoint& bp) { return x < bp.time_s; });
  const auto lo = hi - 1;
  const double span = hi->time_s - lo->time_s;
  const double frac = span > 0.0 ? (t - lo->time_s) / span : 1.0;
  return lo->theta + frac * (hi->theta - lo->theta);
}

inline void DriftParams::validate() const {
  if (!(jump_mean_interval_s > 0.0)) throw ParameterError("jump_mean_interval_s must be > 0");
  detail::check_nonneg(wander_sigma_per_sqrt_s, "wander_sigma_per_sqrt_s");
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz))
    throw ParameterError("sample_rate_hz must be > 0");
  if (initial_value && !(*initial_value >= 0.0 && *initial_value < 1.0))
    throw ParameterError("initial_value must be in [0, 1)");
}

inline TwoStateRun simulate_two_state_run(const TwoStateParams& params, double duration_s,
                                          std::uint64_t seed) {
  params.validate();
  const std::size_t n = detail::sample_count(duration_s, params.sample_rate_hz);

  TwoStateRun run;
  detail::TelegraphChain chain(params.rate_up, params.rate_down, params.initial_state,
                               rng::Xoshiro256(seed, 0, rng::Purpose::qubit_chain));
  detail::ReadoutNoise noise(params.noise_sigma, seed, 0);
  const std::array<double, 2> levels{params.level_ground, params.level_excited};

  std::vector<double> out(n);
  run.states.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / params.sample_rate_hz;
    const int s = chain.advance_to(t, &run.events);
    run.states[i] = s;
    out[i] = noise(levels[s]);
  }
  run.trace = MeasurementTrace::mono(params.sample_rate_hz, std::move(out), seed);
  return run;
}

inline MeasurementTrace simulate_two_state(const TwoStateParams& params, double duration_s, std::uint64_t seed) {
  return simulate_two_state_run(params, duration_s, seed).trace;
}

/// Independent qubit and parity chains; the qubit chain and readout noise use
/// the same substreams as simulate_two_state.
inline FourStateRun simulate_four_state_run(const FourStateParams& params, double duration_s,
                                            std::uint64_t seed) {
  params.validate();
  const std::size_t n = detail::sample_count(duration_s, params.sample_rate_hz);

  FourStateRun run;
  detail::TelegraphChain qubit(params.rate_up, params.rate_down, params.initial_qubit,
                               rng::Xoshiro256(seed, 0, rng::Purpose::qubit_chain));
  detail::TelegraphChain parity(params.parity_rate, params.parity_rate, params.initial_parity,
                                rng::Xoshiro256(seed, 0, rng::Purpose::parity_chain));
  detail::ReadoutNoise noise(params.noise_sigma, seed, 0);

  std::vector<double> out(n);
  run.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / params.sample_rate_hz;
    const int q = qubit.advance_to(t, &run.qubit_events);
    const int p = parity.advance_to(t, &run.parity_events);
    const int label = four_state_index(q, p);
    run.labels[i] = label;
    out[i] = noise(params.levels[static_cast<std::size_t>(label)]);
  }
  run.trace = MeasurementTrace::mono(params.sample_rate_hz, std::move(out), seed);
  return run;
}

inline MeasurementTrace simulate_four_state(const FourStateParams& params, double duration_s, std::uint64_t seed) {
  return simulate_four_state_run(params, duration_s, seed).trace;
}

/// Leader/follower feedback. Each round k (at t = k / round_rate_hz) reads the
/// leader projectively; if the follower disagrees with the leader's reading
/// from feedback_latency_rounds earlier, an X(theta) flips it with probability
/// sin^2(theta / 2). Both records hold their round value until the next round.
inline FollowerRun simulate_follower_run(const FollowerParams& params, double duration_s, std::uint64_t seed) {
  params.validate();
  const double rate = params.leader.sample_rate_hz;
  const std::size_t n = detail::sample_count(duration_s, rate);

  FollowerRun run;
  detail::TelegraphChain leader(params.leader.rate_up, params.leader.rate_down, params.leader.initial_state,
                                rng::Xoshiro256(seed, 0, rng::Purpose::qubit_chain));
  rng::Xoshiro256 feedback(seed, 1, rng::Purpose::feedback);
  detail::ReadoutNoise noise_leader(params.noise_sigma, seed, 0);
  detail::ReadoutNoise noise_follower(params.noise_sigma, seed, 1);
  const std::array<double, 2> levels{params.leader.level_ground, params.leader.level_excited};

  int follower = 0;
  auto run_round = [&](std::size_t k) {
    const double t = static_cast<double>(k) / params.round_rate_hz;
    const int lead = leader.advance_to(t, nullptr);
    run.leader_rounds.push_back(lead);
    const double u = feedback.uniform();  // drawn every round so streams stay aligned
    if (k >= params.feedback_latency_rounds) {
      const int reference = run.leader_rounds[k - params.feedback_latency_rounds];
      if (follower != reference) {
        const double half = 0.5 * params.theta_at(t);
        const double flip = std::sin(half) * std::sin(half);
        if (u < flip) follower ^= 1;
      }
    }
    run.follower_rounds.push_back(follower);
  };

  std::vector<double> lead_out(n);
  std::vector<double> follow_out(n);
  run.round_of_sample.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(std::floor(static_cast<double>(i) * params.round_rate_hz / rate));
    while (run.leader_rounds.size() <= k) run_round(run.leader_rounds.size());
    run.round_of_sample[i] = static_cast<int>(k);
    lead_out[i] = noise_leader(levels[run.leader_rounds[k]]);
    follow_out[i] = noise_follower(levels[run.follower_rounds[k]]);
  }

  run.trace.sample_rate_hz = rate;
  run.trace.seed = seed;
  run.trace.samples = {std::move(lead_out), std::move(follow_out)};
  return run;
}

inline MeasurementTrace simulate_follower(const FollowerParams& params, double duration_s, std::uint64_t seed) {
  return simulate_follower_run(params, duration_s, seed).trace;
}

/// Offset-charge drift: Gaussian wander between Poisson-timed jumps to fresh
/// uniform values, wrapped into [0, 1).
inline DriftRun simulate_drift_run(const DriftParams& params, double duration_s, std::uint64_t seed) {
  params.validate();
  const std::size_t n = detail::sample_count(duration_s, params.sample_rate_hz);

  DriftRun run;
  rng::Xoshiro256 jumps(seed, 0, rng::Purpose::drift_jumps);
  rng::Xoshiro256 values(seed, 0, rng::Purpose::drift_values);
  rng::Xoshiro256 wander(seed, 0, rng::Purpose::drift_wander);
  const double jump_rate = 1.0 / params.jump_mean_interval_s;
  const double sigma = params.wander_sigma_per_sqrt_s;

  double value = params.initial_value ? *params.initial_value : values.uniform();
  double next_jump = jumps.exponential(jump_rate);
  double prev_t = 0.0;

  run.trace.sample_rate_hz = params.sample_rate_hz;
  run.trace.values.resize(n);
  run.trace.values[0] = value;
  for (std::size_t i = 1; i < n; ++i) {
    const double t = static_cast<double>(i) / params.sample_rate_hz;
    double wander_from = prev_t;
    while (next_jump <= t) {
      run.jump_times_s.push_back(next_jump);
      value = values.uniform();
      wander_from = next_jump;
      next_jump += jumps.exponential(jump_rate);
    }
    if (sigma > 0.0) value += sigma * std::sqrt(t - wander_from) * wander.normal();
    value = detail::wrap_unit(value);
    run.trace.values[i] = value;
    prev_t = t;
  }
  return run;
}

inline DriftTrace simulate_drift(const DriftParams& params, double duration_s, std::uint64_t seed) {
  return simulate_drift_run(params, duration_s, seed).trace;
}

}  // namespace qsynth::sim
