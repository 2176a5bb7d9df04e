#pragma once

// Conditioning of measurement traces into audio-rate control signals:
// centering/scaling, resampling, latching state assignment, residual noise
// extraction and one-pole smoothing.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "qsynth/error.hpp"
#include "qsynth/trace.hpp"

namespace qsynth::cond {

/// y = (x - center) / half_span.
struct AffineMap {
  double center = 0.0;
  double half_span = 1.0;

  double operator()(double x) const noexcept { return (x - center) / half_span; }
};

/// Midrange-centering map that sends [min, max] onto [-1, +1].
inline AffineMap fit_center_scale(std::span<const double> x) {
  if (x.empty()) throw EmptyInputError("cannot scale an empty channel");
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (!(*hi > *lo)) throw DegenerateSignalError("constant channel has no defined scale");
  return {(*hi + *lo) / 2.0, (*hi - *lo) / 2.0};
}

/// Applies `map`, pinning the fitted extremes exactly to -1 and +1.
inline std::vector<double> apply_center_scale(std::span<const double> x, const AffineMap& map) {
  const double lo = map.center - map.half_span;
  const double hi = map.center + map.half_span;
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == hi)
      y[i] = 1.0;
    else if (x[i] == lo)
      y[i] = -1.0;
    else
      y[i] = std::clamp(map(x[i]), -1.0, 1.0);
  }
  return y;
}

/// Per channel: midrange to 0, peak-to-peak span to 2.
inline MeasurementTrace center_and_scale(const MeasurementTrace& trace) {
  trace.validate();
  MeasurementTrace out = trace;
  for (auto& ch : out.samples) ch = apply_center_scale(ch, fit_center_scale(ch));
  return out;
}

enum class ResampleMethod { hold, linear };

inline constexpr double kMinAudioRate = 1e3;
inline constexpr double kMaxAudioRate = 192e3;

/// Number of output samples covering the input duration.
inline std::size_t resampled_length(std::size_t n_in, double source_rate, double target_rate) {
  const double exact = static_cast<double>(n_in) * target_rate / source_rate;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(exact - 1e-9)));
}

/// Resamples one channel to `n_out` samples. Beyond the last input sample the
/// final value is held.
inline std::vector<double> resample_channel(std::span<const double> x, double source_rate, double target_rate,
                                            std::size_t n_out, ResampleMethod method) {
  if (x.empty()) throw EmptyInputError("cannot resample an empty channel");
  std::vector<double> y(n_out);
  const std::size_t last = x.size() - 1;
  for (std::size_t m = 0; m < n_out; ++m) {
    const double pos = static_cast<double>(m) * source_rate / target_rate;
    const auto i = static_cast<std::size_t>(pos);
    if (i >= last) {
      y[m] = x[last];
    } else if (method == ResampleMethod::hold) {
      y[m] = x[i];
    } else {
      const double frac = pos - static_cast<double>(i);
      y[m] = x[i] + frac * (x[i + 1] - x[i]);
    }
  }
  return y;
}

inline MeasurementTrace resample(const MeasurementTrace& trace, double target_rate_hz,
                                 ResampleMethod method = ResampleMethod::hold) {
  if (trace.samples.empty() || trace.length() == 0) throw EmptyInputError("cannot resample an empty trace");
  trace.validate();
  if (!(target_rate_hz >= kMinAudioRate && target_rate_hz <= kMaxAudioRate))
    throw ParameterError("target rate must be in [1e3, 192e3] Hz");
  if (!(trace.sample_rate_hz > 0.0)) throw ParameterError("source rate must be > 0");

  MeasurementTrace out;
  out.sample_rate_hz = target_rate_hz;
  out.seed = trace.seed;
  const std::size_t n_out = resampled_length(trace.length(), trace.sample_rate_hz, target_rate_hz);
  for (const auto& ch : trace.samples)
    out.samples.push_back(resample_channel(ch, trace.sample_rate_hz, target_rate_hz, n_out, method));
  return out;
}

/// Nominal levels in state-index order plus a latching margin, both in
/// normalized amplitude units.
struct LatchConfig {
  std::vector<double> levels;
  double hysteresis = 0.0;

  double min_gap() const {
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < levels.size(); ++i)
      for (std::size_t j = 0; j < i; ++j) gap = std::min(gap, std::abs(levels[i] - levels[j]));
    return gap;
  }

  void validate() const {
    if (levels.size() != 2 && levels.size() != 4) throw ParameterError("latch needs 2 or 4 levels");
    for (double l : levels)
      if (!std::isfinite(l)) throw ParameterError("latch levels must be finite");
    const double gap = min_gap();
    if (!(gap > 0.0)) throw ParameterError("latch levels must be pairwise distinct");
    if (!(hysteresis >= 0.0) || !(hysteresis < gap / 2.0))
      throw ParameterError("hysteresis must be in [0, min level gap / 2)");
  }

  /// Levels evenly spaced over [-1, 1] with hysteresis at a quarter gap.
  static LatchConfig evenly_spaced(int n_states) {
    LatchConfig cfg;
    for (int k = 0; k < n_states; ++k)
      cfg.levels.push_back(-1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(n_states - 1));
    cfg.hysteresis = default_hysteresis(cfg.levels);
    return cfg;
  }

  static double default_hysteresis(const std::vector<double>& levels) {
    LatchConfig tmp{levels, 0.0};
    return 0.25 * tmp.min_gap();
  }
};

namespace detail {

inline int nearest_level(double x, const std::vector<double>& levels) {
  int best = 0;
  double best_d = std::abs(x - levels[0]);
  for (std::size_t k = 1; k < levels.size(); ++k) {
    const double d = std::abs(x - levels[k]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(k);
    }
  }
  return best;
}

}  // namespace detail

/// Latching state assignment on one channel. The label holds until the
/// nearest level k is closer than the held level by more than the hysteresis
/// margin; the first label is simply the nearest level.
inline StateTrace assign_states(std::span<const double> x, double rate, const LatchConfig& config) {
  config.validate();
  if (x.empty()) throw EmptyInputError("cannot assign states on an empty channel");
  const auto& lv = config.levels;
  std::vector<int> labels(x.size());
  int held = detail::nearest_level(x[0], lv);
  for (std::size_t n = 0; n < x.size(); ++n) {
    const int k = detail::nearest_level(x[n], lv);
    if (k != held && std::abs(x[n] - lv[k]) + config.hysteresis < std::abs(x[n] - lv[held])) held = k;
    labels[n] = held;
  }
  return StateTrace::from_labels(rate, static_cast<int>(lv.size()), std::move(labels));
}

inline StateTrace assign_states(const MeasurementTrace& trace, const LatchConfig& config) {
  trace.validate();
  if (trace.channels() != 1) throw ShapeError("assign_states expects a mono trace");
  return assign_states(trace.samples[0], trace.sample_rate_hz, config);
}

inline std::vector<double> extract_noise(std::span<const double> x, const StateTrace& states,
                                         const LatchConfig& config) {
  if (x.size() != states.length()) throw ShapeError("trace and state trace differ in length");
  std::vector<double> residual(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) {
    const int s = states.states[n];
    if (s < 0 || static_cast<std::size_t>(s) >= config.levels.size())
      throw ParameterError("state label out of range for latch levels");
    residual[n] = x[n] - config.levels[static_cast<std::size_t>(s)];
  }
  return residual;
}

/// residual[n] = x[n] - levels[state[n]].
inline MeasurementTrace extract_noise(const MeasurementTrace& trace, const StateTrace& states,
                                      const LatchConfig& config) {
  trace.validate();
  if (trace.channels() != 1) throw ShapeError("extract_noise expects a mono trace");
  if (trace.sample_rate_hz != states.sample_rate_hz) throw ShapeError("trace and state trace differ in rate");
  return MeasurementTrace::mono(trace.sample_rate_hz, extract_noise(trace.samples[0], states, config), trace.seed);
}

/// One-pole lowpass; the state starts at the first input sample.
class OnePole {
 public:
  static double coefficient(double time_constant_s, double rate) {
    if (time_constant_s <= 0.0) return 1.0;
    return 1.0 - std::exp(-1.0 / (time_constant_s * rate));
  }

  double step(double x, double alpha) noexcept {
    if (!primed_ || alpha >= 1.0) {
      y_ = x;
      primed_ = true;
      return y_;
    }
    y_ += alpha * (x - y_);
    return y_;
  }

  double value() const noexcept { return y_; }
  void reset() noexcept { primed_ = false; }

 private:
  double y_ = 0.0;
  bool primed_ = false;
};

inline std::vector<double> smooth_channel(std::span<const double> x, double time_constant_s, double rate) {
  if (!(time_constant_s >= 0.0)) throw ParameterError("time constant must be >= 0");
  if (time_constant_s == 0.0) return {x.begin(), x.end()};
  const double alpha = OnePole::coefficient(time_constant_s, rate);
  OnePole lp;
  std::vector<double> y(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) y[n] = lp.step(x[n], alpha);
  return y;
}

/// y[n] = y[n-1] + a (x[n] - y[n-1]), a = 1 - exp(-1 / (tau * rate)).
inline MeasurementTrace smooth(const MeasurementTrace& trace, double time_constant_s) {
  trace.validate();
  MeasurementTrace out = trace;
  for (auto& ch : out.samples) ch = smooth_channel(ch, time_constant_s, trace.sample_rate_hz);
  return out;
}

}  // namespace qsynth::cond
