#pragma once

// Sample-at-a-time synthesis units. The batch renderers and the live block
// renderer both drive these, so offline and live output share one code path.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <vector>

#include "qsynth/rng.hpp"
#include "qsynth/signal_cond.hpp"
#include "qsynth/synth/patch.hpp"

namespace qsynth::synth {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Naive (non-band-limited) waveform at cycle position p in [0, 1).
inline double waveform_value(Waveform w, double p, std::uint64_t noise_key, std::uint64_t counter) {
  switch (w) {
    case Waveform::sine: return std::sin(kTwoPi * p);
    case Waveform::saw: return 2.0 * p - 1.0;
    case Waveform::square: return p < 0.5 ? 1.0 : -1.0;
    case Waveform::noise: return rng::counter_uniform_pm1(noise_key, counter);
  }
  return 0.0;
}

/// Exponential pitch map f(q) = f_min * (f_max / f_min)^q.
inline double drift_frequency(const DriftVoice& v, double q) {
  return v.f_min_hz * std::pow(v.f_max_hz / v.f_min_hz, q);
}

/// Per-sample multiplier giving -60 dB after decay_s.
inline double decay_multiplier(double decay_s, double rate) {
  return decay_s > 0.0 ? std::pow(10.0, -3.0 / (decay_s * rate)) : 0.0;
}

/// Envelope floor below which a tail is considered finished (-120 dB).
inline constexpr double kSilenceFloor = 1e-6;

/// A free-running oscillator with an attack/decay envelope gated by whether
/// its state is occupied. Attack ramps linearly from the current level to 1
/// over attack_s; while the state is held the envelope stays at 1; after the
/// state is vacated it decays exponentially (the decay tail).
class Voice {
 public:
  explicit Voice(std::uint64_t noise_key = 0) : noise_key_(noise_key) {}

  double step(const VoiceConfig& cfg, bool active, double mod_source, double rate) {
    if (active) {
      env_ = cfg.attack_s > 0.0 ? std::min(1.0, env_ + 1.0 / (cfg.attack_s * rate)) : 1.0;
    } else if (env_ > 0.0) {
      env_ *= decay_multiplier(cfg.decay_s, rate);
      if (env_ < kSilenceFloor) env_ = 0.0;
    }
    active_ = active;

    double out = 0.0;
    if (env_ > 0.0 && cfg.amp > 0.0 && cfg.freq_hz > 0.0) {
      double p = phase_ + cfg.mod_index * cfg.mod_amp * mod_source / kTwoPi;
      p -= std::floor(p);
      out = cfg.amp * env_ * waveform_value(cfg.waveform, p, noise_key_, counter_);
    }
    phase_ += cfg.freq_hz / rate;
    phase_ -= std::floor(phase_);
    ++counter_;
    return out;
  }

  bool active() const noexcept { return active_; }
  bool sounding() const noexcept { return env_ > 0.0; }
  double envelope() const noexcept { return env_; }

 private:
  double phase_ = 0.0;  // cycles in [0, 1)
  double env_ = 0.0;
  bool active_ = false;
  std::uint64_t noise_key_;
  std::uint64_t counter_ = 0;
};

/// One voice per state; the voice matching the current label is active.
class StateSynth {
 public:
  StateSynth(std::size_t n_voices, std::uint64_t seed) {
    voices_.reserve(n_voices);
    for (std::size_t i = 0; i < n_voices; ++i)
      voices_.emplace_back(rng::substream_key(seed, i, rng::Purpose::voice_noise));
  }

  double step(const std::vector<VoiceConfig>& cfgs, int label, double mod_source, double rate) {
    double sum = 0.0;
    for (std::size_t i = 0; i < voices_.size(); ++i)
      sum += voices_[i].step(cfgs[i], static_cast<int>(i) == label, mod_source, rate);
    return sum;
  }

  const std::vector<Voice>& voices() const noexcept { return voices_; }

 private:
  std::vector<Voice> voices_;
};

/// Monophonic glide oscillator for one follower channel: pitch and level
/// follow the current state's voice through a one-pole smoother.
class GlideVoice {
 public:
  explicit GlideVoice(std::uint64_t noise_key = 0) : noise_key_(noise_key) {}

  double step(const std::vector<VoiceConfig>& cfgs, int label, double mod_source, double alpha, double rate) {
    const auto& cfg = cfgs[static_cast<std::size_t>(label)];
    freq_ = freq_lp_.step(cfg.freq_hz, alpha);
    const double amp = amp_lp_.step(cfg.amp, alpha);
    double out = 0.0;
    if (freq_ > 0.0 && amp > 0.0) {
      double p = phase_ + cfg.mod_index * cfg.mod_amp * mod_source / kTwoPi;
      p -= std::floor(p);
      out = amp * waveform_value(cfg.waveform, p, noise_key_, counter_);
    }
    phase_ += freq_ / rate;
    phase_ -= std::floor(phase_);
    ++counter_;
    return out;
  }

  double frequency() const noexcept { return freq_; }

 private:
  cond::OnePole freq_lp_;
  cond::OnePole amp_lp_;
  double freq_ = 0.0;
  double phase_ = 0.0;
  std::uint64_t noise_key_;
  std::uint64_t counter_ = 0;
};

/// Phase-continuous sine drone driven by the drift CV.
class DriftDrone {
 public:
  double step(const DriftVoice& v, double q, double rate) {
    const double out = v.amp * std::sin(kTwoPi * phase_);
    phase_ += drift_frequency(v, q) / rate;
    phase_ -= std::floor(phase_);
    return out;
  }

 private:
  double phase_ = 0.0;
};

/// State-triggered decaying sine pings, optionally gating the input by
/// occupancy of the trigger state.
class PingGate {
 public:
  /// Returns the processed sample. `label` is the primary (qubit) label,
  /// `secondary` selects the ping pitch.
  double step(const GateConfig& g, int label, int secondary, double input, double rate) {
    const bool in_trigger = label == g.trigger_state;
    if (in_trigger && !was_in_trigger_) {
      if (secondary < 0 || static_cast<std::size_t>(secondary) >= g.pitches_hz.size())
        throw ParameterError("secondary label out of range for gate pitches");
      freq_ = g.pitches_hz[static_cast<std::size_t>(secondary)];
      phase_ = 0.0;
      env_ = 1.0;
      ++pings_;
    }
    was_in_trigger_ = in_trigger;

    double out = g.volume_gate && !in_trigger ? 0.0 : input;
    if (env_ > 0.0) {
      out += g.amp * env_ * std::sin(kTwoPi * phase_);
      phase_ += freq_ / rate;
      phase_ -= std::floor(phase_);
      env_ *= decay_multiplier(g.decay_s, rate);
      if (env_ < kSilenceFloor) env_ = 0.0;
    }
    return out;
  }

  std::size_t ping_count() const noexcept { return pings_; }

 private:
  bool was_in_trigger_ = false;
  double freq_ = 0.0;
  double phase_ = 0.0;
  double env_ = 0.0;
  std::size_t pings_ = 0;
};

}  // namespace qsynth::synth
