#pragma once

// Batch renderers for the state-driven engines, the drift drone, the ping
// gate and the wet/dry mixer.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qsynth/audio.hpp"
#include "qsynth/error.hpp"
#include "qsynth/signal_cond.hpp"
#include "qsynth/synth/patch.hpp"
#include "qsynth/synth/voice.hpp"
#include "qsynth/trace.hpp"

namespace qsynth::synth {

namespace detail {

inline void check_aligned(const StateTrace& states, const MeasurementTrace& noise, double rate_hz) {
  if (noise.channels() != 1) throw ShapeError("noise must be mono");
  if (states.length() != noise.length()) throw ShapeError("state trace and noise differ in length");
  if (states.sample_rate_hz != rate_hz || noise.sample_rate_hz != rate_hz)
    throw ShapeError("state trace, noise and output rate must match");
}

}  // namespace detail

/// Renders the voice bound to `state_id`:
/// y[n] = amp * env[n] * wave(phi[n] + mod_index * mod_amp * noise[n]).
inline AudioBuffer render_voice(const StateTrace& states, const MeasurementTrace& noise, int state_id,
                                const VoiceConfig& cfg, double rate_hz, std::uint64_t seed = 0) {
  detail::check_aligned(states, noise, rate_hz);
  AudioBuffer out(rate_hz, 1, states.length());
  Voice voice(rng::substream_key(seed, static_cast<std::uint64_t>(state_id), rng::Purpose::voice_noise));
  const auto& mod = noise.samples[0];
  for (std::size_t n = 0; n < states.length(); ++n)
    out.samples[0][n] = voice.step(cfg, states.states[n] == state_id, mod[n], rate_hz);
  return out;
}

/// gain * sum of all state voices (no mixing with the raw signal).
inline AudioBuffer synthesize_states(const StateTrace& states, const MeasurementTrace& noise,
                                     const SynthPatch& patch, std::uint64_t seed = 0) {
  if (patch.voices.size() != static_cast<std::size_t>(states.n_states))
    throw ParameterError("patch has " + std::to_string(patch.voices.size()) + " voices for a " +
                         std::to_string(states.n_states) + "-state trace");
  detail::check_aligned(states, noise, states.sample_rate_hz);
  const double rate = states.sample_rate_hz;
  AudioBuffer out(rate, 1, states.length());
  StateSynth synth(patch.voices.size(), seed);
  const auto& mod = noise.samples[0];
  for (std::size_t n = 0; n < states.length(); ++n)
    out.samples[0][n] = patch.gain * synth.step(patch.voices, states.states[n], mod[n], rate);
  return out;
}

/// out = (1 - wet) raw + wet synth; wet 0 and 1 return the inputs verbatim.
inline AudioBuffer mix_wet_dry(const AudioBuffer& raw, const AudioBuffer& synth, double wet) {
  if (!raw.same_shape(synth)) throw ShapeError("raw and synth buffers differ in shape");
  if (!(wet >= 0.0 && wet <= 1.0)) throw ParameterError("wet must be in [0, 1]");
  if (wet == 0.0) return raw;
  if (wet == 1.0) return synth;
  AudioBuffer out(raw.sample_rate_hz, raw.channels(), raw.frames());
  for (std::size_t c = 0; c < raw.channels(); ++c)
    for (std::size_t n = 0; n < raw.frames(); ++n)
      out.samples[c][n] = (1.0 - wet) * raw.samples[c][n] + wet * synth.samples[c][n];
  return out;
}

inline double mix_sample(double raw, double synth, double wet) noexcept {
  if (wet == 0.0) return raw;
  if (wet == 1.0) return synth;
  return (1.0 - wet) * raw + wet * synth;
}

/// Voices, gain, then wet/dry mix against the centered raw sonification.
inline AudioBuffer render_state_synth(const StateTrace& states, const MeasurementTrace& noise,
                                      const AudioBuffer& raw, const SynthPatch& patch, std::uint64_t seed = 0) {
  return mix_wet_dry(raw, synthesize_states(states, noise, patch, seed), patch.wet_dry);
}

/// Frequency the follower glide oscillator plays at each sample.
inline std::vector<double> follower_pitch_track(const StateTrace& states, const SynthPatch& patch) {
  const double alpha = cond::OnePole::coefficient(patch.smoothing_s, states.sample_rate_hz);
  cond::OnePole lp;
  std::vector<double> track(states.length());
  for (std::size_t n = 0; n < states.length(); ++n)
    track[n] = lp.step(patch.voices.at(static_cast<std::size_t>(states.states[n])).freq_hz, alpha);
  return track;
}

/// Stereo leader/follower rendering. Each channel of the normalized,
/// audio-rate input is latched, its residual extracted and smoothed, and fed
/// to a glide oscillator; the result is gained and mixed against that channel.
inline AudioBuffer render_follower(const MeasurementTrace& trace2ch, const SynthPatch& patch,
                                   const cond::LatchConfig& latch, std::uint64_t seed = 0) {
  trace2ch.validate();
  if (trace2ch.channels() != 2) throw ShapeError("follower rendering needs a 2-channel trace");
  if (patch.voices.size() != latch.levels.size())
    throw ParameterError("follower patch voice count must match latch levels");
  const double rate = trace2ch.sample_rate_hz;
  const double alpha = cond::OnePole::coefficient(patch.smoothing_s, rate);
  AudioBuffer raw(rate, 2, trace2ch.length());
  AudioBuffer synth(rate, 2, trace2ch.length());
  for (std::size_t c = 0; c < 2; ++c) {
    const auto& x = trace2ch.samples[c];
    raw.samples[c] = x;
    const auto states = cond::assign_states(x, rate, latch);
    const auto noise = cond::smooth_channel(cond::extract_noise(x, states, latch), patch.smoothing_s, rate);
    GlideVoice voice(rng::substream_key(seed, c, rng::Purpose::voice_noise));
    for (std::size_t n = 0; n < x.size(); ++n)
      synth.samples[c][n] = patch.gain * voice.step(patch.voices, states.states[n], noise[n], alpha, rate);
  }
  return mix_wet_dry(raw, synth, patch.wet_dry);
}

/// Drone at f(q) = f_min (f_max/f_min)^q, q linearly resampled to rate_hz and
/// held after the end of the drift record.
inline AudioBuffer render_drift(const DriftTrace& drift, const DriftVoice& voice, double rate_hz, double duration_s) {
  if (drift.values.empty()) throw EmptyInputError("drift trace is empty");
  if (!(voice.f_min_hz > 0.0) || !(voice.f_max_hz > voice.f_min_hz) || !std::isfinite(voice.f_max_hz))
    throw ParameterError("drift voice needs 0 < f_min < f_max");
  if (!(duration_s > 0.0) || !(rate_hz > 0.0)) throw ParameterError("duration and rate must be > 0");
  const auto frames = static_cast<std::size_t>(std::llround(duration_s * rate_hz));
  const auto q = cond::resample_channel(drift.values, drift.sample_rate_hz, rate_hz, frames,
                                        cond::ResampleMethod::linear);
  AudioBuffer out(rate_hz, 1, frames);
  DriftDrone drone;
  for (std::size_t n = 0; n < frames; ++n) out.samples[0][n] = drone.step(voice, q[n], rate_hz);
  return out;
}

struct GateOnset {
  std::size_t index = 0;
  double pitch_hz = 0.0;
};

/// Samples where the trace enters the trigger state (including sample 0 when
/// it starts there).
inline std::vector<GateOnset> gate_onsets(const StateTrace& states, const GateConfig& gate,
                                          std::span<const int> secondary = {}) {
  std::vector<GateOnset> onsets;
  bool was = false;
  for (std::size_t n = 0; n < states.length(); ++n) {
    const bool in = states.states[n] == gate.trigger_state;
    if (in && !was) {
      const int sec = secondary.empty() ? 0 : secondary[n];
      if (sec < 0 || static_cast<std::size_t>(sec) >= gate.pitches_hz.size())
        throw ParameterError("secondary label out of range for gate pitches");
      onsets.push_back({n, gate.pitches_hz[static_cast<std::size_t>(sec)]});
    }
    was = in;
  }
  return onsets;
}

/// Sums a decaying sine ping into every channel on each entry into the
/// trigger state; with volume_gate the input is muted outside that state.
/// `secondary` (e.g. charge parity) picks the ping pitch; empty means 0.
inline AudioBuffer apply_gate(const AudioBuffer& audio, const StateTrace& states, const GateConfig& gate,
                              std::span<const int> secondary = {}) {
  if (states.length() != audio.frames()) throw ShapeError("gate state trace and audio differ in length");
  if (!secondary.empty() && secondary.size() != states.length())
    throw ShapeError("secondary labels and state trace differ in length");
  if (gate.trigger_state < 0 || gate.trigger_state >= states.n_states)
    throw ParameterError("gate trigger_state out of range");
  if (gate.pitches_hz.empty()) throw ParameterError("gate needs at least one pitch");
  AudioBuffer out = audio;
  for (auto& ch : out.samples) {
    PingGate pg;
    for (std::size_t n = 0; n < ch.size(); ++n)
      ch[n] = pg.step(gate, states.states[n], secondary.empty() ? 0 : secondary[n], ch[n], audio.sample_rate_hz);
  }
  return out;
}

}  // namespace qsynth::synth
