#pragma once

// Full trace-to-audio path shared by the offline renderer and the live
// engine: condition once (center/scale, resample, latch, residual), then
// render sample by sample with persistent synth state.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qsynth/audio.hpp"
#include "qsynth/error.hpp"
#include "qsynth/signal_cond.hpp"
#include "qsynth/synth/patch.hpp"
#include "qsynth/synth/render.hpp"
#include "qsynth/synth/voice.hpp"
#include "qsynth/trace.hpp"
#include "qsynth/trace_sim.hpp"

namespace qsynth {

/// Audio-rate control signals derived from one measurement trace.
struct ConditionedSource {
  synth::Engine engine = synth::Engine::two_state;
  double rate_hz = 48'000.0;
  std::vector<cond::LatchConfig> latch;      // per channel, normalized units
  std::vector<std::vector<double>> raw;      // centered, scaled, resampled
  std::vector<std::vector<int>> labels;      // latched state per sample
  std::vector<std::vector<double>> noise;    // residual per sample
  std::vector<double> drift_q;               // empty when no drift CV

  std::size_t channels() const noexcept { return raw.size(); }
  std::size_t frames() const noexcept { return raw.empty() ? 0 : raw.front().size(); }
  int n_states() const noexcept { return latch.empty() ? 2 : static_cast<int>(latch.front().levels.size()); }
};

/// Engine implied by the trace shape and voice count; throws ParameterError
/// when the patch names a different engine or the voice count does not fit.
inline synth::Engine infer_engine(const MeasurementTrace& trace, const synth::SynthPatch& patch) {
  synth::Engine e;
  if (trace.channels() == 2) {
    e = synth::Engine::follower;
    if (patch.voices.size() != 2) throw ParameterError("follower traces need a 2-voice patch");
  } else {
    e = patch.voices.size() == 4 ? synth::Engine::four_state : synth::Engine::two_state;
  }
  if (patch.engine && *patch.engine != e)
    throw ParameterError("patch engine '" + std::string(synth::to_string(*patch.engine)) + "' does not match " +
                         std::string(synth::to_string(e)) + " input");
  return e;
}

inline ConditionedSource condition(const MeasurementTrace& trace, const synth::SynthPatch& patch, double rate_hz,
                                   const std::optional<DriftTrace>& drift = std::nullopt) {
  trace.validate();
  ConditionedSource src;
  src.engine = infer_engine(trace, patch);
  src.rate_hz = rate_hz;

  std::vector<cond::AffineMap> maps;
  if (src.engine == synth::Engine::follower) {
    std::vector<double> joint(trace.samples[0]);
    joint.insert(joint.end(), trace.samples[1].begin(), trace.samples[1].end());
    maps.assign(2, cond::fit_center_scale(joint));
  } else {
    maps.push_back(cond::fit_center_scale(trace.samples[0]));
  }

  const int n_states = static_cast<int>(patch.voices.size());
  const std::size_t n_out = cond::resampled_length(trace.length(), trace.sample_rate_hz, rate_hz);
  if (!(rate_hz >= cond::kMinAudioRate && rate_hz <= cond::kMaxAudioRate))
    throw ParameterError("output rate must be in [1e3, 192e3] Hz");
  for (std::size_t c = 0; c < maps.size(); ++c) {
    const auto centered = cond::apply_center_scale(trace.samples[c], maps[c]);
    src.raw.push_back(cond::resample_channel(centered, trace.sample_rate_hz, rate_hz, n_out, cond::ResampleMethod::hold));

    cond::LatchConfig latch;
    if (patch.latch && !patch.latch->levels.empty()) {
      for (double l : patch.latch->levels) latch.levels.push_back(maps[c](l));
    } else {
      latch = cond::LatchConfig::evenly_spaced(n_states);
    }
    latch.hysteresis = patch.latch && patch.latch->hysteresis ? *patch.latch->hysteresis
                                                              : cond::LatchConfig::default_hysteresis(latch.levels);
    latch.validate();
    const auto states = cond::assign_states(src.raw.back(), rate_hz, latch);
    src.noise.push_back(cond::extract_noise(src.raw.back(), states, latch));
    src.labels.push_back(states.states);
    src.latch.push_back(std::move(latch));
  }
  if (drift) {
    if (drift->values.empty()) throw EmptyInputError("drift trace is empty");
    src.drift_q = cond::resample_channel(drift->values, drift->sample_rate_hz, rate_hz, n_out,
                                         cond::ResampleMethod::linear);
  }
  return src;
}

/// Stateful per-sample renderer over a ConditionedSource. Voice, smoother,
/// drone and gate state persist across render() calls, so rendering in
/// blocks gives the same result as rendering in one call.
class PatchRenderer {
 public:
  PatchRenderer(const ConditionedSource& src, std::uint64_t seed = 0) : engine_(src.engine) {
    for (std::size_t c = 0; c < src.channels(); ++c) {
      channels_.push_back(Channel{synth::StateSynth(static_cast<std::size_t>(src.n_states()), seed + c),
                                  synth::GlideVoice(rng::substream_key(seed, c, rng::Purpose::voice_noise)),
                                  {}, {}, {}});
    }
  }

  /// Renders `count` frames starting at source frame `src_pos` (wrapping)
  /// into `out` starting at `out_offset`. Samples are not clipped here.
  void render(const synth::SynthPatch& patch, const ConditionedSource& src, std::size_t src_pos, AudioBuffer& out,
              std::size_t out_offset, std::size_t count) {
    if (patch.voices.size() != static_cast<std::size_t>(src.n_states()))
      throw ParameterError("patch voice count does not match the source");
    if (out.channels() != src.channels() || out.frames() < out_offset + count)
      throw ShapeError("output buffer too small for render");
    const double rate = src.rate_hz;
    const double alpha = cond::OnePole::coefficient(patch.smoothing_s, rate);
    const std::size_t len = src.frames();
    const bool four = engine_ == synth::Engine::four_state;
    if (patch.gate && patch.gate->trigger_state > 1) throw ParameterError("gate trigger_state must be 0 or 1");

    for (std::size_t c = 0; c < src.channels(); ++c) {
      auto& ch = channels_[c];
      const auto& labels = src.labels[c];
      const auto& noise = src.noise[c];
      const auto& raw = src.raw[c];
      for (std::size_t k = 0; k < count; ++k) {
        const std::size_t n = (src_pos + k) % len;
        const int label = labels[n];
        const double mod = ch.noise_lp.step(noise[n], alpha);
        double s = engine_ == synth::Engine::follower ? ch.glide.step(patch.voices, label, mod, alpha, rate)
                                                      : ch.synth.step(patch.voices, label, mod, rate);
        if (patch.drift && !src.drift_q.empty()) s += ch.drone.step(*patch.drift, src.drift_q[n], rate);
        if (patch.gate) {
          const int qubit = four ? sim::qubit_of(label) : label;
          const int parity = four ? sim::parity_of(label) : 0;
          s = ch.gate.step(*patch.gate, qubit, parity, s, rate);
        }
        s *= patch.gain;
        out.samples[c][out_offset + k] = synth::mix_sample(raw[n], s, patch.wet_dry);
      }
    }
  }

  std::size_t ping_count(std::size_t channel = 0) const { return channels_.at(channel).gate.ping_count(); }

 private:
  struct Channel {
    synth::StateSynth synth;
    synth::GlideVoice glide;
    cond::OnePole noise_lp;
    synth::DriftDrone drone;
    synth::PingGate gate;
  };

  synth::Engine engine_;
  std::vector<Channel> channels_;
};

/// Renders the whole source once and hard-clips the result.
inline AudioBuffer render_offline(const ConditionedSource& src, const synth::SynthPatch& patch, std::uint64_t seed = 0) {
  synth::validate(patch);
  AudioBuffer out(src.rate_hz, src.channels(), src.frames());
  PatchRenderer renderer(src, seed);
  renderer.render(patch, src, 0, out, 0, src.frames());
  hard_clip(out);
  return out;
}

}  // namespace qsynth
