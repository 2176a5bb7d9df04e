#pragma once

// Ready-made simulator settings and patches for the recurring motifs.

#include <numbers>

#include "qsynth/synth/patch.hpp"
#include "qsynth/trace_sim.hpp"

namespace qsynth::presets {

/// Rare excitations: excited ~6 % of the time, 10 ms mean excited dwell.
inline sim::TwoStateParams sparse_excitation() {
  sim::TwoStateParams p;
  p.rate_down = 100.0;
  p.rate_up = p.rate_down * 0.06 / 0.94;
  p.level_ground = -1.0;
  p.level_excited = 1.0;
  p.noise_sigma = 0.1;
  p.sample_rate_hz = 10'000.0;
  return p;
}

/// Parity tunneling with a 4 ms mean dwell on top of the sparse qubit chain.
inline sim::FourStateParams parity_tunneling() {
  sim::FourStateParams p;
  const auto q = sparse_excitation();
  p.rate_up = q.rate_up;
  p.rate_down = q.rate_down;
  p.parity_rate = 250.0;
  p.noise_sigma = 0.05;
  p.sample_rate_hz = 10'000.0;
  return p;
}

enum class FollowQuality { good, average, bad };

inline sim::FollowerParams follower(FollowQuality quality) {
  sim::FollowerParams p;
  p.leader.rate_up = 50.0;
  p.leader.rate_down = 50.0;
  p.leader.sample_rate_hz = 10'000.0;
  p.round_rate_hz = 1'000.0;
  p.noise_sigma = 0.05;
  switch (quality) {
    case FollowQuality::good: p.theta = std::numbers::pi; break;
    case FollowQuality::average: p.theta = 0.75 * std::numbers::pi; break;
    case FollowQuality::bad: p.theta = 0.5 * std::numbers::pi; break;
  }
  return p;
}

/// Offset-charge reconfiguration every ~2 minutes with slow wander.
inline sim::DriftParams offset_charge() {
  sim::DriftParams p;
  p.jump_mean_interval_s = 120.0;
  p.wander_sigma_per_sqrt_s = 0.002;
  p.sample_rate_hz = 10.0;
  return p;
}

/// Staccato line: ground voice inaudible, excited voice a 700 Hz sine cut
/// hard at the end of each excitation.
inline synth::SynthPatch morse_700hz() {
  synth::SynthPatch p;
  p.engine = synth::Engine::two_state;
  synth::VoiceConfig ground;
  ground.freq_hz = 0.0;
  ground.amp = 0.0;
  synth::VoiceConfig excited;
  excited.waveform = synth::Waveform::sine;
  excited.freq_hz = 700.0;
  excited.amp = 1.0;
  excited.attack_s = 0.0;
  excited.decay_s = 0.0;
  p.voices = {ground, excited};
  p.gain = 0.8;
  p.wet_dry = 1.0;
  p.smoothing_s = 0.0;
  p.latch = synth::LatchSpec{{-1.0, 1.0}, std::nullopt};
  return p;
}

/// Four-note patch with parity pings on qubit excitation.
inline synth::SynthPatch parity_pings() {
  synth::SynthPatch p;
  p.engine = synth::Engine::four_state;
  const double notes[] = {220.0, 293.66, 329.63, 440.0};
  for (double f : notes) {
    synth::VoiceConfig v;
    v.freq_hz = f;
    v.amp = 0.25;
    v.attack_s = 0.002;
    v.decay_s = 0.03;
    v.mod_index = 0.5;
    p.voices.push_back(v);
  }
  p.gain = 0.8;
  p.wet_dry = 1.0;
  p.gate = synth::GateConfig{1, {880.0, 1318.51}, 0.4, 0.2, false};
  p.latch = synth::LatchSpec{{-1.0, -1.0 / 3.0, 1.0 / 3.0, 1.0}, std::nullopt};
  return p;
}

/// Bell-like follower patch with a short glide.
inline synth::SynthPatch follower_bells() {
  synth::SynthPatch p;
  p.engine = synth::Engine::follower;
  synth::VoiceConfig low;
  low.freq_hz = 523.25;
  low.amp = 0.4;
  low.mod_index = 0.3;
  synth::VoiceConfig high = low;
  high.freq_hz = 783.99;
  p.voices = {low, high};
  p.gain = 0.8;
  p.smoothing_s = 0.01;
  p.latch = synth::LatchSpec{{-1.0, 1.0}, std::nullopt};
  return p;
}

}  // namespace qsynth::presets
