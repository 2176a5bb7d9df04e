#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qsynth/error.hpp"

namespace qsynth::synth {

enum class Waveform { sine, saw, square, noise };

inline std::string_view to_string(Waveform w) {
  switch (w) {
    case Waveform::sine: return "sine";
    case Waveform::saw: return "saw";
    case Waveform::square: return "square";
    case Waveform::noise: return "noise";
  }
  return "sine";
}

inline std::optional<Waveform> waveform_from_string(std::string_view s) {
  if (s == "sine") return Waveform::sine;
  if (s == "saw") return Waveform::saw;
  if (s == "square") return Waveform::square;
  if (s == "noise") return Waveform::noise;
  return std::nullopt;
}

/// One oscillator voice bound to a state. freq_hz == 0 is a silent carrier.
/// mod_amp scales the modulation source; mod_index is the peak phase
/// deviation in radians applied to the scaled source.
struct VoiceConfig {
  Waveform waveform = Waveform::sine;
  double freq_hz = 440.0;
  double amp = 1.0;
  double attack_s = 0.005;
  double decay_s = 0.05;
  double mod_index = 0.0;
  double mod_amp = 1.0;

  friend bool operator==(const VoiceConfig&, const VoiceConfig&) = default;
};

/// Pings on entry into trigger_state; pitch chosen by the secondary label.
struct GateConfig {
  int trigger_state = 1;
  std::vector<double> pitches_hz{880.0, 1174.66};
  double decay_s = 0.5;
  double amp = 0.5;
  bool volume_gate = false;  // also mute everything outside trigger_state

  friend bool operator==(const GateConfig&, const GateConfig&) = default;
};

/// Sine drone whose pitch follows the drift CV exponentially.
struct DriftVoice {
  double f_min_hz = 110.0;
  double f_max_hz = 220.0;
  double amp = 0.3;

  friend bool operator==(const DriftVoice&, const DriftVoice&) = default;
};

/// Latching levels in raw trace units; mapped through the center/scale map
/// before use. Empty levels mean evenly spaced over the normalized span.
struct LatchSpec {
  std::vector<double> levels;
  std::optional<double> hysteresis;  // normalized units; default quarter gap

  friend bool operator==(const LatchSpec&, const LatchSpec&) = default;
};

enum class Engine { two_state, four_state, follower };

inline std::string_view to_string(Engine e) {
  switch (e) {
    case Engine::two_state: return "two-state";
    case Engine::four_state: return "four-state";
    case Engine::follower: return "follower";
  }
  return "two-state";
}

inline std::optional<Engine> engine_from_string(std::string_view s) {
  if (s == "two-state") return Engine::two_state;
  if (s == "four-state") return Engine::four_state;
  if (s == "follower") return Engine::follower;
  return std::nullopt;
}

struct SynthPatch {
  std::optional<Engine> engine;
  std::vector<VoiceConfig> voices;
  double gain = 0.8;
  double smoothing_s = 0.0;
  double wet_dry = 1.0;
  std::optional<GateConfig> gate;
  std::optional<DriftVoice> drift;
  std::optional<LatchSpec> latch;

  friend bool operator==(const SynthPatch&, const SynthPatch&) = default;
};

/// Accepted closed range of a numeric patch field.
struct FieldRange {
  double min;
  double max;
};

namespace ranges {
inline constexpr FieldRange freq_hz{0.0, 20'000.0};
inline constexpr FieldRange unit{0.0, 1.0};
inline constexpr FieldRange time_s{0.0, 60.0};
inline constexpr FieldRange mod_index{0.0, 100.0};
inline constexpr FieldRange smoothing_s{0.0, 10.0};
inline constexpr FieldRange trigger_state{0.0, 3.0};
inline constexpr FieldRange pitch_hz{0.0, 20'000.0};
inline constexpr FieldRange hysteresis{0.0, 1e6};
}  // namespace ranges

namespace detail {

inline void check_range(double v, FieldRange r, const std::string& field) {
  if (!std::isfinite(v) || v < r.min || v > r.max)
    throw ValidationError(field, "value out of range [" + std::to_string(r.min) + ", " + std::to_string(r.max) + "]",
                          r.min, r.max);
}

}  // namespace detail

/// Enforces every numeric range and structural invariant of a patch.
inline void validate(const SynthPatch& patch) {
  if (patch.voices.size() != 2 && patch.voices.size() != 4)
    throw ValidationError("voices", "patch needs 2 or 4 voices");
  if (patch.engine) {
    const std::size_t want = *patch.engine == Engine::four_state ? 4 : 2;
    if (patch.voices.size() != want)
      throw ValidationError("voices", std::string(to_string(*patch.engine)) + " engine needs " +
                                          std::to_string(want) + " voices");
  }
  for (std::size_t i = 0; i < patch.voices.size(); ++i) {
    const auto& v = patch.voices[i];
    const std::string f = "voices[" + std::to_string(i) + "].";
    detail::check_range(v.freq_hz, ranges::freq_hz, f + "freq_hz");
    detail::check_range(v.amp, ranges::unit, f + "amp");
    detail::check_range(v.attack_s, ranges::time_s, f + "attack_s");
    detail::check_range(v.decay_s, ranges::time_s, f + "decay_s");
    detail::check_range(v.mod_index, ranges::mod_index, f + "mod_index");
    detail::check_range(v.mod_amp, ranges::unit, f + "mod_amp");
  }
  detail::check_range(patch.gain, ranges::unit, "gain");
  detail::check_range(patch.smoothing_s, ranges::smoothing_s, "smoothing_s");
  detail::check_range(patch.wet_dry, ranges::unit, "wet_dry");
  if (patch.gate) {
    const auto& g = *patch.gate;
    detail::check_range(static_cast<double>(g.trigger_state), ranges::trigger_state, "gate.trigger_state");
    if (g.pitches_hz.empty()) throw ValidationError("gate.pitches_hz", "needs at least one pitch");
    for (std::size_t i = 0; i < g.pitches_hz.size(); ++i)
      detail::check_range(g.pitches_hz[i], ranges::pitch_hz, "gate.pitches_hz[" + std::to_string(i) + "]");
    detail::check_range(g.decay_s, ranges::time_s, "gate.decay_s");
    detail::check_range(g.amp, ranges::unit, "gate.amp");
  }
  if (patch.drift) {
    const auto& d = *patch.drift;
    detail::check_range(d.f_min_hz, ranges::freq_hz, "drift.f_min_hz");
    detail::check_range(d.f_max_hz, ranges::freq_hz, "drift.f_max_hz");
    if (!(d.f_min_hz > 0.0)) throw ValidationError("drift.f_min_hz", "must be > 0", ranges::freq_hz.min, ranges::freq_hz.max);
    if (!(d.f_max_hz > d.f_min_hz))
      throw ValidationError("drift.f_max_hz", "must exceed drift.f_min_hz", d.f_min_hz, ranges::freq_hz.max);
    detail::check_range(d.amp, ranges::unit, "drift.amp");
  }
  if (patch.latch) {
    const auto& l = *patch.latch;
    if (!l.levels.empty()) {
      if (l.levels.size() != patch.voices.size())
        throw ValidationError("latch.levels", "needs one level per voice");
      for (std::size_t i = 0; i < l.levels.size(); ++i) {
        if (!std::isfinite(l.levels[i]))
          throw ValidationError("latch.levels[" + std::to_string(i) + "]", "must be finite");
        for (std::size_t j = 0; j < i; ++j)
          if (l.levels[i] == l.levels[j])
            throw ValidationError("latch.levels", "levels must be pairwise distinct");
      }
    }
    if (l.hysteresis) detail::check_range(*l.hysteresis, ranges::hysteresis, "latch.hysteresis");
  }
}

}  // namespace qsynth::synth
