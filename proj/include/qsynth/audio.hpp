#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "qsynth/error.hpp"

namespace qsynth {

/// Planar audio at full scale +-1.
struct AudioBuffer {
  double sample_rate_hz = 48'000.0;
  std::vector<std::vector<double>> samples;
  std::size_t clip_count = 0;

  AudioBuffer() = default;
  AudioBuffer(double rate, std::size_t channels, std::size_t frames)
      : sample_rate_hz(rate), samples(channels, std::vector<double>(frames, 0.0)) {}

  std::size_t channels() const noexcept { return samples.size(); }
  std::size_t frames() const noexcept { return samples.empty() ? 0 : samples.front().size(); }

  bool same_shape(const AudioBuffer& other) const noexcept {
    return sample_rate_hz == other.sample_rate_hz && channels() == other.channels() && frames() == other.frames();
  }
};

/// Hard-clips to [-1, 1] in place; returns how many samples were clipped and
/// adds them to buffer.clip_count.
inline std::size_t hard_clip(AudioBuffer& buffer) {
  std::size_t clipped = 0;
  for (auto& ch : buffer.samples)
    for (auto& s : ch) {
      if (s > 1.0 || s < -1.0) {
        s = std::clamp(s, -1.0, 1.0);
        ++clipped;
      } else if (std::isnan(s)) {
        s = 0.0;
        ++clipped;
      }
    }
  buffer.clip_count += clipped;
  return clipped;
}

}  // namespace qsynth
