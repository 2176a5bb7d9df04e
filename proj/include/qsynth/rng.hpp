#pragma once

// Portable random streams.
//
// Every random quantity in the library comes from xoshiro256** seeded through
// SplitMix64. Distributions are implemented here rather than taken from
// <random>, whose distribution algorithms differ between standard libraries.
// Independent substreams are keyed by (seed, channel, purpose).

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace qsynth::rng {

/// SplitMix64 finalizer; also used as the hash for substream derivation.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t state) noexcept : state_(state) {}

  constexpr std::uint64_t next() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

 private:
  std::uint64_t state_;
};

/// What a substream is used for. Values are part of the determinism contract.
enum class Purpose : std::uint64_t {
  qubit_chain = 1,
  parity_chain = 2,
  readout_noise = 3,
  feedback = 4,
  drift_jumps = 5,
  drift_values = 6,
  drift_wander = 7,
  voice_noise = 8,
};

constexpr std::uint64_t substream_key(std::uint64_t seed, std::uint64_t channel,
                                      Purpose purpose) noexcept {
  std::uint64_t h = mix64(seed + 0x9e3779b97f4a7c15ULL);
  h = mix64(h ^ (channel * 0xd1b54a32d192ed03ULL + 1));
  h = mix64(h ^ (static_cast<std::uint64_t>(purpose) * 0xabc98388fb8fac03ULL + 2));
  return h;
}

/// xoshiro256** 1.0 (Blackman & Vigna).
class Xoshiro256 {
 public:
  explicit Xoshiro256(std::uint64_t seed) noexcept {
    SplitMix64 sm(seed);
    for (auto& s : s_) s = sm.next();
  }

  Xoshiro256(std::uint64_t seed, std::uint64_t channel, Purpose purpose) noexcept
      : Xoshiro256(substream_key(seed, channel, purpose)) {}

  std::uint64_t next() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Exponential with the given rate (events per unit). rate must be > 0.
  double exponential(double rate) noexcept { return -std::log1p(-uniform()) / rate; }

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> s_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Stateless counter-based uniform on [-1, 1), used for the noise waveform.
constexpr double counter_uniform_pm1(std::uint64_t key, std::uint64_t counter) noexcept {
  const std::uint64_t bits = mix64(key ^ mix64(counter + 0x632be59bd9b4e019ULL));
  return static_cast<double>(bits >> 11) * 0x1.0p-52 - 1.0;
}

}  // namespace qsynth::rng
