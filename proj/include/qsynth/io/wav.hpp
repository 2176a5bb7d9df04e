#pragma once

// RIFF/WAVE reading and writing. Writes 16-bit PCM or 32-bit IEEE float;
// reads PCM 8/16/24/32, float 32/64 and their WAVE_FORMAT_EXTENSIBLE forms.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "qsynth/audio.hpp"
#include "qsynth/error.hpp"
#include "qsynth/io/trace_file.hpp"

namespace qsynth::io {

enum class WavFormat { pcm16, float32 };

namespace wav_detail {

inline constexpr std::uint16_t kFormatPcm = 0x0001;
inline constexpr std::uint16_t kFormatFloat = 0x0003;
inline constexpr std::uint16_t kFormatExtensible = 0xFFFE;

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

inline std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | static_cast<std::uint32_t>(b[at + 1]) << 8 |
         static_cast<std::uint32_t>(b[at + 2]) << 16 | static_cast<std::uint32_t>(b[at + 3]) << 24;
}

inline std::uint16_t get_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | b[at + 1] << 8);
}

inline bool tag_is(std::span<const std::uint8_t> b, std::size_t at, const char* tag) {
  return std::memcmp(b.data() + at, tag, 4) == 0;
}

inline std::int16_t to_pcm16(double x) {
  const double c = std::isnan(x) ? 0.0 : std::clamp(x, -1.0, 1.0);
  return static_cast<std::int16_t>(std::lround(c * 32767.0));
}

}  // namespace wav_detail

inline std::vector<std::uint8_t> encode_wav(const AudioBuffer& audio, WavFormat format) {
  using namespace wav_detail;
  if (audio.channels() == 0 || audio.channels() > 2) throw ShapeError("WAV output needs 1 or 2 channels");
  for (const auto& ch : audio.samples)
    if (ch.size() != audio.frames()) throw ShapeError("audio channels differ in length");
  const auto rate = static_cast<std::uint32_t>(std::lround(audio.sample_rate_hz));
  const auto channels = static_cast<std::uint16_t>(audio.channels());
  const std::uint16_t bytes_per_sample = format == WavFormat::pcm16 ? 2 : 4;
  const auto block_align = static_cast<std::uint16_t>(channels * bytes_per_sample);
  const std::uint64_t data_bytes = static_cast<std::uint64_t>(audio.frames()) * block_align;
  if (data_bytes > 0xFFFFFFFFull - 64) throw CapacityError("audio too long for a RIFF file");

  std::vector<std::uint8_t> out;
  out.reserve(static_cast<std::size_t>(data_bytes) + 44);
  put_tag(out, "RIFF");
  put_u32(out, static_cast<std::uint32_t>(36 + data_bytes));
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, format == WavFormat::pcm16 ? kFormatPcm : kFormatFloat);
  put_u16(out, channels);
  put_u32(out, rate);
  put_u32(out, rate * block_align);
  put_u16(out, block_align);
  put_u16(out, static_cast<std::uint16_t>(bytes_per_sample * 8));
  put_tag(out, "data");
  put_u32(out, static_cast<std::uint32_t>(data_bytes));
  for (std::size_t n = 0; n < audio.frames(); ++n)
    for (std::size_t c = 0; c < channels; ++c) {
      const double x = audio.samples[c][n];
      if (format == WavFormat::pcm16) {
        put_u16(out, static_cast<std::uint16_t>(to_pcm16(x)));
      } else {
        const float f = static_cast<float>(x);
        std::uint32_t bits;
        std::memcpy(&bits, &f, sizeof bits);
        put_u32(out, bits);
      }
    }
  return out;
}

inline AudioBuffer decode_wav(std::span<const std::uint8_t> bytes) {
  using namespace wav_detail;
  if (bytes.size() < 12 || !tag_is(bytes, 0, "RIFF") || !tag_is(bytes, 8, "WAVE"))
    throw FormatError("not a RIFF/WAVE file");

  std::uint16_t tag = 0, channels = 0, bits = 0, block_align = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::span<const std::uint8_t> data;
  bool have_data = false;

  std::size_t at = 12;
  while (at + 8 <= bytes.size()) {
    const std::uint32_t size = get_u32(bytes, at + 4);
    const std::size_t body = at + 8;
    const std::size_t avail = bytes.size() - body;
    if (tag_is(bytes, at, "fmt ")) {
      if (size < 16 || size > avail) throw FormatError("truncated fmt chunk");
      tag = get_u16(bytes, body);
      channels = get_u16(bytes, body + 2);
      rate = get_u32(bytes, body + 4);
      block_align = get_u16(bytes, body + 12);
      bits = get_u16(bytes, body + 14);
      if (tag == kFormatExtensible) {
        if (size < 40) throw FormatError("truncated WAVE_FORMAT_EXTENSIBLE fmt chunk");
        tag = get_u16(bytes, body + 24);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (tag_is(bytes, at, "data")) {
      data = bytes.subspan(body, std::min<std::size_t>(size, avail));
      have_data = true;
      break;
    }
    if (size > avail) break;
    at = body + size + (size & 1u);
  }
  if (!have_fmt) throw FormatError("missing fmt chunk");
  if (!have_data) throw FormatError("missing data chunk");
  if (channels == 0) throw FormatError("zero channels");
  if (rate == 0) throw FormatError("zero sample rate");

  const bool pcm = tag == kFormatPcm && (bits == 8 || bits == 16 || bits == 24 || bits == 32);
  const bool flt = tag == kFormatFloat && (bits == 32 || bits == 64);
  if (!pcm && !flt)
    throw FormatError("unsupported WAV codec (format tag " + std::to_string(tag) + ", " + std::to_string(bits) +
                      " bits)");
  const std::size_t bytes_per_sample = bits / 8u;
  if (block_align != channels * bytes_per_sample) throw FormatError("inconsistent block alignment");

  const std::size_t frames = data.size() / block_align;
  AudioBuffer out(static_cast<double>(rate), channels, frames);
  for (std::size_t n = 0; n < frames; ++n)
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t p = n * block_align + c * bytes_per_sample;
      double v = 0.0;
      if (flt && bits == 32) {
        const std::uint32_t u = get_u32(data, p);
        float f;
        std::memcpy(&f, &u, sizeof f);
        v = f;
      } else if (flt) {
        const std::uint64_t u = get_u32(data, p) | static_cast<std::uint64_t>(get_u32(data, p + 4)) << 32;
        std::memcpy(&v, &u, sizeof v);
      } else if (bits == 8) {
        v = (static_cast<double>(data[p]) - 128.0) / 127.0;
      } else if (bits == 16) {
        v = static_cast<std::int16_t>(get_u16(data, p)) / 32767.0;
      } else if (bits == 24) {
        std::int32_t s = data[p] | data[p + 1] << 8 | data[p + 2] << 16;
        if (s & 0x800000) s -= 0x1000000;
        v = s / 8388607.0;
      } else {
        v = static_cast<std::int32_t>(get_u32(data, p)) / 2147483647.0;
      }
      out.samples[c][n] = v;
    }
  return out;
}

inline void write_wav(const AudioBuffer& audio, const std::filesystem::path& path, WavFormat format) {
  const auto bytes = encode_wav(audio, format);
  detail::write_file(path, {reinterpret_cast<const char*>(bytes.data()), bytes.size()});
}

inline AudioBuffer read_wav(const std::filesystem::path& path) {
  const std::string raw = detail::read_file(path);
  return decode_wav({reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()});
}

/// Appends interleaved frames to a WAV file as they arrive; the RIFF and data
/// sizes are patched in by close() (also called by the destructor).
class WavStreamWriter {
 public:
  WavStreamWriter(const std::filesystem::path& path, double rate, std::size_t channels, WavFormat format)
      : out_(path, std::ios::binary | std::ios::trunc), channels_(channels), format_(format) {
    if (!out_) throw IoError("cannot open " + path.string() + " for writing");
    AudioBuffer empty(rate, channels, 0);
    const auto header = encode_wav(empty, format);
    out_.write(reinterpret_cast<const char*>(header.data()), static_cast<std::streamsize>(header.size()));
  }

  WavStreamWriter(const WavStreamWriter&) = delete;
  WavStreamWriter& operator=(const WavStreamWriter&) = delete;
  ~WavStreamWriter() {
    try {
      close();
    } catch (...) {
    }
  }

  /// `interleaved` holds frames * channels samples.
  void append(std::span<const float> interleaved) {
    std::vector<std::uint8_t> bytes;
    bytes.reserve(interleaved.size() * 4);
    for (const float f : interleaved) {
      if (format_ == WavFormat::pcm16) {
        wav_detail::put_u16(bytes, static_cast<std::uint16_t>(wav_detail::to_pcm16(f)));
      } else {
        std::uint32_t bits;
        std::memcpy(&bits, &f, sizeof bits);
        wav_detail::put_u32(bytes, bits);
      }
    }
    out_.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    data_bytes_ += bytes.size();
  }

  void close() {
    if (!out_.is_open()) return;
    std::vector<std::uint8_t> riff, data;
    wav_detail::put_u32(riff, static_cast<std::uint32_t>(36 + data_bytes_));
    wav_detail::put_u32(data, static_cast<std::uint32_t>(data_bytes_));
    out_.seekp(4);
    out_.write(reinterpret_cast<const char*>(riff.data()), 4);
    out_.seekp(40);
    out_.write(reinterpret_cast<const char*>(data.data()), 4);
    out_.close();
  }

  std::size_t channels() const noexcept { return channels_; }

 private:
  std::ofstream out_;
  std::size_t channels_;
  WavFormat format_;
  std::uint64_t data_bytes_ = 0;
};

}  // namespace qsynth::io
