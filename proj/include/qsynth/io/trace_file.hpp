#pragma once

// Text trace files:
//
//   #qsynth-trace v1
//   rate=<float>
//   channels=<1|2>
//   seed=<u64>
//   <v0>[,<v1>]          one line per sample
//
// Values are written with the shortest representation that round-trips
// (std::to_chars), so read(write(t)) == t exactly. Large traces compress well
// with gzip; the reader itself only takes plain text.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>

#include "qsynth/error.hpp"
#include "qsynth/trace.hpp"

namespace qsynth::io {

inline constexpr std::string_view kTraceMagic = "#qsynth-trace v1";

namespace detail {

inline void append_double(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

inline bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size() && std::isfinite(out);
}

template <typename Int>
bool parse_int(std::string_view s, Int& out) {
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading " + path.string());
  return std::move(ss).str();
}

inline void write_file(const std::filesystem::path& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  out.flush();
  if (!out) throw IoError("error writing " + path.string());
}

}  // namespace detail

inline std::string format_trace(const MeasurementTrace& trace) {
  trace.validate();
  std::string out;
  out.reserve(64 + trace.length() * trace.channels() * 24);
  out += kTraceMagic;
  out += "\nrate=";
  detail::append_double(out, trace.sample_rate_hz);
  out += "\nchannels=" + std::to_string(trace.channels());
  out += "\nseed=" + std::to_string(trace.seed);
  out += '\n';
  for (std::size_t n = 0; n < trace.length(); ++n) {
    for (std::size_t c = 0; c < trace.channels(); ++c) {
      if (c) out += ',';
      detail::append_double(out, trace.samples[c][n]);
    }
    out += '\n';
  }
  return out;
}

inline MeasurementTrace parse_trace(std::string_view text) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto next_line = [&](std::string_view& line) {
    if (pos >= text.size()) return false;
    const std::size_t end = text.find('\n', pos);
    line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    pos = end == std::string_view::npos ? text.size() : end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    return true;
  };

  std::string_view line;
  if (!next_line(line) || line != kTraceMagic) throw ParseError(1, "missing '#qsynth-trace v1' magic line");

  MeasurementTrace trace;
  bool have_rate = false, have_channels = false, have_seed = false;
  std::size_t channels = 0;
  while (!(have_rate && have_channels && have_seed)) {
    if (!next_line(line)) throw ParseError(line_no + 1, "unexpected end of header");
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected key=value header line");
    const auto key = line.substr(0, eq);
    const auto value = line.substr(eq + 1);
    if (key == "rate") {
      if (have_rate) throw ParseError(line_no, "duplicate rate");
      if (!detail::parse_double(value, trace.sample_rate_hz) || !(trace.sample_rate_hz > 0.0))
        throw ParseError(line_no, "rate must be a positive number");
      have_rate = true;
    } else if (key == "channels") {
      if (have_channels) throw ParseError(line_no, "duplicate channels");
      if (!detail::parse_int(value, channels) || (channels != 1 && channels != 2))
        throw ParseError(line_no, "channels must be 1 or 2");
      have_channels = true;
    } else if (key == "seed") {
      if (have_seed) throw ParseError(line_no, "duplicate seed");
      if (!detail::parse_int(value, trace.seed)) throw ParseError(line_no, "seed must be an unsigned 64-bit integer");
      have_seed = true;
    } else {
      throw ParseError(line_no, "unknown header key '" + std::string(key) + "'");
    }
  }

  trace.samples.assign(channels, {});
  while (next_line(line)) {
    if (line.empty()) {
      if (pos >= text.size()) break;
      throw ParseError(line_no, "empty data line");
    }
    std::size_t field_start = 0;
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t comma = line.find(',', field_start);
      const bool last = c + 1 == channels;
      if (last != (comma == std::string_view::npos))
        throw ParseError(line_no, "expected " + std::to_string(channels) + " comma-separated fields");
      const auto field = line.substr(field_start, last ? std::string_view::npos : comma - field_start);
      double v = 0.0;
      if (!detail::parse_double(field, v)) throw ParseError(line_no, "invalid number '" + std::string(field) + "'");
      trace.samples[c].push_back(v);
      field_start = comma + 1;
    }
  }
  if (trace.samples[0].empty()) throw ParseError(line_no + 1, "trace has no samples");
  return trace;
}

inline void write_trace(const MeasurementTrace& trace, const std::filesystem::path& path) {
  detail::write_file(path, format_trace(trace));
}

inline MeasurementTrace read_trace(const std::filesystem::path& path) { return parse_trace(detail::read_file(path)); }

/// Drift traces use the same file format with one channel.
inline MeasurementTrace drift_as_trace(const DriftTrace& drift, std::uint64_t seed) {
  MeasurementTrace t = MeasurementTrace::mono(drift.sample_rate_hz, drift.values, seed);
  return t;
}

/// Throws ParseError if the trace is not a valid drift record.
inline DriftTrace trace_as_drift(const MeasurementTrace& trace) {
  if (trace.channels() != 1) throw ParseError(3, "drift traces have exactly one channel");
  for (std::size_t n = 0; n < trace.length(); ++n) {
    const double v = trace.samples[0][n];
    if (!(v >= 0.0 && v < 1.0)) throw ParseError(5 + n, "drift value outside [0, 1)");
  }
  return {trace.sample_rate_hz, trace.samples[0]};
}

inline void write_drift(const DriftTrace& drift, std::uint64_t seed, const std::filesystem::path& path) {
  write_trace(drift_as_trace(drift, seed), path);
}

inline DriftTrace read_drift(const std::filesystem::path& path) { return trace_as_drift(read_trace(path)); }

}  // namespace qsynth::io
