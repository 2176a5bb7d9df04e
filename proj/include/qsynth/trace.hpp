#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "qsynth/error.hpp"

namespace qsynth {

/// Sampled readout voltages, one vector per channel (planar).
struct MeasurementTrace {
  double sample_rate_hz = 0.0;
  std::vector<std::vector<double>> samples;
  std::uint64_t seed = 0;  // 0 when imported

  std::size_t channels() const noexcept { return samples.size(); }
  std::size_t length() const noexcept { return samples.empty() ? 0 : samples.front().size(); }

  /// Throws ShapeError unless 1-2 equal-length, non-empty channels.
  void validate() const {
    if (samples.empty() || samples.size() > 2)
      throw ShapeError("trace must have 1 or 2 channels, got " + std::to_string(samples.size()));
    for (const auto& ch : samples)
      if (ch.size() != samples.front().size()) throw ShapeError("trace channels differ in length");
    if (samples.front().empty()) throw EmptyInputError("trace has no samples");
  }

  static MeasurementTrace mono(double rate, std::vector<double> values, std::uint64_t seed = 0) {
    MeasurementTrace t;
    t.sample_rate_hz = rate;
    t.samples.push_back(std::move(values));
    t.seed = seed;
    return t;
  }

  friend bool operator==(const MeasurementTrace&, const MeasurementTrace&) = default;
};

/// Normalized offset charge in [0, 1).
struct DriftTrace {
  double sample_rate_hz = 0.0;
  std::vector<double> values;

  friend bool operator==(const DriftTrace&, const DriftTrace&) = default;
};

/// Per-sample discrete labels from the latching filter.
struct StateTrace {
  double sample_rate_hz = 0.0;
  int n_states = 2;
  std::vector<int> states;
  std::vector<std::size_t> transition_indices;  // n where states[n] != states[n-1]

  std::size_t length() const noexcept { return states.size(); }

  /// Builds a StateTrace, deriving transition_indices from the labels.
  static StateTrace from_labels(double rate, int n_states, std::vector<int> labels) {
    StateTrace st;
    st.sample_rate_hz = rate;
    st.n_states = n_states;
    st.states = std::move(labels);
    for (std::size_t n = 1; n < st.states.size(); ++n)
      if (st.states[n] != st.states[n - 1]) st.transition_indices.push_back(n);
    return st;
  }
};

}  // namespace qsynth
