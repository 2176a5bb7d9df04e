#pragma once

// JSON parameter files for the simulator engines. Keys match the parameter
// struct fields; omitted keys keep the preset defaults; unknown keys are
// rejected.

#include <string>
#include <string_view>

#include "qsynth/io/patch_json.hpp"
#include "qsynth/presets.hpp"
#include "qsynth/trace_sim.hpp"

namespace qsynth::io {

namespace sim_detail {

using patch_detail::read_int;
using patch_detail::read_number;
using patch_detail::reject_unknown;

inline json parse_document(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    throw ValidationError("", std::string("malformed JSON: ") + e.what());
  }
}

inline sim::TwoStateParams two_state_from(const json& j, sim::TwoStateParams p, const std::string& prefix) {
  if (!j.is_object()) throw ValidationError(prefix, "expected an object");
  reject_unknown(j, prefix, {"rate_up", "rate_down", "level_ground", "level_excited", "noise_sigma",
                             "sample_rate_hz", "initial_state"});
  read_number(j, "rate_up", prefix, p.rate_up);
  read_number(j, "rate_down", prefix, p.rate_down);
  read_number(j, "level_ground", prefix, p.level_ground);
  read_number(j, "level_excited", prefix, p.level_excited);
  read_number(j, "noise_sigma", prefix, p.noise_sigma);
  read_number(j, "sample_rate_hz", prefix, p.sample_rate_hz);
  read_int(j, "initial_state", prefix, p.initial_state);
  return p;
}

template <typename Params>
Params validated(Params p) {
  try {
    p.validate();
  } catch (const ParameterError& e) {
    throw ValidationError("", e.what());
  }
  return p;
}

}  // namespace sim_detail

inline sim::TwoStateParams parse_two_state_params(std::string_view text) {
  return sim_detail::validated(
      sim_detail::two_state_from(sim_detail::parse_document(text), presets::sparse_excitation(), ""));
}

inline sim::FourStateParams parse_four_state_params(std::string_view text) {
  using namespace sim_detail;
  const json j = parse_document(text);
  if (!j.is_object()) throw ValidationError("", "expected an object");
  reject_unknown(j, "", {"rate_up", "rate_down", "parity_rate", "levels", "noise_sigma", "sample_rate_hz",
                         "initial_qubit", "initial_parity"});
  auto p = presets::parity_tunneling();
  read_number(j, "rate_up", "", p.rate_up);
  read_number(j, "rate_down", "", p.rate_down);
  read_number(j, "parity_rate", "", p.parity_rate);
  if (const auto it = j.find("levels"); it != j.end()) {
    const auto lv = patch_detail::read_number_array(*it, "levels");
    if (lv.size() != 4) throw ValidationError("levels", "expected 4 levels");
    std::copy(lv.begin(), lv.end(), p.levels.begin());
  }
  read_number(j, "noise_sigma", "", p.noise_sigma);
  read_number(j, "sample_rate_hz", "", p.sample_rate_hz);
  read_int(j, "initial_qubit", "", p.initial_qubit);
  read_int(j, "initial_parity", "", p.initial_parity);
  return validated(p);
}

inline sim::FollowerParams parse_follower_params(std::string_view text) {
  using namespace sim_detail;
  const json j = parse_document(text);
  if (!j.is_object()) throw ValidationError("", "expected an object");
  reject_unknown(j, "", {"leader", "theta", "theta_schedule", "feedback_latency_rounds", "round_rate_hz",
                         "noise_sigma"});
  auto p = presets::follower(presets::FollowQuality::good);
  if (const auto it = j.find("leader"); it != j.end()) p.leader = two_state_from(*it, p.leader, "leader.");
  read_number(j, "theta", "", p.theta);
  if (const auto it = j.find("theta_schedule"); it != j.end()) {
    if (!it->is_array()) throw ValidationError("theta_schedule", "expected an array of [time_s, theta] pairs");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const auto& bp = (*it)[i];
      const std::string f = "theta_schedule[" + std::to_string(i) + "]";
      if (!bp.is_array() || bp.size() != 2 || !bp[0].is_number() || !bp[1].is_number())
        throw ValidationError(f, "expected [time_s, theta]");
      p.theta_schedule.push_back({bp[0].get<double>(), bp[1].get<double>()});
    }
  }
  int latency = static_cast<int>(p.feedback_latency_rounds);
  read_int(j, "feedback_latency_rounds", "", latency);
  if (latency < 0) throw ValidationError("feedback_latency_rounds", "must be >= 0");
  p.feedback_latency_rounds = static_cast<std::size_t>(latency);
  read_number(j, "round_rate_hz", "", p.round_rate_hz);
  read_number(j, "noise_sigma", "", p.noise_sigma);
  return validated(p);
}

inline sim::DriftParams parse_drift_params(std::string_view text) {
  using namespace sim_detail;
  const json j = parse_document(text);
  if (!j.is_object()) throw ValidationError("", "expected an object");
  reject_unknown(j, "", {"jump_mean_interval_s", "wander_sigma_per_sqrt_s", "sample_rate_hz", "initial_value"});
  auto p = presets::offset_charge();
  read_number(j, "jump_mean_interval_s", "", p.jump_mean_interval_s);
  read_number(j, "wander_sigma_per_sqrt_s", "", p.wander_sigma_per_sqrt_s);
  read_number(j, "sample_rate_hz", "", p.sample_rate_hz);
  if (j.contains("initial_value")) {
    double v = 0.0;
    read_number(j, "initial_value", "", v);
    p.initial_value = v;
  }
  return validated(p);
}

}  // namespace qsynth::io
