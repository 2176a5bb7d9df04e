#pragma once

// Patch documents (JSON). Keys mirror SynthPatch field names; unknown keys
// are rejected. Omitted fields take these defaults:
//
//   gain 0.8, smoothing_s 0, wet_dry 1.0
//   voice: waveform "sine", freq_hz 440, amp 1, attack_s 0.005, decay_s 0.05,
//          mod_index 0, mod_amp 1
//   gate:  trigger_state 1, pitches_hz [880, 1174.66], decay_s 0.5, amp 0.5,
//          volume_gate false
//   drift: f_min_hz 110, f_max_hz 220, amp 0.3

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

#include "qsynth/error.hpp"
#include "qsynth/synth/patch.hpp"

namespace qsynth::io {

using json = nlohmann::json;

namespace patch_detail {

inline void reject_unknown(const json& obj, const std::string& prefix, std::initializer_list<std::string_view> keys) {
  for (const auto& [key, _] : obj.items()) {
    bool known = false;
    for (auto k : keys) known = known || key == k;
    if (!known) throw ValidationError(prefix + key, "unknown key");
  }
}

inline const json& require_object(const json& j, const std::string& field) {
  if (!j.is_object()) throw ValidationError(field, "expected an object");
  return j;
}

inline void read_number(const json& obj, std::string_view key, const std::string& prefix, double& out) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  if (!it->is_number()) throw ValidationError(prefix + std::string(key), "expected a number");
  out = it->get<double>();
}

inline void read_int(const json& obj, std::string_view key, const std::string& prefix, int& out) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  if (!it->is_number_integer()) throw ValidationError(prefix + std::string(key), "expected an integer");
  const auto v = it->get<std::int64_t>();
  if (v < -1'000'000 || v > 1'000'000) throw ValidationError(prefix + std::string(key), "integer out of range");
  out = static_cast<int>(v);
}

inline void read_bool(const json& obj, std::string_view key, const std::string& prefix, bool& out) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  if (!it->is_boolean()) throw ValidationError(prefix + std::string(key), "expected true or false");
  out = it->get<bool>();
}

inline std::vector<double> read_number_array(const json& j, const std::string& field) {
  if (!j.is_array()) throw ValidationError(field, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ValidationError(field + "[" + std::to_string(i) + "]", "expected a number");
    out.push_back(j[i].get<double>());
  }
  return out;
}

inline synth::VoiceConfig parse_voice(const json& j, const std::string& prefix) {
  require_object(j, prefix.substr(0, prefix.size() - 1));
  reject_unknown(j, prefix, {"waveform", "freq_hz", "amp", "attack_s", "decay_s", "mod_index", "mod_amp"});
  synth::VoiceConfig v;
  if (const auto it = j.find("waveform"); it != j.end()) {
    if (!it->is_string()) throw ValidationError(prefix + "waveform", "expected a string");
    const auto w = synth::waveform_from_string(it->get<std::string>());
    if (!w) throw ValidationError(prefix + "waveform", "must be one of sine, saw, square, noise");
    v.waveform = *w;
  }
  read_number(j, "freq_hz", prefix, v.freq_hz);
  read_number(j, "amp", prefix, v.amp);
  read_number(j, "attack_s", prefix, v.attack_s);
  read_number(j, "decay_s", prefix, v.decay_s);
  read_number(j, "mod_index", prefix, v.mod_index);
  read_number(j, "mod_amp", prefix, v.mod_amp);
  return v;
}

}  // namespace patch_detail

/// Builds and validates a patch from an already-parsed JSON document.
inline synth::SynthPatch patch_from_json(const json& doc) {
  using namespace patch_detail;
  if (!doc.is_object()) throw ValidationError("", "patch must be a JSON object");
  reject_unknown(doc, "", {"engine", "voices", "gain", "smoothing_s", "wet_dry", "gate", "drift", "latch"});

  synth::SynthPatch p;
  if (const auto it = doc.find("engine"); it != doc.end()) {
    if (!it->is_string()) throw ValidationError("engine", "expected a string");
    p.engine = synth::engine_from_string(it->get<std::string>());
    if (!p.engine) throw ValidationError("engine", "must be one of two-state, four-state, follower");
  }
  const auto voices = doc.find("voices");
  if (voices == doc.end()) throw ValidationError("voices", "missing required key");
  if (!voices->is_array()) throw ValidationError("voices", "expected an array");
  for (std::size_t i = 0; i < voices->size(); ++i)
    p.voices.push_back(parse_voice((*voices)[i], "voices[" + std::to_string(i) + "]."));

  read_number(doc, "gain", "", p.gain);
  read_number(doc, "smoothing_s", "", p.smoothing_s);
  read_number(doc, "wet_dry", "", p.wet_dry);

  if (const auto it = doc.find("gate"); it != doc.end()) {
    const auto& g = require_object(*it, "gate");
    reject_unknown(g, "gate.", {"trigger_state", "pitches_hz", "decay_s", "amp", "volume_gate"});
    synth::GateConfig gate;
    read_int(g, "trigger_state", "gate.", gate.trigger_state);
    if (const auto pit = g.find("pitches_hz"); pit != g.end()) gate.pitches_hz = read_number_array(*pit, "gate.pitches_hz");
    read_number(g, "decay_s", "gate.", gate.decay_s);
    read_number(g, "amp", "gate.", gate.amp);
    read_bool(g, "volume_gate", "gate.", gate.volume_gate);
    p.gate = gate;
  }
  if (const auto it = doc.find("drift"); it != doc.end()) {
    const auto& d = require_object(*it, "drift");
    reject_unknown(d, "drift.", {"f_min_hz", "f_max_hz", "amp"});
    synth::DriftVoice drift;
    read_number(d, "f_min_hz", "drift.", drift.f_min_hz);
    read_number(d, "f_max_hz", "drift.", drift.f_max_hz);
    read_number(d, "amp", "drift.", drift.amp);
    p.drift = drift;
  }
  if (const auto it = doc.find("latch"); it != doc.end()) {
    const auto& l = require_object(*it, "latch");
    reject_unknown(l, "latch.", {"levels", "hysteresis"});
    synth::LatchSpec latch;
    if (const auto lv = l.find("levels"); lv != l.end()) latch.levels = read_number_array(*lv, "latch.levels");
    if (l.contains("hysteresis")) {
      double h = 0.0;
      read_number(l, "hysteresis", "latch.", h);
      latch.hysteresis = h;
    }
    p.latch = latch;
  }
  synth::validate(p);
  return p;
}

/// Parses and validates a patch document. Malformed JSON and schema
/// violations both surface as ValidationError.
inline synth::SynthPatch parse_patch(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    throw ValidationError("", std::string("malformed JSON: ") + e.what());
  }
  return patch_from_json(doc);
}

inline json voice_to_json(const synth::VoiceConfig& v) {
  return {{"waveform", std::string(synth::to_string(v.waveform))},
          {"freq_hz", v.freq_hz},
          {"amp", v.amp},
          {"attack_s", v.attack_s},
          {"decay_s", v.decay_s},
          {"mod_index", v.mod_index},
          {"mod_amp", v.mod_amp}};
}

/// Complete document (every field explicit), suitable for parse_patch.
inline json patch_to_json(const synth::SynthPatch& p) {
  json doc = json::object();
  if (p.engine) doc["engine"] = std::string(synth::to_string(*p.engine));
  doc["voices"] = json::array();
  for (const auto& v : p.voices) doc["voices"].push_back(voice_to_json(v));
  doc["gain"] = p.gain;
  doc["smoothing_s"] = p.smoothing_s;
  doc["wet_dry"] = p.wet_dry;
  if (p.gate)
    doc["gate"] = {{"trigger_state", p.gate->trigger_state},
                   {"pitches_hz", p.gate->pitches_hz},
                   {"decay_s", p.gate->decay_s},
                   {"amp", p.gate->amp},
                   {"volume_gate", p.gate->volume_gate}};
  if (p.drift) doc["drift"] = {{"f_min_hz", p.drift->f_min_hz}, {"f_max_hz", p.drift->f_max_hz}, {"amp", p.drift->amp}};
  if (p.latch) {
    json l = json::object();
    if (!p.latch->levels.empty()) l["levels"] = p.latch->levels;
    if (p.latch->hysteresis) l["hysteresis"] = *p.latch->hysteresis;
    doc["latch"] = l;
  }
  return doc;
}

inline std::string serialize_patch(const synth::SynthPatch& p, int indent = 2) { return patch_to_json(p).dump(indent); }

/// FNV-1a 64 over the compact serialization; identifies the active patch.
inline std::uint64_t patch_hash(const synth::SynthPatch& p) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : patch_to_json(p).dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace qsynth::io
