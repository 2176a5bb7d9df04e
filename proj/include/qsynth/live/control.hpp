#pragma once

// JSON control protocol. One request object per message, exactly one reply
// per request, replies carry the request id:
//
//   {"id":1,"op":"auth","token":"..."}
//   {"id":2,"op":"set","path":"voices.0.freq_hz","value":440}
//        -> {"id":2,"ok":true,"applied":440,"block":<first block using it>}
//   {"id":3,"op":"get","path":"gain"}            -> {"id":3,"ok":true,"value":0.8}
//   {"id":4,"op":"transport","value":"stop"}     -> {"id":4,"ok":true,"running":false}
//   {"id":5,"op":"load_trace","path":"a.trc"}    -> {"id":5,"ok":true,"frames":N}
//   {"id":6,"op":"subscribe","rate_hz":10}       -> {"id":6,"ok":true,"rate_hz":10}
//   {"id":7,"op":"status"}                       -> {"id":7,"ok":true,"status":{...}}
//
// Errors: {"id":..,"ok":false,"err":CODE,"message":..} with CODE one of
// PARSE, AUTH, NOT_FOUND, RANGE (adds "min"/"max"), INVALID, STOPPED, IO.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qsynth/error.hpp"
#include "qsynth/io/patch_json.hpp"
#include "qsynth/io/trace_file.hpp"
#include "qsynth/live/engine.hpp"
#include "qsynth/pipeline.hpp"
#include "qsynth/trace.hpp"

namespace qsynth::live {

using json = nlohmann::json;

inline constexpr double kDefaultStatusRateHz = 10.0;
inline constexpr double kMaxStatusRateHz = 100.0;

/// Per-connection protocol state.
struct Session {
  bool authenticated = false;
  bool subscribed = false;
  double status_rate_hz = kDefaultStatusRateHz;
};

/// Shared token from QSYNTH_TOKEN; nullopt (no auth required) when unset or empty.
inline std::optional<std::string> token_from_env() {
  const char* t = std::getenv("QSYNTH_TOKEN");
  if (t == nullptr || *t == '\0') return std::nullopt;
  return std::string(t);
}

inline std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace control_detail {

struct Reply {
  static json ok(const json& id) { return {{"id", id}, {"ok", true}}; }

  static json error(const json& id, std::string_view code, std::string_view message) {
    return {{"id", id}, {"ok", false}, {"err", std::string(code)}, {"message", std::string(message)}};
  }
};

/// Splits "voices.2.freq_hz" into its segments; empty segments are invalid.
inline std::optional<std::vector<std::string>> split_path(std::string_view path) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    const std::size_t dot = path.find('.', start);
    const auto part = path.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start);
    if (part.empty()) return std::nullopt;
    parts.emplace_back(part);
    if (dot == std::string_view::npos) return parts;
    start = dot + 1;
  }
}

inline std::optional<std::size_t> parse_index(const std::string& s) {
  std::size_t v = 0;
  if (!io::detail::parse_int(s, v)) return std::nullopt;
  return v;
}

/// Resolves `parts` inside `doc`. With `create_leaf`, a missing final key in
/// an object is created as null (schema validation decides if it is legal).
inline json* resolve(json& doc, const std::vector<std::string>& parts, bool create_leaf) {
  json* node = &doc;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const bool last = i + 1 == parts.size();
    if (node->is_object()) {
      auto it = node->find(parts[i]);
      if (it == node->end()) {
        if (!(last && create_leaf)) return nullptr;
        node = &(*node)[parts[i]];
      } else {
        node = &*it;
      }
    } else if (node->is_array()) {
      const auto idx = parse_index(parts[i]);
      if (!idx || *idx >= node->size()) return nullptr;
      node = &(*node)[*idx];
    } else {
      return nullptr;
    }
  }
  return node;
}

/// True when `value` may replace `current` without changing its JSON kind.
inline bool same_kind(const json& current, const json& value) {
  if (current.is_null()) return true;
  if (current.is_number()) return value.is_number();
  if (current.is_string()) return value.is_string();
  if (current.is_boolean()) return value.is_boolean();
  if (current.is_array()) return value.is_array();
  if (current.is_object()) return value.is_object();
  return false;
}

}  // namespace control_detail

/// Applies protocol requests to a LiveEngine. All methods are thread-safe;
/// requests are applied in call order.
class ControlPlane {
 public:
  ControlPlane(LiveEngine& engine, MeasurementTrace trace, std::optional<DriftTrace> drift = std::nullopt,
               std::optional<std::string> token = token_from_env())
      : engine_(engine), trace_(std::move(trace)), drift_(std::move(drift)), token_(std::move(token)) {}

  bool requires_auth() const noexcept { return token_.has_value(); }

  /// Handles one raw text frame.
  json handle_text(Session& session, std::string_view text) {
    json msg;
    try {
      msg = json::parse(text.begin(), text.end());
    } catch (const json::exception& e) {
      return control_detail::Reply::error(nullptr, "PARSE", std::string("malformed JSON: ") + e.what());
    }
    return handle(session, msg);
  }

  json handle(Session& session, const json& msg) {
    using control_detail::Reply;
    if (!msg.is_object()) return Reply::error(nullptr, "PARSE", "message must be a JSON object");
    const json id = msg.contains("id") ? msg["id"] : json(nullptr);
    if (!id.is_number_integer() && !id.is_null()) return Reply::error(nullptr, "PARSE", "id must be an integer");
    const auto op_it = msg.find("op");
    if (op_it == msg.end() || !op_it->is_string()) return Reply::error(id, "PARSE", "missing op");
    const std::string op = op_it->get<std::string>();

    if (op == "auth") return handle_auth(session, id, msg);
    if (token_ && !session.authenticated) return Reply::error(id, "AUTH", "authenticate first");

    std::lock_guard lock(mutex_);
    try {
      if (op == "set") return handle_set(id, msg);
      if (op == "get") return handle_get(id, msg);
      if (op == "transport") return handle_transport(id, msg);
      if (op == "load_trace") return handle_load_trace(id, msg);
      if (op == "subscribe") return handle_subscribe(session, id, msg);
      if (op == "status") return handle_status(id);
    } catch (const ValidationError& e) {
      return validation_error(id, e);
    } catch (const IoError& e) {
      return Reply::error(id, "IO", e.what());
    } catch (const ParseError& e) {
      return Reply::error(id, "IO", e.what());
    } catch (const Error& e) {
      return Reply::error(id, "INVALID", e.what());
    }
    return Reply::error(id, "PARSE", "unknown op '" + op + "'");
  }

  /// Pushed status message.
  json status_message() const { return status_json(engine_.status(), true); }

  LiveEngine& engine() noexcept { return engine_; }

 private:
  static json status_json(const EngineStatus& s, bool with_op) {
    json j = {{"current_state", s.current_state},
              {"rms", s.rms},
              {"block_index", s.block_index},
              {"clip_count", s.clip_count},
              {"active_patch_hash", hash_hex(s.patch_hash)},
              {"running", s.running}};
    if (with_op) j["op"] = "status";
    return j;
  }

  static json validation_error(const json& id, const ValidationError& e) {
    using control_detail::Reply;
    const std::string what = e.what();
    if (what.find("unknown key") != std::string::npos) return Reply::error(id, "NOT_FOUND", what);
    if (e.is_range()) {
      auto r = Reply::error(id, "RANGE", what);
      if (e.min()) r["min"] = *e.min();
      if (e.max()) r["max"] = *e.max();
      return r;
    }
    return Reply::error(id, "INVALID", what);
  }

  json handle_auth(Session& session, const json& id, const json& msg) {
    using control_detail::Reply;
    if (!token_) {
      session.authenticated = true;
      return Reply::ok(id);
    }
    const auto it = msg.find("token");
    if (it == msg.end() || !it->is_string() || it->get<std::string>() != *token_)
      return Reply::error(id, "AUTH", "bad token");
    session.authenticated = true;
    return Reply::ok(id);
  }

  static std::optional<std::vector<std::string>> path_of(const json& msg) {
    const auto it = msg.find("path");
    if (it == msg.end() || !it->is_string()) return std::nullopt;
    return control_detail::split_path(it->get<std::string>());
  }

  json handle_set(const json& id, const json& msg) {
    using namespace control_detail;
    const auto parts = path_of(msg);
    if (!parts) return Reply::error(id, "PARSE", "set needs a dotted path");
    const auto value = msg.find("value");
    if (value == msg.end() || !(value->is_number() || value->is_string() || value->is_boolean() ||
                                value->is_array() || value->is_object()))
      return Reply::error(id, "PARSE", "set needs a value");

    const auto staged = engine_.staged();
    json doc = io::patch_to_json(staged.patch);
    json* target = resolve(doc, *parts, true);
    if (target == nullptr) return Reply::error(id, "NOT_FOUND", "no parameter at '" + msg["path"].get<std::string>() + "'");
    if (!same_kind(*target, *value)) return Reply::error(id, "PARSE", "value has the wrong type for this parameter");
    *target = *value;

    const auto patch = io::patch_from_json(doc);
    std::shared_ptr<const ConditionedSource> source;
    if (patch.latch != staged.patch.latch) source = recondition(patch);
    const auto block = engine_.stage(patch, source);
    auto r = Reply::ok(id);
    r["applied"] = *value;
    r["block"] = block;
    return r;
  }

  json handle_get(const json& id, const json& msg) {
    using namespace control_detail;
    json doc = io::patch_to_json(engine_.staged().patch);
    auto r = Reply::ok(id);
    if (!msg.contains("path")) {
      r["value"] = doc;
      return r;
    }
    const auto parts = path_of(msg);
    if (!parts) return Reply::error(id, "PARSE", "path must be a dotted string");
    const json* node = resolve(doc, *parts, false);
    if (node == nullptr) return Reply::error(id, "NOT_FOUND", "no parameter at '" + msg["path"].get<std::string>() + "'");
    r["value"] = *node;
    return r;
  }

  json handle_transport(const json& id, const json& msg) {
    using control_detail::Reply;
    const auto it = msg.find("value");
    if (it == msg.end() || !it->is_string()) return Reply::error(id, "PARSE", "transport needs \"start\" or \"stop\"");
    const auto v = it->get<std::string>();
    if (v != "start" && v != "stop") return Reply::error(id, "PARSE", "transport needs \"start\" or \"stop\"");
    engine_.set_transport(v == "start");
    auto r = Reply::ok(id);
    r["running"] = v == "start";
    return r;
  }

  json handle_load_trace(const json& id, const json& msg) {
    using control_detail::Reply;
    const auto it = msg.find("path");
    if (it == msg.end() || !it->is_string()) return Reply::error(id, "PARSE", "load_trace needs a path");
    auto trace = io::read_trace(it->get<std::string>());
    const auto patch = engine_.staged().patch;
    auto source = std::make_shared<const ConditionedSource>(condition(trace, patch, engine_.config().rate_hz, drift_));
    engine_.stage(patch, source);
    trace_ = std::move(trace);
    auto r = Reply::ok(id);
    r["frames"] = source->frames();
    return r;
  }

  json handle_subscribe(Session& session, const json& id, const json& msg) {
    using control_detail::Reply;
    double rate = kDefaultStatusRateHz;
    if (const auto it = msg.find("rate_hz"); it != msg.end()) {
      if (!it->is_number()) return Reply::error(id, "PARSE", "rate_hz must be a number");
      rate = it->get<double>();
      if (!(rate > 0.0 && rate <= kMaxStatusRateHz)) {
        auto r = Reply::error(id, "RANGE", "rate_hz out of range");
        r["min"] = 0.0;
        r["max"] = kMaxStatusRateHz;
        return r;
      }
    }
    bool on = true;
    if (const auto it = msg.find("value"); it != msg.end()) {
      if (!it->is_boolean()) return Reply::error(id, "PARSE", "value must be true or false");
      on = it->get<bool>();
    }
    session.subscribed = on;
    session.status_rate_hz = rate;
    auto r = Reply::ok(id);
    r["subscribed"] = on;
    r["rate_hz"] = rate;
    return r;
  }

  json handle_status(const json& id) const {
    const auto s = engine_.status();
    if (!s.running) return control_detail::Reply::error(id, "STOPPED", "engine is stopped");
    auto r = control_detail::Reply::ok(id);
    r["status"] = status_json(s, false);
    return r;
  }

  std::shared_ptr<const ConditionedSource> recondition(const synth::SynthPatch& patch) const {
    return std::make_shared<const ConditionedSource>(condition(trace_, patch, engine_.config().rate_hz, drift_));
  }

  LiveEngine& engine_;
  MeasurementTrace trace_;
  std::optional<DriftTrace> drift_;
  std::optional<std::string> token_;
  std::mutex mutex_;
};

}  // namespace qsynth::live
