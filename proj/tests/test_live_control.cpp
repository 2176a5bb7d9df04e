#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "qsynth/io/trace_file.hpp"
#include "qsynth/io/wav.hpp"
#include "qsynth/live/control.hpp"
#include "qsynth/live/engine.hpp"
#include "support/live_fixture.hpp"

using namespace qsynth;
using namespace qsynth::live;
using json = nlohmann::json;

namespace {

EngineConfig offline_config() {
  EngineConfig c;
  c.realtime = false;
  return c;
}

struct Rig {
  MeasurementTrace trace = qtest::live_trace();
  synth::SynthPatch patch = qtest::drone_patch();
  LiveEngine engine{offline_config(), patch, qtest::live_source(trace, patch)};
  ControlPlane control{engine, trace, std::nullopt, std::nullopt};
  Session session;

  json send(const json& msg) { return control.handle(session, msg); }
  json send_text(std::string_view text) { return control.handle_text(session, text); }
};

bool all_zero(const AudioBuffer& b) {
  for (const auto& ch : b.samples)
    for (double v : ch)
      if (v != 0.0) return false;
  return true;
}

}  // namespace

TEST(Control, SetThenGet) {
  Rig r;
  const auto ack = r.send({{"id", 1}, {"op", "set"}, {"path", "voices.0.freq_hz"}, {"value", 440}});
  ASSERT_TRUE(ack["ok"]) << ack.dump();
  EXPECT_EQ(ack["id"], 1);
  EXPECT_EQ(ack["applied"], 440);
  const auto got = r.send({{"id", 2}, {"op", "get"}, {"path", "voices.0.freq_hz"}});
  EXPECT_EQ(got["value"], 440.0);
  EXPECT_EQ(r.engine.staged().patch.voices[0].freq_hz, 440.0);
}

TEST(Control, GetWholePatch) {
  Rig r;
  const auto got = r.send({{"id", 1}, {"op", "get"}});
  EXPECT_EQ(io::patch_from_json(got["value"]), r.patch);
}

TEST(Control, UnknownPathIsNotFound) {
  Rig r;
  for (const char* path : {"voices.9.amp", "gian", "voices.0.frq", "voices.x.amp", "gate.amp"}) {
    const auto rep = r.send({{"id", 3}, {"op", "set"}, {"path", path}, {"value", 0.5}});
    EXPECT_FALSE(rep["ok"]) << path;
    EXPECT_EQ(rep["err"], "NOT_FOUND") << path << " " << rep.dump();
  }
  EXPECT_EQ(r.send({{"id", 4}, {"op", "get"}, {"path", "voices.9.amp"}})["err"], "NOT_FOUND");
  EXPECT_EQ(r.engine.staged().patch, r.patch);
}

TEST(Control, OutOfRangeReportsLimits) {
  Rig r;
  const auto rep = r.send({{"id", 5}, {"op", "set"}, {"path", "gain"}, {"value", 1.5}});
  EXPECT_EQ(rep["err"], "RANGE");
  EXPECT_EQ(rep["min"], 0.0);
  EXPECT_EQ(rep["max"], 1.0);
  const auto f = r.send({{"id", 6}, {"op", "set"}, {"path", "voices.1.freq_hz"}, {"value", -5}});
  EXPECT_EQ(f["err"], "RANGE");
  EXPECT_NE(f["message"].get<std::string>().find("voices[1].freq_hz"), std::string::npos);
  EXPECT_EQ(r.engine.staged().patch, r.patch);
}

TEST(Control, ParseErrors) {
  Rig r;
  EXPECT_EQ(r.send_text("{not json")["err"], "PARSE");
  EXPECT_TRUE(r.send_text("{not json")["id"].is_null());
  EXPECT_EQ(r.send_text("[1,2]")["err"], "PARSE");
  EXPECT_EQ(r.send({{"id", "a"}, {"op", "get"}})["err"], "PARSE");
  EXPECT_EQ(r.send({{"id", 7}})["err"], "PARSE");
  EXPECT_EQ(r.send({{"id", 8}, {"op", "explode"}})["err"], "PARSE");
  EXPECT_EQ(r.send({{"id", 9}, {"op", "set"}, {"path", "gain"}, {"value", "loud"}})["err"], "PARSE");
  EXPECT_EQ(r.send({{"id", 10}, {"op", "set"}, {"path", "gain"}})["err"], "PARSE");
  EXPECT_EQ(r.send({{"id", 11}, {"op", "set"}, {"path", "voices..amp"}, {"value", 1}})["err"], "PARSE");
  EXPECT_EQ(r.send({{"id", 12}, {"op", "transport"}, {"value", "pause"}})["err"], "PARSE");
}

TEST(Control, InvalidValues) {
  Rig r;
  EXPECT_EQ(r.send({{"id", 1}, {"op", "set"}, {"path", "voices.0.waveform"}, {"value", "triangle"}})["err"], "INVALID");
  // Two-state source cannot take a four-voice patch.
  json four = io::patch_to_json(presets::parity_pings())["voices"];
  EXPECT_EQ(r.send({{"id", 2}, {"op", "set"}, {"path", "voices"}, {"value", four}})["err"], "INVALID");
  EXPECT_EQ(r.engine.staged().patch, r.patch);
}

TEST(Control, WaveformChange) {
  Rig r;
  const auto rep = r.send({{"id", 1}, {"op", "set"}, {"path", "voices.0.waveform"}, {"value", "square"}});
  ASSERT_TRUE(rep["ok"]) << rep.dump();
  EXPECT_EQ(r.engine.staged().patch.voices[0].waveform, synth::Waveform::square);
  EXPECT_EQ(r.send({{"id", 2}, {"op", "get"}, {"path", "voices.0.waveform"}})["value"], "square");
}

TEST(Control, AddOptionalSection) {
  Rig r;
  const json gate = {{"trigger_state", 1}, {"pitches_hz", {880.0}}, {"decay_s", 0.2}, {"amp", 0.3}};
  ASSERT_TRUE(r.send({{"id", 1}, {"op", "set"}, {"path", "gate"}, {"value", gate}})["ok"]);
  ASSERT_TRUE(r.engine.staged().patch.gate);
  EXPECT_EQ(r.engine.staged().patch.gate->amp, 0.3);
}

TEST(Control, AuthRequiredWhenTokenSet) {
  Rig r;
  ControlPlane guarded(r.engine, r.trace, std::nullopt, std::string("s3cret"));
  Session s;
  EXPECT_TRUE(guarded.requires_auth());
  EXPECT_EQ(guarded.handle(s, {{"id", 1}, {"op", "get"}})["err"], "AUTH");
  EXPECT_EQ(guarded.handle(s, {{"id", 2}, {"op", "auth"}, {"token", "nope"}})["err"], "AUTH");
  EXPECT_EQ(guarded.handle(s, {{"id", 3}, {"op", "set"}, {"path", "gain"}, {"value", 0.1}})["err"], "AUTH");
  EXPECT_EQ(r.engine.staged().patch.gain, r.patch.gain);
  EXPECT_TRUE(guarded.handle(s, {{"id", 4}, {"op", "auth"}, {"token", "s3cret"}})["ok"]);
  EXPECT_TRUE(guarded.handle(s, {{"id", 5}, {"op", "set"}, {"path", "gain"}, {"value", 0.1}})["ok"]);
  Session other;
  EXPECT_EQ(guarded.handle(other, {{"id", 6}, {"op", "get"}})["err"], "AUTH");
}

TEST(Control, StatusStoppedAfterTransportStop) {
  Rig r;
  r.engine.set_transport(true);
  r.engine.render_block();
  const auto st = r.send({{"id", 1}, {"op", "status"}});
  ASSERT_TRUE(st["ok"]) << st.dump();
  EXPECT_EQ(st["status"]["block_index"], 1);
  const auto stop = r.send({{"id", 2}, {"op", "transport"}, {"value", "stop"}});
  EXPECT_EQ(stop["running"], false);
  EXPECT_FALSE(r.engine.transport_running());
  EXPECT_EQ(r.send({{"id", 3}, {"op", "status"}})["err"], "STOPPED");
  EXPECT_TRUE(r.send({{"id", 4}, {"op", "transport"}, {"value", "start"}})["running"]);
  EXPECT_TRUE(r.send({{"id", 5}, {"op", "status"}})["ok"]);
}

TEST(Control, StatusFieldsAndMonotoneBlockIndex) {
  Rig r;
  r.engine.set_transport(true);
  std::uint64_t last = 0;
  for (int i = 0; i < 50; ++i) {
    r.engine.render_block();
    const auto m = r.control.status_message();
    EXPECT_EQ(m["op"], "status");
    for (const char* k : {"current_state", "rms", "block_index", "clip_count", "active_patch_hash", "running"})
      ASSERT_TRUE(m.contains(k)) << k;
    const auto b = m["block_index"].get<std::uint64_t>();
    ASSERT_GT(b, last);
    last = b;
    EXPECT_GT(m["rms"].get<double>(), 0.0);
    EXPECT_EQ(m["active_patch_hash"], hash_hex(io::patch_hash(r.patch)));
  }
}

TEST(Control, PatchHashFollowsActivePatch) {
  Rig r;
  r.engine.set_transport(true);
  ASSERT_TRUE(r.send({{"id", 1}, {"op", "set"}, {"path", "gain"}, {"value", 0.3}})["ok"]);
  r.engine.render_block();
  auto p = r.patch;
  p.gain = 0.3;
  EXPECT_EQ(r.control.status_message()["active_patch_hash"], hash_hex(io::patch_hash(p)));
}

TEST(Control, ClipCountMatchesOfflineRender) {
  auto patch = qtest::drone_patch();
  patch.voices[0].amp = patch.voices[1].amp = 1.0;
  patch.gain = 1.0;
  patch.gate = synth::GateConfig{1, {900.0}, 0.3, 0.8, false};
  auto busy = presets::sparse_excitation();
  busy.rate_up = busy.rate_down;
  const auto trace = sim::simulate_two_state(busy, 0.256, 5);  // 12288 frames = 48 blocks
  const auto src = qtest::live_source(trace, patch);
  ASSERT_EQ(src->frames() % 256, 0u);
  LiveEngine engine(offline_config(), patch, src);
  ControlPlane control(engine, trace, std::nullopt, std::nullopt);
  engine.set_transport(true);
  for (std::size_t b = 0; b < src->frames() / 256; ++b) engine.render_block();
  const auto offline = render_offline(*src, patch);
  ASSERT_GT(offline.clip_count, 0u);
  EXPECT_EQ(engine.clip_count(), offline.clip_count);
  EXPECT_EQ(control.status_message()["clip_count"], offline.clip_count);
}

TEST(Control, LoadTrace) {
  Rig r;
  qtest::TempDir dir;
  io::write_trace(qtest::live_trace(0.5, 99), dir / "b.trc");
  const auto rep = r.send({{"id", 1}, {"op", "load_trace"}, {"path", (dir / "b.trc").string()}});
  ASSERT_TRUE(rep["ok"]) << rep.dump();
  EXPECT_EQ(rep["frames"], 24'000);
  EXPECT_EQ(r.engine.staged().source->frames(), 24'000u);
  EXPECT_EQ(r.send({{"id", 2}, {"op", "load_trace"}, {"path", (dir / "none.trc").string()}})["err"], "IO");
  io::detail::write_file(dir / "bad.trc", "garbage\n");
  EXPECT_EQ(r.send({{"id", 3}, {"op", "load_trace"}, {"path", (dir / "bad.trc").string()}})["err"], "IO");
  io::write_trace(sim::simulate_follower(presets::follower(presets::FollowQuality::good), 0.1, 1), dir / "f.trc");
  EXPECT_EQ(r.send({{"id", 4}, {"op", "load_trace"}, {"path", (dir / "f.trc").string()}})["err"], "INVALID");
  EXPECT_EQ(r.engine.staged().source->frames(), 24'000u);
}

TEST(Control, LatchChangeReconditionsSource) {
  Rig r;
  const auto before = r.engine.staged();
  ASSERT_TRUE(r.send({{"id", 1}, {"op", "set"}, {"path", "latch.hysteresis"}, {"value", 0.05}})["ok"]);
  const auto after = r.engine.staged();
  EXPECT_EQ(after.source_id, before.source_id + 1);
  EXPECT_EQ(after.source->latch[0].hysteresis, 0.05);
  ASSERT_TRUE(r.send({{"id", 2}, {"op", "set"}, {"path", "gain"}, {"value", 0.5}})["ok"]);
  EXPECT_EQ(r.engine.staged().source_id, after.source_id);
}

TEST(Control, Subscribe) {
  Rig r;
  auto rep = r.send({{"id", 1}, {"op", "subscribe"}, {"rate_hz", 25}});
  EXPECT_TRUE(rep["subscribed"]);
  EXPECT_TRUE(r.session.subscribed);
  EXPECT_EQ(r.session.status_rate_hz, 25.0);
  rep = r.send({{"id", 2}, {"op", "subscribe"}, {"rate_hz", 1000}});
  EXPECT_EQ(rep["err"], "RANGE");
  EXPECT_EQ(rep["max"], kMaxStatusRateHz);
  EXPECT_EQ(r.send({{"id", 3}, {"op", "subscribe"}, {"rate_hz", 0}})["err"], "RANGE");
  EXPECT_FALSE(r.send({{"id", 4}, {"op", "subscribe"}, {"value", false}})["subscribed"]);
  EXPECT_FALSE(r.session.subscribed);
}

TEST(Control, ExactlyOneReplyPerRequestCarryingItsId) {
  Rig r;
  r.engine.set_transport(true);
  const std::vector<json> requests = {
      {{"id", 10}, {"op", "get"}, {"path", "gain"}},
      {{"id", 11}, {"op", "set"}, {"path", "gain"}, {"value", 2}},
      {{"id", 12}, {"op", "set"}, {"path", "nope"}, {"value", 2}},
      {{"id", 13}, {"op", "status"}},
      {{"id", 14}, {"op", "transport"}, {"value", "stop"}},
      {{"id", 15}, {"op", "status"}},
      {{"id", 16}, {"op", "subscribe"}},
      {{"id", 17}, {"op", "bogus"}},
  };
  for (const auto& q : requests) {
    const auto rep = r.send(q);
    ASSERT_TRUE(rep.is_object());
    EXPECT_EQ(rep["id"], q["id"]);
    EXPECT_TRUE(rep.contains("ok"));
    if (!rep["ok"]) {
      EXPECT_TRUE(rep.contains("err"));
    }
  }
}

TEST(Control, NextBlockUsesStagedPatch) {
  Rig r;
  r.engine.set_transport(true);
  for (int i = 0; i < 5; ++i) ASSERT_FALSE(all_zero(r.engine.render_block()));
  const auto ack = r.send({{"id", 1}, {"op", "set"}, {"path", "gain"}, {"value", 0.0}});
  EXPECT_EQ(ack["block"], 5);
  EXPECT_TRUE(all_zero(r.engine.render_block()));
}

TEST(Engine, BlocksMatchOfflineRender) {
  auto patch = qtest::drone_patch();
  const auto trace = qtest::live_trace(0.256);
  const auto src = qtest::live_source(trace, patch);
  LiveEngine engine(offline_config(), patch, src);
  const auto offline = render_offline(*src, patch);
  for (std::size_t b = 0; b < src->frames() / 256; ++b) {
    const auto& block = engine.render_block();
    for (std::size_t n = 0; n < 256; ++n) ASSERT_EQ(block.samples[0][n], offline.samples[0][b * 256 + n]);
  }
}

TEST(Engine, RejectsIncompatibleConstruction) {
  const auto trace = qtest::live_trace(0.1);
  const auto src = qtest::live_source(trace, qtest::drone_patch());
  EXPECT_THROW(LiveEngine(offline_config(), presets::parity_pings(), src), ParameterError);
  EngineConfig c = offline_config();
  c.rate_hz = 44'100.0;
  EXPECT_THROW(LiveEngine(c, qtest::drone_patch(), src), ParameterError);
  c = offline_config();
  c.tap_path = "/nonexistent/dir/tap.wav";
  EXPECT_THROW(LiveEngine(c, qtest::drone_patch(), src), IoError);
}

// The ack's block index bounds when the change takes effect even with the
// audio thread running: every tapped block from that index on is silent.
TEST(Engine, AckBlockBoundsEffectUnderConcurrency) {
  qtest::TempDir dir;
  const auto trace = qtest::live_trace();
  const auto patch = qtest::drone_patch();
  EngineConfig c;
  c.tap_path = dir / "tap.wav";
  std::uint64_t ack = 0;
  {
    LiveEngine engine(c, patch, qtest::live_source(trace, patch));
    ControlPlane control(engine, trace, std::nullopt, std::nullopt);
    Session s;
    engine.start();
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    const auto rep = control.handle(s, {{"id", 1}, {"op", "set"}, {"path", "gain"}, {"value", 0.0}});
    ASSERT_TRUE(rep["ok"]);
    ack = rep["block"].get<std::uint64_t>();
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    engine.shutdown();
    EXPECT_EQ(engine.dropped_tap_blocks(), 0u);
    EXPECT_EQ(engine.render_errors(), 0u);
  }
  const auto tap = io::read_wav(dir / "tap.wav");
  ASSERT_GT(tap.frames(), (ack + 5) * 256);
  ASSERT_GE(ack, 1u);
  // The block before the ack was already in flight with the old gain.
  bool silent_before = true;
  for (std::size_t n = (ack - 1) * 256; n < ack * 256; ++n) silent_before = silent_before && tap.samples[0][n] == 0.0;
  EXPECT_FALSE(silent_before);
  for (std::size_t n = ack * 256; n < tap.frames(); ++n) ASSERT_EQ(tap.samples[0][n], 0.0) << n;
}

TEST(Engine, ConcurrentStagingIsConsistent) {
  const auto trace = qtest::live_trace();
  const auto patch = qtest::drone_patch();
  EngineConfig c = offline_config();
  LiveEngine engine(c, patch, qtest::live_source(trace, patch));
  ControlPlane control(engine, trace, std::nullopt, std::nullopt);
  engine.start();
  std::vector<std::thread> writers;
  for (int t = 0; t < 4; ++t)
    writers.emplace_back([&control, t] {
      Session s;
      for (int i = 0; i < 200; ++i) {
        const double g = (t * 200 + i) / 1000.0;
        const auto rep = control.handle(s, {{"id", i}, {"op", "set"}, {"path", "gain"}, {"value", g}});
        ASSERT_TRUE(rep["ok"]);
        (void)control.status_message();
      }
    });
  for (auto& w : writers) w.join();
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  const auto staged = engine.staged();
  // Once the writers are done the audio thread must settle on the last staged patch.
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  EXPECT_EQ(engine.status().patch_hash, staged.hash);
  EXPECT_EQ(engine.render_errors(), 0u);
  engine.shutdown();
}
