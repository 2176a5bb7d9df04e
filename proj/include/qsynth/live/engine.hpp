#pragma once

// Block renderer for live mode. One audio thread renders fixed-size blocks
// from a looped ConditionedSource; control threads stage whole patch
// snapshots that the audio thread picks up at the next block boundary.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "qsynth/audio.hpp"
#include "qsynth/error.hpp"
#include "qsynth/io/patch_json.hpp"
#include "qsynth/io/wav.hpp"
#include "qsynth/live/spsc_ring.hpp"
#include "qsynth/live/triple_buffer.hpp"
#include "qsynth/pipeline.hpp"
#include "qsynth/synth/patch.hpp"

namespace qsynth::live {

inline constexpr std::size_t kDefaultBlockFrames = 256;

struct EngineConfig {
  double rate_hz = 48'000.0;
  std::size_t block_frames = kDefaultBlockFrames;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> tap_path;  // every rendered block, in order
  io::WavFormat tap_format = io::WavFormat::float32;
  bool realtime = true;  // pace blocks to the wall clock
};

/// Engine state as of one completed block; all fields come from that block.
struct EngineStatus {
  int current_state = 0;  // label on channel 0 at the block's last frame
  double rms = 0.0;
  std::uint64_t block_index = 0;  // blocks rendered so far
  std::uint64_t clip_count = 0;
  std::uint64_t patch_hash = 0;
  bool running = false;
};

/// Throws ParameterError unless `patch` can render `source` without error.
inline void check_compatible(const synth::SynthPatch& patch, const ConditionedSource& source) {
  synth::validate(patch);
  if (patch.voices.size() != static_cast<std::size_t>(source.n_states()))
    throw ParameterError("patch has " + std::to_string(patch.voices.size()) + " voices but the source has " +
                         std::to_string(source.n_states()) + " states");
  if (patch.engine && *patch.engine != source.engine)
    throw ParameterError("patch engine does not match the running source");
  if (patch.gate) {
    if (patch.gate->trigger_state > 1) throw ParameterError("gate trigger_state must be 0 or 1");
    const std::size_t needed = source.engine == synth::Engine::four_state ? 2 : 1;
    if (patch.gate->pitches_hz.size() < needed) throw ParameterError("gate needs one pitch per parity value");
  }
}

namespace engine_detail {

/// Single-writer seqlock over EngineStatus. Readers retry on a torn read.
class StatusCell {
 public:
  void store(const EngineStatus& s) noexcept {
    const auto seq = seq_.load(std::memory_order_relaxed);
    seq_.store(seq + 1, std::memory_order_relaxed);
    std::atomic_thread_fence(std::memory_order_release);
    state_.store(s.current_state, std::memory_order_relaxed);
    rms_.store(s.rms, std::memory_order_relaxed);
    block_.store(s.block_index, std::memory_order_relaxed);
    clips_.store(s.clip_count, std::memory_order_relaxed);
    hash_.store(s.patch_hash, std::memory_order_relaxed);
    running_.store(s.running, std::memory_order_relaxed);
    seq_.store(seq + 2, std::memory_order_release);
  }

  EngineStatus load() const noexcept {
    EngineStatus s;
    for (;;) {
      const auto before = seq_.load(std::memory_order_acquire);
      if (before & 1u) continue;
      s.current_state = state_.load(std::memory_order_relaxed);
      s.rms = rms_.load(std::memory_order_relaxed);
      s.block_index = block_.load(std::memory_order_relaxed);
      s.clip_count = clips_.load(std::memory_order_relaxed);
      s.patch_hash = hash_.load(std::memory_order_relaxed);
      s.running = running_.load(std::memory_order_relaxed);
      std::atomic_thread_fence(std::memory_order_acquire);
      if (seq_.load(std::memory_order_relaxed) == before) return s;
    }
  }

 private:
  std::atomic<std::uint64_t> seq_{0};
  std::atomic<int> state_{0};
  std::atomic<double> rms_{0.0};
  std::atomic<std::uint64_t> block_{0};
  std::atomic<std::uint64_t> clips_{0};
  std::atomic<std::uint64_t> hash_{0};
  std::atomic<bool> running_{false};
};

}  // namespace engine_detail

class LiveEngine {
 public:
  /// A complete, immutable rendering setup handed to the audio thread.
  struct Snapshot {
    synth::SynthPatch patch;
    std::uint64_t hash = 0;
    std::shared_ptr<const ConditionedSource> source;
    std::uint64_t source_id = 0;  // changes whenever source does
  };

  LiveEngine(EngineConfig config, const synth::SynthPatch& patch, std::shared_ptr<const ConditionedSource> source)
      : config_(std::move(config)),
        snapshots_(make_snapshot(patch, source)),
        staged_(snapshots_.front()),
        renderer_(std::make_unique<PatchRenderer>(*source, config_.seed)),
        block_(config_.rate_hz, source->channels(), config_.block_frames),
        interleaved_(config_.block_frames * source->channels()) {
    if (config_.block_frames == 0) throw ParameterError("block size must be > 0");
    if (source->rate_hz != config_.rate_hz) throw ParameterError("source rate does not match the engine rate");
    if (config_.tap_path) {
      tap_ = std::make_unique<io::WavStreamWriter>(*config_.tap_path, config_.rate_hz, source->channels(),
                                                   config_.tap_format);
      tap_ring_ = std::make_unique<BlockRing>(kTapRingBlocks, interleaved_.size());
    }
    publish_status();
  }

  LiveEngine(const LiveEngine&) = delete;
  LiveEngine& operator=(const LiveEngine&) = delete;
  ~LiveEngine() { shutdown(); }

  /// Starts the audio thread (and the tap writer) with the transport running.
  void start() {
    if (audio_thread_.joinable()) return;
    running_.store(true, std::memory_order_release);
    quit_.store(false, std::memory_order_release);
    threaded_ = true;
    audio_thread_ = std::thread([this] { audio_loop(); });
    if (tap_) tap_thread_ = std::thread([this] { tap_loop(); });
  }

  /// Stops and joins both threads; the tap file is finalized.
  void shutdown() {
    quit_.store(true, std::memory_order_release);
    if (audio_thread_.joinable()) audio_thread_.join();
    if (tap_thread_.joinable()) tap_thread_.join();
    if (tap_) {
      drain_tap();
      tap_->close();
    }
  }

  void set_transport(bool running) { running_.store(running, std::memory_order_release); }

  bool transport_running() const noexcept { return running_.load(std::memory_order_acquire); }

  /// Stages a new patch (and optionally a new source). Returns the index of
  /// the first block guaranteed to use it. Callers may be on any thread.
  std::uint64_t stage(const synth::SynthPatch& patch, std::shared_ptr<const ConditionedSource> source = nullptr) {
    std::lock_guard lock(stage_mutex_);
    std::uint64_t source_id = staged_.source_id;
    if (!source) {
      source = staged_.source;
    } else if (source != staged_.source) {
      if (source->channels() != staged_.source->channels())
        throw ParameterError("source channel count cannot change while live");
      if (source->rate_hz != config_.rate_hz) throw ParameterError("source rate does not match the engine rate");
      ++source_id;
    }
    staged_ = make_snapshot(patch, std::move(source), source_id);
    snapshots_.back() = staged_;
    snapshots_.publish();
    return blocks_started_.load();
  }

  /// The most recently staged snapshot (what the next block will use).
  Snapshot staged() const {
    std::lock_guard lock(stage_mutex_);
    return staged_;
  }

  EngineStatus status() const noexcept {
    auto s = status_.load();
    s.running = running_.load(std::memory_order_acquire);
    return s;
  }

  /// Total clipped samples; written only by the audio thread.
  std::uint64_t clip_count() const noexcept { return clips_.load(std::memory_order_acquire); }
  std::uint64_t dropped_tap_blocks() const noexcept { return tap_drops_.load(std::memory_order_acquire); }
  std::uint64_t render_errors() const noexcept { return render_errors_.load(std::memory_order_acquire); }

  const EngineConfig& config() const noexcept { return config_; }

  /// Renders one block into the internal buffer. Called by the audio thread,
  /// or directly when no thread has been started. The snapshot is read in
  /// place from the triple buffer; only a source change allocates.
  const AudioBuffer& render_block() {
    // Counting the block before looking for a snapshot makes the value
    // returned by stage() a safe bound (both sides are sequentially consistent).
    blocks_started_.fetch_add(1);
    snapshots_.update();
    const Snapshot& current = snapshots_.front();
    if (current.source_id != source_id_) {
      renderer_ = std::make_unique<PatchRenderer>(*current.source, config_.seed);
      source_id_ = current.source_id;
      position_ = 0;
    }

    const auto& src = *current.source;
    try {
      renderer_->render(current.patch, src, position_, block_, 0, config_.block_frames);
    } catch (const Error&) {
      for (auto& ch : block_.samples) std::fill(ch.begin(), ch.end(), 0.0);
      render_errors_.fetch_add(1, std::memory_order_acq_rel);
    }
    block_.clip_count = 0;
    const auto clipped = hard_clip(block_);
    clips_.fetch_add(clipped, std::memory_order_acq_rel);

    double energy = 0.0;
    for (const auto& ch : block_.samples)
      for (double x : ch) energy += x * x;
    const double rms = std::sqrt(energy / static_cast<double>(block_.channels() * block_.frames()));
    const std::size_t last = (position_ + config_.block_frames - 1) % src.frames();
    position_ = (position_ + config_.block_frames) % src.frames();
    ++blocks_done_;

    status_.store({src.labels[0][last], rms, blocks_done_, clips_.load(std::memory_order_relaxed), current.hash,
                   running_.load(std::memory_order_relaxed)});

    if (tap_ring_) {
      for (std::size_t n = 0; n < block_.frames(); ++n)
        for (std::size_t c = 0; c < block_.channels(); ++c)
          interleaved_[n * block_.channels() + c] = static_cast<float>(block_.samples[c][n]);
      if (!tap_ring_->push(interleaved_.data(), interleaved_.size())) tap_drops_.fetch_add(1, std::memory_order_acq_rel);
      if (!threaded_) drain_tap();
    }
    return block_;
  }

 private:
  static constexpr std::size_t kTapRingBlocks = 1024;

  static Snapshot make_snapshot(const synth::SynthPatch& patch, std::shared_ptr<const ConditionedSource> source,
                                std::uint64_t source_id = 0) {
    if (!source || source->frames() == 0) throw EmptyInputError("live engine needs a non-empty source");
    check_compatible(patch, *source);
    return {patch, io::patch_hash(patch), std::move(source), source_id};
  }

  void publish_status() {
    const auto& s = snapshots_.front();
    status_.store({s.source->labels[0][0], 0.0, 0, 0, s.hash, false});
  }

  void audio_loop() {
    using clock = std::chrono::steady_clock;
    const auto period = std::chrono::duration_cast<clock::duration>(
        std::chrono::duration<double>(static_cast<double>(config_.block_frames) / config_.rate_hz));
    auto deadline = clock::now();
    while (!quit_.load(std::memory_order_acquire)) {
      if (!running_.load(std::memory_order_acquire)) {
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
        deadline = clock::now();
        continue;
      }
      render_block();
      if (config_.realtime) {
        deadline += period;
        const auto now = clock::now();
        if (now - deadline > 8 * period) deadline = now;  // resync after a stall
        std::this_thread::sleep_until(deadline);
      }
    }
  }

  void drain_tap() {
    while (const auto* block = tap_ring_->peek()) {
      tap_->append(*block);
      tap_ring_->pop();
    }
  }

  void tap_loop() {
    while (!quit_.load(std::memory_order_acquire)) {
      drain_tap();
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
  }

  EngineConfig config_;

  // Staging side (any thread, under stage_mutex_).
  mutable std::mutex stage_mutex_;
  TripleBuffer<Snapshot> snapshots_;
  Snapshot staged_;

  // Audio-thread side.
  std::uint64_t source_id_ = 0;
  std::unique_ptr<PatchRenderer> renderer_;
  AudioBuffer block_;
  std::vector<float> interleaved_;
  std::size_t position_ = 0;
  bool threaded_ = false;
  std::uint64_t blocks_done_ = 0;

  std::atomic<std::uint64_t> blocks_started_{0};
  std::atomic<std::uint64_t> clips_{0};
  std::atomic<std::uint64_t> tap_drops_{0};
  std::atomic<std::uint64_t> render_errors_{0};
  std::atomic<bool> running_{false};
  std::atomic<bool> quit_{false};
  engine_detail::StatusCell status_;

  std::unique_ptr<io::WavStreamWriter> tap_;
  std::unique_ptr<BlockRing> tap_ring_;
  std::thread audio_thread_;
  std::thread tap_thread_;
};

}  // namespace qsynth::live
