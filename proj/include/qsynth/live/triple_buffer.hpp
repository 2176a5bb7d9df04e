#pragma once

#include <array>
#include <atomic>
#include <cstdint>

namespace qsynth::live {

/// Single-writer/single-reader triple buffer. The writer fills back() and
/// publishes; the reader picks up the newest published value with update().
/// Both sides are wait-free. All operations on the shared index are
/// sequentially consistent so callers can order them against other atomics.
template <typename T>
class TripleBuffer {
 public:
  explicit TripleBuffer(const T& initial) : slots_{initial, initial, initial} {}

  /// Writer side: the slot that the next publish() hands over.
  T& back() noexcept { return slots_[back_]; }

  void publish() noexcept {
    back_ = middle_.exchange(static_cast<std::uint8_t>(back_ | kDirty)) & kIndex;
  }

  /// Reader side: swaps in the newest published value, if any.
  bool update() noexcept {
    if (!(middle_.load() & kDirty)) return false;
    front_ = middle_.exchange(front_) & kIndex;
    return true;
  }

  const T& front() const noexcept { return slots_[front_]; }

 private:
  static constexpr std::uint8_t kIndex = 0x3;
  static constexpr std::uint8_t kDirty = 0x4;

  std::array<T, 3> slots_;
  std::uint8_t front_ = 0;
  std::atomic<std::uint8_t> middle_{1};
  std::uint8_t back_ = 2;
};

}  // namespace qsynth::live
