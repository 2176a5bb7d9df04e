#pragma once

#include <atomic>
#include <cstddef>
#include <vector>

namespace qsynth::live {

/// Bounded single-producer/single-consumer queue of fixed-size float blocks.
/// Storage is allocated up front; push and pop never allocate.
class BlockRing {
 public:
  BlockRing(std::size_t capacity_blocks, std::size_t block_floats)
      : slots_(capacity_blocks + 1, std::vector<float>(block_floats)) {}

  /// Producer: copies `count` floats in; false when full.
  bool push(const float* data, std::size_t count) noexcept {
    const std::size_t head = head_.load(std::memory_order_relaxed);
    const std::size_t next = (head + 1) % slots_.size();
    if (next == tail_.load(std::memory_order_acquire)) return false;
    auto& slot = slots_[head];
    for (std::size_t i = 0; i < count && i < slot.size(); ++i) slot[i] = data[i];
    head_.store(next, std::memory_order_release);
    return true;
  }

  /// Consumer: the oldest block, or nullptr when empty. Call pop() after use.
  const std::vector<float>* peek() const noexcept {
    const std::size_t tail = tail_.load(std::memory_order_relaxed);
    if (tail == head_.load(std::memory_order_acquire)) return nullptr;
    return &slots_[tail];
  }

  void pop() noexcept { tail_.store((tail_.load(std::memory_order_relaxed) + 1) % slots_.size(), std::memory_order_release); }

 private:
  std::vector<std::vector<float>> slots_;
  std::atomic<std::size_t> head_{0};
  std::atomic<std::size_t> tail_{0};
};

}  // namespace qsynth::live
