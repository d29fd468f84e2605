#pragma once

#include "asiplab/envelope.hpp"

#include <atomic>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

namespace asiplab {

class AsipChannel;

// Best-effort broadcast fabric between the workers of one gang. Each
// worker owns a bounded FIFO inbox; push appends a copy of the envelope
// to every other worker's inbox and never blocks. A full inbox drops its
// OLDEST entry to admit the newcomer. Delivery preserves per
// (sender, receiver) send order; a worker never sees its own envelopes.
class BroadcastBus {
 public:
  static constexpr std::size_t kDefaultCapacity = 1024;

  BroadcastBus(int workers, std::size_t capacity = kDefaultCapacity,
               bool duplicate_push_suppression = false, Index dimension = 0);

  int workers() const { return static_cast<int>(inboxes_.size()); }
  std::size_t capacity() const { return capacity_; }

  // Channel bound to the worker's current incarnation. After
  // reset_worker, channels issued earlier are stale: with duplicate push
  // suppression on, their pushes are silently discarded.
  AsipChannel channel(int worker);

  // Clears the worker's inbox and advances its incarnation.
  void reset_worker(int worker);

  std::uint64_t pushed() const { return pushed_.load(); }
  std::uint64_t delivered() const { return delivered_.load(); }
  std::uint64_t dropped() const { return dropped_.load(); }
  std::uint64_t suppressed() const { return suppressed_.load(); }

 private:
  friend class AsipChannel;

  void push_from(int sender, std::uint64_t incarnation,
                 const AsipEnvelope& env);
  std::optional<AsipEnvelope> poll_for(int worker);

  struct Inbox {
    std::mutex mutex;
    std::deque<AsipEnvelope> queue;
  };

  std::size_t capacity_;
  bool suppress_duplicates_;
  Index dimension_;
  std::vector<std::unique_ptr<Inbox>> inboxes_;
  std::vector<std::atomic<std::uint64_t>> incarnations_;
  std::atomic<std::uint64_t> pushed_{0};
  std::atomic<std::uint64_t> delivered_{0};
  std::atomic<std::uint64_t> dropped_{0};
  std::atomic<std::uint64_t> suppressed_{0};
};

// A worker's handle on the bus. Push broadcasts to the other live
// workers (a no-op in a single-worker gang); poll returns the oldest
// waiting envelope, or nothing, immediately.
class AsipChannel {
 public:
  AsipChannel() = default;

  void push(const AsipEnvelope& env) {
    if (bus_) bus_->push_from(worker_, incarnation_, env);
  }
  std::optional<AsipEnvelope> poll() {
    return bus_ ? bus_->poll_for(worker_) : std::nullopt;
  }

  int worker() const { return worker_; }
  std::uint64_t incarnation() const { return incarnation_; }

 private:
  friend class BroadcastBus;
  AsipChannel(BroadcastBus* bus, int worker, std::uint64_t incarnation)
      : bus_(bus), worker_(worker), incarnation_(incarnation) {}

  BroadcastBus* bus_ = nullptr;
  int worker_ = 0;
  std::uint64_t incarnation_ = 0;
};

}  // namespace asiplab
