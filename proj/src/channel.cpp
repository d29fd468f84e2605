#include "asiplab/channel.hpp"

#include <stdexcept>

namespace asiplab {

BroadcastBus::BroadcastBus(int workers, std::size_t capacity,
                           bool duplicate_push_suppression, Index dimension)
    : capacity_(capacity),
      suppress_duplicates_(duplicate_push_suppression),
      dimension_(dimension),
      incarnations_(workers) {
  if (workers < 1)
    throw std::invalid_argument("bus: worker count must be at least 1");
  if (capacity < 1)
    throw std::invalid_argument("bus: inbox capacity must be at least 1");
  inboxes_.reserve(workers);
  for (int i = 0; i < workers; ++i)
    inboxes_.push_back(std::make_unique<Inbox>());
  for (auto& inc : incarnations_) inc.store(0);
}

AsipChannel BroadcastBus::channel(int worker) {
  if (worker < 0 || worker >= workers())
    throw std::invalid_argument("bus: worker id out of range");
  return AsipChannel(this, worker, incarnations_[worker].load());
}

void BroadcastBus::reset_worker(int worker) {
  if (worker < 0 || worker >= workers())
    throw std::invalid_argument("bus: worker id out of range");
  incarnations_[worker].fetch_add(1);
  Inbox& box = *inboxes_[worker];
  std::lock_guard<std::mutex> lock(box.mutex);
  box.queue.clear();
}

void BroadcastBus::push_from(int sender, std::uint64_t incarnation,
                             const AsipEnvelope& env) {
  if (sender < 0 || sender >= workers())
    throw std::invalid_argument("push: sender id out of range");
  if (!env.payload_matches_kind())
    throw std::invalid_argument("push: payload count does not match kind");
  if (dimension_ > 0) {
    if (env.primary.size() != dimension_ ||
        (env.secondary && env.secondary->size() != dimension_))
      throw std::invalid_argument("push: payload dimension mismatch");
  }
  if (suppress_duplicates_ &&
      incarnation != incarnations_[sender].load()) {
    suppressed_.fetch_add(1, std::memory_order_relaxed);
    return;
  }
  pushed_.fetch_add(1, std::memory_order_relaxed);
  for (int i = 0; i < workers(); ++i) {
    if (i == sender) continue;
    Inbox& box = *inboxes_[i];
    std::lock_guard<std::mutex> lock(box.mutex);
    if (box.queue.size() >= capacity_) {
      box.queue.pop_front();
      dropped_.fetch_add(1, std::memory_order_relaxed);
    }
    box.queue.push_back(env);
    delivered_.fetch_add(1, std::memory_order_relaxed);
  }
}

std::optional<AsipEnvelope> BroadcastBus::poll_for(int worker) {
  if (worker < 0 || worker >= workers())
    throw std::invalid_argument("poll: worker id out of range");
  Inbox& box = *inboxes_[worker];
  std::lock_guard<std::mutex> lock(box.mutex);
  if (box.queue.empty()) return std::nullopt;
  AsipEnvelope env = std::move(box.queue.front());
  box.queue.pop_front();
  return env;
}

}  // namespace asiplab
