#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <mutex>
#include <numeric>
#include <random>
#include <shared_mutex>
#include <string>
#include <vector>

#include "gridsafe/env/environment.hpp"
#include "gridsafe/error.hpp"

namespace gridsafe {

struct RefinementConfig {
  double reward_threshold = 0.3;  // r_thr
  int period = 200;               // f, training steps between invocations
  int max_rounds = 3;             // K
  std::size_t max_samples = 512;  // N_LLM
  std::size_t top_k = 5;
  double overload_threshold = 100.0;  // percent
  double v_low = 0.95;
  double v_high = 1.05;

  void validate() const {
    if (period < 1 || max_rounds < 1 || max_samples < 1)
      throw InvariantError("refine: period, max_rounds and max_samples must be >= 1");
    if (top_k < 1) throw InvariantError("refine: top_k must be >= 1");
    if (!(v_low < v_high)) throw InvariantError("refine: v_low must be below v_high");
  }
};

/// A stored transition with its append sequence number.
struct ReplayItem {
  std::uint64_t seq = 0;
  Transition transition;
};

/// FIFO ring of transitions. Appends are serialized; readers take shared
/// locks. Stored transitions are never modified; refinement appends new
/// ones and only flips the per-item "processed" mark.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw InvariantError("replay buffer capacity must be > 0");
  }

  std::size_t capacity() const { return capacity_; }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return slots_.size();
  }

  std::uint64_t appended() const {
    std::shared_lock lock(mutex_);
    return next_seq_;
  }

  /// Returns the sequence number assigned to `t`.
  std::uint64_t push(Transition t) {
    std::unique_lock lock(mutex_);
    if (slots_.size() == capacity_) slots_.pop_front();
    slots_.push_back({ReplayItem{next_seq_, std::move(t)}, false});
    return next_seq_++;
  }

  /// Item `i` counted from the oldest stored entry.
  ReplayItem at(std::size_t i) const {
    std::shared_lock lock(mutex_);
    if (i >= slots_.size()) throw UsageError("replay buffer index out of range");
    return slots_[i].item;
  }

  std::vector<ReplayItem> snapshot() const {
    std::shared_lock lock(mutex_);
    std::vector<ReplayItem> out;
    out.reserve(slots_.size());
    for (const auto& s : slots_) out.push_back(s.item);
    return out;
  }

  /// B distinct positions, uniform without replacement.
  template <class Rng>
  std::vector<std::size_t> sample_indices(std::size_t batch, Rng& rng) const {
    std::shared_lock lock(mutex_);
    if (batch > slots_.size())
      throw UsageError("sample: batch " + std::to_string(batch) + " exceeds buffer size " +
                       std::to_string(slots_.size()));
    std::vector<std::size_t> idx(slots_.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    // Partial Fisher-Yates over the first `batch` positions.
    for (std::size_t i = 0; i < batch; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(batch);
    return idx;
  }

  template <class Rng>
  std::vector<Transition> sample(std::size_t batch, Rng& rng) const {
    const auto idx = sample_indices(batch, rng);
    std::shared_lock lock(mutex_);
    std::vector<Transition> out;
    out.reserve(batch);
    for (std::size_t i : idx) out.push_back(slots_[i].item.transition);
    return out;
  }

  /// Stored, unrefined, not yet processed transitions with r < r_thr,
  /// newest first, at most N_LLM of them.
  std::vector<ReplayItem> select_candidates(const RefinementConfig& cfg) const {
    std::shared_lock lock(mutex_);
    std::vector<ReplayItem> out;
    for (auto it = slots_.rbegin(); it != slots_.rend() && out.size() < cfg.max_samples; ++it) {
      const Transition& t = it->item.transition;
      if (it->processed || t.refined || !(t.reward < cfg.reward_threshold)) continue;
      out.push_back(it->item);
    }
    return out;
  }

  /// Marks the item with sequence `seq` as handed to refinement; false when
  /// it has already been evicted.
  bool mark_processed(std::uint64_t seq) {
    std::unique_lock lock(mutex_);
    if (slots_.empty() || seq < slots_.front().item.seq) return false;
    const std::size_t pos = static_cast<std::size_t>(seq - slots_.front().item.seq);
    if (pos >= slots_.size()) return false;
    slots_[pos].processed = true;
    return true;
  }

 private:
  struct Slot {
    ReplayItem item;
    bool processed = false;
  };

  std::size_t capacity_;
  std::uint64_t next_seq_ = 0;
  std::deque<Slot> slots_;
  mutable std::shared_mutex mutex_;
};

}  // namespace gridsafe
