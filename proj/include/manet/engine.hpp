#pragma once

// Discrete-event core: a virtual clock and a time-ordered queue whose ties are
// broken by insertion order.

#include <cstdint>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>
#include <cmath>
#include <utility>
#include <vector>

namespace manet {

/// Seconds of virtual time.
using SimTime = double;

using NodeId = std::uint32_t;
inline constexpr NodeId kBroadcast = std::numeric_limits<NodeId>::max();

struct EventHandle {
  std::uint64_t sequence = 0;
  friend bool operator==(EventHandle, EventHandle) = default;
};

struct RunSummary {
  std::uint64_t dispatched = 0;
  SimTime clock = 0.0;
  /// True when the queue ran dry before reaching the requested end time.
  bool drained = false;
};

/// Time-ordered event queue. `Payload` is whatever the owner dispatches on;
/// the scheduler never inspects it.
template <class Payload>
class Scheduler {
 public:
  SimTime now() const { return now_; }
  std::size_t pending() const { return live_; }

  EventHandle schedule(SimTime at, Payload payload) {
    if (!(at >= now_) || !std::isfinite(at)) {
      throw std::logic_error("event scheduled in the past: at=" + std::to_string(at) +
                             " now=" + std::to_string(now_));
    }
    const std::uint64_t seq = next_sequence_++;
    heap_.push(Entry{at, seq, std::move(payload)});
    state_.push_back(State::kQueued);
    ++live_;
    return EventHandle{seq};
  }

  EventHandle schedule_in(SimTime delay, Payload payload) {
    return schedule(now_ + delay, std::move(payload));
  }

  /// Cancelling an already-dispatched or unknown handle is a no-op.
  void cancel(EventHandle handle) {
    if (handle.sequence < state_.size() && state_[handle.sequence] == State::kQueued) {
      state_[handle.sequence] = State::kCancelled;
      --live_;
    }
  }

  /// Dispatches every event with fire time <= t_end in (time, sequence)
  /// order. `handler(SimTime, Payload&)` may schedule further events.
  template <class Handler>
  RunSummary run_until(SimTime t_end, Handler&& handler) {
    if (!(t_end > 0.0)) throw std::logic_error("run_until requires t_end > 0");
    RunSummary summary;
    while (!heap_.empty()) {
      if (heap_.top().at > t_end) {
        now_ = t_end;
        summary.clock = now_;
        return summary;
      }
      // priority_queue::top is const; the entry is popped right after.
      Entry entry = std::move(const_cast<Entry&>(heap_.top()));
      heap_.pop();
      if (state_[entry.sequence] == State::kCancelled) continue;
      state_[entry.sequence] = State::kDone;
      --live_;
      now_ = entry.at;
      ++summary.dispatched;
      handler(entry.at, entry.payload);
    }
    summary.clock = now_;
    summary.drained = true;
    return summary;
  }

 private:
  struct Entry {
    SimTime at;
    std::uint64_t sequence;
    Payload payload;
  };
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.at != b.at) return a.at > b.at;
      return a.sequence > b.sequence;
    }
  };

  enum class State : std::uint8_t { kQueued, kCancelled, kDone };

  SimTime now_ = 0.0;
  std::uint64_t next_sequence_ = 0;
  std::priority_queue<Entry, std::vector<Entry>, Later> heap_;
  std::vector<State> state_;
  std::size_t live_ = 0;
};

}  // namespace manet
