#pragma once

// Interface queue and frame definitions. Channel access is serialized per
// node with a random pre-transmission jitter; there is no backoff state
// machine and no link-layer acknowledgement.

#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <variant>

#include "manet/engine.hpp"
#include "manet/messages.hpp"

namespace manet {

struct MacParams {
  std::uint32_t queue_capacity = 50;
  double jitter_max = 0.002;   // s
  std::uint32_t header_bytes = 58;
  /// Optional: defer while the medium is sensed busy, then redraw the jitter.
  bool carrier_sense = false;
};

struct Frame {
  NodeId src = 0;
  NodeId dst = kBroadcast;  // unicast frames are broadcasts decoded only by dst
  std::variant<RoutingMessage, DataPacket> payload;
  std::uint64_t size_bits = 0;
  SimTime enqueued_at = 0.0;
  Priority priority = Priority::kControl;

  bool is_data() const { return std::holds_alternative<DataPacket>(payload); }
  const RoutingMessage* control() const { return std::get_if<RoutingMessage>(&payload); }
  const DataPacket* data() const { return std::get_if<DataPacket>(&payload); }
};

inline Frame make_control_frame(NodeId src, NodeId dst, RoutingMessage msg, const MacParams& mac) {
  Frame f;
  f.src = src;
  f.dst = dst;
  f.size_bits = 8ull * (mac.header_bytes + payload_bytes(msg));
  f.payload = std::move(msg);
  f.priority = Priority::kControl;
  return f;
}

inline Frame make_data_frame(NodeId src, NodeId next_hop, const DataPacket& pkt,
                             std::uint32_t packet_bytes, const MacParams& mac) {
  Frame f;
  f.src = src;
  f.dst = next_hop;
  f.size_bits = 8ull * (mac.header_bytes + kIpUdpBytes + packet_bytes);
  f.payload = pkt;
  f.priority = Priority::kData;
  return f;
}

enum class EnqueueResult : std::uint8_t { kAccepted, kDroppedQueueFull };

/// DropTail priority queue: control frames dequeue ahead of data, FIFO
/// within each class. A full queue rejects the arriving frame.
class MacQueue {
 public:
  explicit MacQueue(std::uint32_t capacity = 50) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("queue capacity must be positive");
  }

  std::size_t size() const { return control_.size() + data_.size(); }
  bool empty() const { return size() == 0; }
  std::size_t data_frames() const { return data_.size(); }
  std::uint32_t capacity() const { return capacity_; }

  EnqueueResult push(Frame frame) {
    if (frame.size_bits == 0) throw std::invalid_argument("empty frame");
    if (size() >= capacity_) return EnqueueResult::kDroppedQueueFull;
    (frame.priority == Priority::kControl ? control_ : data_).push_back(std::move(frame));
    return EnqueueResult::kAccepted;
  }

  std::optional<Frame> pop() {
    auto& q = !control_.empty() ? control_ : data_;
    if (q.empty()) return std::nullopt;
    Frame f = std::move(q.front());
    q.pop_front();
    return f;
  }

  /// Removes everything (node death). Visits each discarded frame.
  template <class Fn>
  void clear(Fn&& on_discard) {
    for (auto& f : control_) on_discard(f);
    for (auto& f : data_) on_discard(f);
    control_.clear();
    data_.clear();
  }

 private:
  std::uint32_t capacity_;
  std::deque<Frame> control_;
  std::deque<Frame> data_;
};

}  // namespace manet
