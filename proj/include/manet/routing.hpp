#pragma once

// AODV route discovery and maintenance, plus the density-driven RREQ
// forwarding gate (AODV_EXT).
//
// The agent is written against a Host that owns time, the MAC and the random
// streams. Host must provide:
//
//   SimTime now() const;
//   void send_control(NodeId self, NodeId dst, RoutingMessage msg);
//   void send_data(NodeId self, NodeId next_hop, const DataPacket& pkt);
//   EventHandle schedule_rreq_timeout(NodeId self, NodeId dest, SimTime at);
//   void cancel(EventHandle h);
//   double draw_gate();                        // R, uniform on [0, 100)
//   void deliver(NodeId self, const DataPacket& pkt);
//   void drop_data(NodeId self, const DataPacket& pkt, DropCause cause);
//   void drop_control(NodeId self, const RoutingMessage& msg);
//   void trace_gate(NodeId self, SimTime t, const Rreq& rreq, const GateDecision& d);

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "manet/engine.hpp"
#include "manet/messages.hpp"
#include "manet/traffic.hpp"

namespace manet {

struct AodvParams {
  double hello_interval = 1.0;     // s; 0 disables beacons
  double neighbor_window = 2.5;    // s
  std::uint32_t rreq_retries = 2;
  double reply_wait = 1.0;         // s
  double route_lifetime = 10.0;    // s
  std::uint32_t buffer_capacity = 64;
  double buffer_timeout = 30.0;    // s
  std::uint32_t net_diameter = 35; // max RREQ hops
  std::uint32_t data_ttl = 35;     // max data hops
  double seen_lifetime = 30.0;     // s a (originator, rreq_id) is remembered
};

struct ExtParams {
  std::uint32_t d = 5;
  double c_f = 1.0;
};

inline void validate(const ExtParams& p) {
  if (p.d < 1) throw std::invalid_argument("ext.d must be >= 1");
  if (!(p.c_f > 0.0 && p.c_f <= 1.0)) throw std::invalid_argument("ext.c_f must lie in (0, 1]");
}

/// Forwarding probability in percent: (100 / beta) * d * c_f. Only defined
/// above the density threshold.
inline double forwarding_probability(std::size_t beta, std::uint32_t d, double c_f) {
  if (beta <= d) throw std::logic_error("forwarding_probability requires beta > d");
  if (!(c_f > 0.0 && c_f <= 1.0)) throw std::logic_error("c_f must lie in (0, 1]");
  return (100.0 / static_cast<double>(beta)) * (static_cast<double>(d) * c_f);
}

struct GateDecision {
  bool forward = true;
  std::size_t beta = 0;
  std::optional<double> p_i;  // set only when beta > d
  std::optional<double> r;    // set only when a draw was consumed
};

/// Sparse neighbourhoods always forward without consuming a draw; dense ones
/// forward iff R < p_i.
template <class Draw>
GateDecision ext_forward_decision(std::size_t beta, const ExtParams& params, Draw&& draw) {
  GateDecision g;
  g.beta = beta;
  if (beta <= params.d) return g;
  g.p_i = forwarding_probability(beta, params.d, params.c_f);
  g.r = draw();
  g.forward = *g.r < *g.p_i;
  return g;
}

/// One-hop neighbours by last HELLO time.
class NeighborTable {
 public:
  explicit NeighborTable(std::size_t nodes = 0) : last_heard_(nodes, kNever) {}

  void heard(NodeId n, SimTime t) {
    if (n >= last_heard_.size()) last_heard_.resize(n + 1, kNever);
    last_heard_[n] = t;
  }

  std::size_t count(SimTime t, double window) const {
    std::size_t c = 0;
    for (SimTime h : last_heard_) {
      if (h != kNever && h >= t - window) ++c;
    }
    return c;
  }

  bool is_neighbor(NodeId n, SimTime t, double window) const {
    return n < last_heard_.size() && last_heard_[n] != kNever && last_heard_[n] >= t - window;
  }

  /// Forgets neighbours silent for longer than `window`; returns them.
  std::vector<NodeId> expire(SimTime t, double window) {
    std::vector<NodeId> lost;
    for (NodeId n = 0; n < last_heard_.size(); ++n) {
      if (last_heard_[n] != kNever && last_heard_[n] < t - window) {
        last_heard_[n] = kNever;
        lost.push_back(n);
      }
    }
    return lost;
  }

 private:
  static constexpr SimTime kNever = -std::numeric_limits<double>::infinity();
  std::vector<SimTime> last_heard_;
};

struct RouteEntry {
  NodeId destination = 0;
  NodeId next_hop = 0;
  std::uint32_t hop_count = 0;
  std::uint32_t dest_seq = 0;
  SimTime expires_at = 0.0;
  bool valid = false;
  bool known = false;  // an entry exists, valid or not
};

class RoutingTable {
 public:
  explicit RoutingTable(std::size_t nodes = 0) : entries_(nodes) {}

  const RouteEntry* find(NodeId dest) const {
    if (dest >= entries_.size() || !entries_[dest].known) return nullptr;
    return &entries_[dest];
  }

  const RouteEntry* valid_route(NodeId dest, SimTime now) const {
    const RouteEntry* e = find(dest);
    return e && e->valid && e->expires_at > now ? e : nullptr;
  }

  /// Installs or refreshes a route if it is fresher (higher sequence number),
  /// equally fresh but shorter, or replaces an unusable entry. Returns true
  /// when the table changed.
  bool offer(NodeId dest, NodeId next_hop, std::uint32_t hops, std::uint32_t seq, SimTime expires,
             SimTime now) {
    RouteEntry& e = slot(dest);
    const bool usable = e.known && e.valid && e.expires_at > now;
    bool take = !e.known;
    if (e.known) {
      if (seq > e.dest_seq) take = true;
      else if (seq == e.dest_seq && (!usable || hops < e.hop_count)) take = true;
    }
    if (!take) return false;
    e = RouteEntry{dest, next_hop, hops, seq, expires, true, true};
    return true;
  }

  void refresh(NodeId dest, SimTime expires) {
    if (dest < entries_.size() && entries_[dest].known && entries_[dest].valid) {
      entries_[dest].expires_at = std::max(entries_[dest].expires_at, expires);
    }
  }

  /// Invalidates every valid route through `next_hop`, bumping each
  /// destination sequence number. Returns (destination, new seq) pairs.
  std::vector<std::pair<NodeId, std::uint32_t>> break_link(NodeId next_hop, SimTime now) {
    std::vector<std::pair<NodeId, std::uint32_t>> lost;
    for (auto& e : entries_) {
      if (e.known && e.valid && e.next_hop == next_hop && e.expires_at > now) {
        e.valid = false;
        ++e.dest_seq;
        lost.emplace_back(e.destination, e.dest_seq);
      }
    }
    return lost;
  }

  /// Invalidates the route to `dest` if it goes through `via`.
  bool invalidate_via(NodeId dest, NodeId via, std::uint32_t seq, SimTime now) {
    if (dest >= entries_.size()) return false;
    RouteEntry& e = entries_[dest];
    if (!(e.known && e.valid && e.next_hop == via && e.expires_at > now)) return false;
    e.valid = false;
    e.dest_seq = std::max(e.dest_seq, seq);
    return true;
  }

  /// Snapshot helper: next hop toward `dest` if valid.
  std::optional<NodeId> next_hop(NodeId dest, SimTime now) const {
    if (auto* e = valid_route(dest, now)) return e->next_hop;
    return std::nullopt;
  }

 private:
  RouteEntry& slot(NodeId dest) {
    if (dest >= entries_.size()) entries_.resize(dest + 1);
    return entries_[dest];
  }
  std::vector<RouteEntry> entries_;
};

/// (originator, rreq_id) pairs already processed, remembered for a bounded
/// time. Records "seen", not "forwarded".
class RreqSeenCache {
 public:
  bool insert(NodeId originator, std::uint32_t rreq_id, SimTime t) {
    return seen_.emplace(key(originator, rreq_id), t).second;
  }
  bool contains(NodeId originator, std::uint32_t rreq_id) const {
    return seen_.contains(key(originator, rreq_id));
  }
  void prune(SimTime t, double lifetime) {
    std::erase_if(seen_, [&](const auto& kv) { return kv.second < t - lifetime; });
  }
  std::size_t size() const { return seen_.size(); }

 private:
  static std::uint64_t key(NodeId o, std::uint32_t id) {
    return (static_cast<std::uint64_t>(o) << 32) | id;
  }
  std::map<std::uint64_t, SimTime> seen_;
};

enum class SendOutcome : std::uint8_t { kForwarded, kBuffered, kDropped };
enum class RreqOutcome : std::uint8_t {
  kReplied,
  kForwarded,
  kSuppressedDuplicate,
  kSuppressedByGate,
  kDroppedTtl,
};
enum class RrepOutcome : std::uint8_t { kConsumedAtSource, kForwarded, kDroppedNoReverseRoute };

template <class Host>
class AodvAgent {
 public:
  AodvAgent(NodeId self, std::size_t node_count, Host& host, const AodvParams& aodv,
            const ExtParams& ext, bool ext_enabled)
      : self_(self),
        host_(&host),
        aodv_(aodv),
        ext_(ext),
        ext_enabled_(ext_enabled),
        neighbors_(node_count),
        routes_(node_count) {}

  NodeId id() const { return self_; }
  bool ext_enabled() const { return ext_enabled_; }
  const RoutingTable& routes() const { return routes_; }
  const NeighborTable& neighbors() const { return neighbors_; }
  const RreqSeenCache& seen() const { return seen_; }
  std::size_t buffered() const { return buffer_.size(); }
  bool discovery_pending(NodeId dest) const { return pending_.contains(dest); }
  std::uint32_t sequence_number() const { return own_seq_; }

  std::size_t neighbor_count(SimTime t) const { return neighbors_.count(t, aodv_.neighbor_window); }

  SendOutcome send_data(const DataPacket& pkt) {
    if (pkt.src == pkt.dst) throw std::logic_error("send_data to self");
    const SimTime now = host_->now();
    if (const RouteEntry* r = routes_.valid_route(pkt.dst, now)) {
      routes_.refresh(pkt.dst, now + aodv_.route_lifetime);
      host_->send_data(self_, r->next_hop, pkt);
      return SendOutcome::kForwarded;
    }
    expire_buffer(now);
    if (buffer_.size() >= aodv_.buffer_capacity) {
      host_->drop_data(self_, pkt, DropCause::kBufferTimeout);
      return SendOutcome::kDropped;
    }
    buffer_.push_back(Buffered{pkt, now});
    if (!pending_.contains(pkt.dst)) originate_rreq(pkt.dst, 0);
    return SendOutcome::kBuffered;
  }

  RreqOutcome process_rreq(const Rreq& rreq, NodeId previous_hop) {
    const SimTime now = host_->now();
    if (!seen_.insert(rreq.originator, rreq.rreq_id, now)) {
      return RreqOutcome::kSuppressedDuplicate;
    }
    routes_.offer(rreq.originator, previous_hop, rreq.hop_count + 1, rreq.originator_seq,
                  now + aodv_.route_lifetime, now);

    if (rreq.destination == self_) {
      own_seq_ = std::max(own_seq_, rreq.dest_seq_known) + 1;
      send_rrep(Rrep{rreq.originator, self_, own_seq_, 0, aodv_.route_lifetime});
      return RreqOutcome::kReplied;
    }
    if (const RouteEntry* r = routes_.valid_route(rreq.destination, now);
        r && r->dest_seq >= rreq.dest_seq_known) {
      send_rrep(Rrep{rreq.originator, rreq.destination, r->dest_seq, r->hop_count,
                     r->expires_at - now});
      return RreqOutcome::kReplied;
    }
    if (rreq.hop_count + 1 >= aodv_.net_diameter) return RreqOutcome::kDroppedTtl;

    if (ext_enabled_) {
      const GateDecision g = ext_forward_decision(neighbor_count(now), ext_,
                                                  [this] { return host_->draw_gate(); });
      host_->trace_gate(self_, now, rreq, g);
      if (!g.forward) return RreqOutcome::kSuppressedByGate;
    }
    Rreq fwd = rreq;
    fwd.hop_count += 1;
    host_->send_control(self_, kBroadcast, fwd);
    return RreqOutcome::kForwarded;
  }

  RrepOutcome process_rrep(const Rrep& rrep, NodeId previous_hop) {
    const SimTime now = host_->now();
    const double life = rrep.lifetime > 0.0 ? rrep.lifetime : aodv_.route_lifetime;
    routes_.offer(rrep.destination, previous_hop, rrep.hop_count + 1, rrep.dest_seq, now + life,
                  now);
    if (rrep.originator == self_) {
      if (auto it = pending_.find(rrep.destination); it != pending_.end()) {
        host_->cancel(it->second.timeout);
        pending_.erase(it);
      }
      flush_buffer(rrep.destination);
      return RrepOutcome::kConsumedAtSource;
    }
    const RouteEntry* back = routes_.valid_route(rrep.originator, now);
    Rrep fwd = rrep;
    fwd.hop_count += 1;
    if (!back) {
      host_->drop_control(self_, fwd);
      return RrepOutcome::kDroppedNoReverseRoute;
    }
    routes_.refresh(rrep.originator, now + aodv_.route_lifetime);
    host_->send_control(self_, back->next_hop, fwd);
    return RrepOutcome::kForwarded;
  }

  /// Invalidates routes through the RERR's sender and passes the error on
  /// once, listing only entries that actually changed here.
  void process_rerr(const Rerr& rerr, NodeId previous_hop) {
    const SimTime now = host_->now();
    Rerr onward;
    for (const auto& [dest, seq] : rerr.unreachable) {
      if (routes_.invalidate_via(dest, previous_hop, seq, now)) {
        onward.unreachable.emplace_back(dest, routes_.find(dest)->dest_seq);
      }
    }
    if (!onward.unreachable.empty()) host_->send_control(self_, kBroadcast, std::move(onward));
  }

  void process_hello(const Hello& hello) { neighbors_.heard(hello.sender, host_->now()); }

  /// A data frame addressed to this node.
  void process_data(DataPacket pkt) {
    const SimTime now = host_->now();
    if (pkt.dst == self_) {
      host_->deliver(self_, pkt);
      return;
    }
    if (pkt.hops + 1 >= aodv_.data_ttl) {
      host_->drop_data(self_, pkt, DropCause::kTtl);
      return;
    }
    const RouteEntry* r = routes_.valid_route(pkt.dst, now);
    if (!r) {
      host_->drop_data(self_, pkt, DropCause::kNoRoute);
      const RouteEntry* stale = routes_.find(pkt.dst);
      host_->send_control(self_, kBroadcast,
                          Rerr{{{pkt.dst, stale ? stale->dest_seq + 1 : 0}}});
      return;
    }
    routes_.refresh(pkt.dst, now + aodv_.route_lifetime);
    routes_.refresh(pkt.src, now + aodv_.route_lifetime);
    pkt.hops += 1;
    host_->send_data(self_, r->next_hop, pkt);
  }

  /// Emits a HELLO and ages the neighbour table; losing a neighbour that
  /// carried routes triggers a RERR.
  void on_hello_tick() {
    const SimTime now = host_->now();
    host_->send_control(self_, kBroadcast, Hello{self_});
    for (NodeId lost : neighbors_.expire(now, aodv_.neighbor_window)) on_neighbor_lost(lost);
    seen_.prune(now, aodv_.seen_lifetime);
  }

  /// Returns true when a RERR was sent.
  bool on_neighbor_lost(NodeId lost) {
    auto broken = routes_.break_link(lost, host_->now());
    if (broken.empty()) return false;
    host_->send_control(self_, kBroadcast, Rerr{std::move(broken)});
    return true;
  }

  void on_rreq_timeout(NodeId dest) {
    auto it = pending_.find(dest);
    if (it == pending_.end()) return;
    const SimTime now = host_->now();
    if (routes_.valid_route(dest, now)) {
      pending_.erase(it);
      flush_buffer(dest);
      return;
    }
    const std::uint32_t attempt = it->second.attempt;
    pending_.erase(it);
    if (attempt < aodv_.rreq_retries) {
      originate_rreq(dest, attempt + 1);
      return;
    }
    // Discovery failed: everything waiting for this destination is lost.
    std::deque<Buffered> keep;
    for (auto& b : buffer_) {
      if (b.pkt.dst == dest) host_->drop_data(self_, b.pkt, DropCause::kNoRoute);
      else keep.push_back(std::move(b));
    }
    buffer_ = std::move(keep);
  }

  /// Node death: buffered packets are lost.
  void shutdown() {
    for (auto& b : buffer_) host_->drop_data(self_, b.pkt, DropCause::kNodeDead);
    buffer_.clear();
    for (auto& [dest, p] : pending_) host_->cancel(p.timeout);
    pending_.clear();
  }

 private:
  struct Buffered {
    DataPacket pkt;
    SimTime since;
  };
  struct Discovery {
    std::uint32_t attempt = 0;
    EventHandle timeout;
  };

  void originate_rreq(NodeId dest, std::uint32_t attempt) {
    const SimTime now = host_->now();
    ++own_seq_;
    ++rreq_id_;
    const RouteEntry* known = routes_.find(dest);
    Rreq rreq{self_, own_seq_, rreq_id_, dest, known ? known->dest_seq : 0, 0};
    seen_.insert(self_, rreq_id_, now);
    pending_[dest] = Discovery{attempt, host_->schedule_rreq_timeout(self_, dest, now + aodv_.reply_wait)};
    host_->send_control(self_, kBroadcast, rreq);
  }

  void send_rrep(const Rrep& rrep) {
    const SimTime now = host_->now();
    const RouteEntry* back = routes_.valid_route(rrep.originator, now);
    if (!back) {
      host_->drop_control(self_, rrep);
      return;
    }
    host_->send_control(self_, back->next_hop, rrep);
  }

  void expire_buffer(SimTime now) {
    while (!buffer_.empty() && buffer_.front().since + aodv_.buffer_timeout <= now) {
      host_->drop_data(self_, buffer_.front().pkt, DropCause::kBufferTimeout);
      buffer_.pop_front();
    }
  }

  void flush_buffer(NodeId dest) {
    const SimTime now = host_->now();
    expire_buffer(now);
    const RouteEntry* r = routes_.valid_route(dest, now);
    if (!r) return;
    std::deque<Buffered> keep;
    for (auto& b : buffer_) {
      if (b.pkt.dst == dest) host_->send_data(self_, r->next_hop, b.pkt);
      else keep.push_back(std::move(b));
    }
    buffer_ = std::move(keep);
    routes_.refresh(dest, now + aodv_.route_lifetime);
  }

  NodeId self_;
  Host* host_;
  AodvParams aodv_;
  ExtParams ext_;
  bool ext_enabled_;
  std::uint32_t own_seq_ = 0;
  std::uint32_t rreq_id_ = 0;
  NeighborTable neighbors_;
  RoutingTable routes_;
  RreqSeenCache seen_;
  std::deque<Buffered> buffer_;
  std::map<NodeId, Discovery> pending_;
};

}  // namespace manet
