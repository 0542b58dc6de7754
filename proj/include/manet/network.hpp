#pragma once

// One simulation run: owns the scheduler, the random streams, node state and
// the metrics, and acts as the host for every node's routing agent.

#include <cinttypes>
#include <cstdio>
#include <map>
#include <memory>
#include <type_traits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "manet/engine.hpp"
#include "manet/mac.hpp"
#include "manet/messages.hpp"
#include "manet/mobility.hpp"
#include "manet/radio.hpp"
#include "manet/rng.hpp"
#include "manet/routing.hpp"
#include "manet/scenario.hpp"
#include "manet/traffic.hpp"

namespace manet {

enum class EventKind : std::uint8_t {
  kTxStart,
  kFrameArrival,
  kTxComplete,
  kCbrTick,
  kHelloTick,
  kRouteTimeout,
  kSimEnd,
};

constexpr const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::kTxStart: return "tx-start";
    case EventKind::kFrameArrival: return "frame-arrival";
    case EventKind::kTxComplete: return "tx-complete";
    case EventKind::kCbrTick: return "cbr-tick";
    case EventKind::kHelloTick: return "hello-tick";
    case EventKind::kRouteTimeout: return "route-timeout";
    case EventKind::kSimEnd: return "sim-end";
  }
  return "?";
}

struct Transmission {
  std::uint64_t id = 0;
  Frame frame;
  SimTime start = 0.0;
  SimTime end = 0.0;
};

struct Event {
  EventKind kind = EventKind::kSimEnd;
  NodeId node = kBroadcast;
  std::uint64_t arg = 0;
  std::shared_ptr<const Transmission> tx;
};

struct TraceSinks {
  std::ostream* events = nullptr;
  std::ostream* routing = nullptr;
  std::ostream* waypoints = nullptr;
};

inline const char* frame_kind(const Frame& f) {
  if (f.is_data()) return "DATA";
  switch (control_kind(*f.control())) {
    case ControlKind::kRreq: return "RREQ";
    case ControlKind::kRrep: return "RREP";
    case ControlKind::kRerr: return "RERR";
    case ControlKind::kHello: return "HELLO";
  }
  return "?";
}

class Network {
 public:
  /// Flow id carried by packets injected through originate().
  static constexpr std::uint32_t kAdhocFlow = 0xFFFFFFFFu;

  explicit Network(const ScenarioConfig& config, TraceSinks sinks = {})
      : Network(config,
                Mobility(config.seed, config.nodes, config.mobility), sinks) {}

  Network(const ScenarioConfig& config, Mobility mobility, TraceSinks sinks = {})
      : config_(config),
        sinks_(sinks),
        mobility_(std::move(mobility)),
        channel_(mobility_.size()),
        ledger_(mobility_.size(), config.energy),
        traffic_stream_(config.seed, StreamLabel::kTraffic),
        gate_stream_(config.seed, StreamLabel::kExtGate),
        jitter_stream_(config.seed, StreamLabel::kMacJitter),
        hello_stream_(config.seed, StreamLabel::kHello) {
    config_.nodes = static_cast<std::uint32_t>(mobility_.size());
    validate(config_);
    rx_thresh_ = effective_rx_thresh(config_.radio);
    cs_thresh_ = effective_cs_thresh(config_.radio);
    carrier_range_ = carrier_range(config_.radio);
    const bool ext = config_.protocol == Protocol::kAodvExt;
    nodes_.reserve(config_.nodes);
    for (NodeId n = 0; n < config_.nodes; ++n) {
      nodes_.push_back(std::make_unique<NodeState>(
          config_.mac.queue_capacity,
          AodvAgent<Network>(n, config_.nodes, *this, config_.aodv, config_.ext, ext)));
    }
    flows_ = spawn_flows(config_.nodes, config_.traffic, traffic_stream_);
    bootstrap();
  }

  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;

  // --- running -------------------------------------------------------------

  RunSummary run_until(SimTime t_end) {
    return scheduler_.run_until(t_end, [this](SimTime t, Event& e) { dispatch(t, e); });
  }

  MetricsReport run() {
    run_until(config_.duration);
    return report();
  }

  /// Closes the idle-energy books at the current clock and computes metrics.
  MetricsReport report() {
    for (NodeId n = 0; n < config_.nodes; ++n) {
      if (ledger_.accrue_idle(n, scheduler_.now())) kill(n);
    }
    if (sinks_.waypoints) mobility_.write_waypoints(*sinks_.waypoints, config_.duration);
    return finalize(metrics_, config_.duration, ledger_);
  }

  // --- inspection and scripted input --------------------------------------

  const ScenarioConfig& config() const { return config_; }
  const std::vector<CbrFlow>& flows() const { return flows_; }
  const MetricsAccumulator& metrics() const { return metrics_; }
  const EnergyLedger& energy() const { return ledger_; }
  Mobility& mobility() { return mobility_; }
  AodvAgent<Network>& agent(NodeId n) { return nodes_.at(n)->agent; }
  const MacQueue& queue(NodeId n) const { return nodes_.at(n)->queue; }
  bool transmitting(NodeId n) const { return nodes_.at(n)->busy; }
  std::uint64_t gate_draws() const { return gate_stream_.draws(); }
  std::uint64_t jitter_draws() const { return jitter_stream_.draws(); }
  std::uint64_t transmissions_by(NodeId n) const { return nodes_.at(n)->tx_count; }
  double carrier_sense_range() const { return carrier_range_; }
  std::uint64_t deferrals() const { return deferrals_; }

  /// Data packets currently held somewhere: MAC queues, staged frames,
  /// route-discovery buffers, or on the air towards their next hop.
  std::uint64_t data_in_custody() const {
    std::uint64_t n = data_in_air_;
    for (const auto& ns : nodes_) {
      n += ns->queue.data_frames() + ns->agent.buffered();
      if (ns->staged && ns->staged->is_data()) ++n;
    }
    return n;
  }

  /// True when `b` can decode a frame from `a` at time t.
  bool in_decode_range(NodeId a, NodeId b, SimTime t) {
    return decodable(mobility_.distance(a, b, t));
  }

  /// Queues a raw frame at `node`'s MAC as if its upper layer produced it.
  EnqueueResult inject(NodeId node, Frame frame) { return enqueue(node, std::move(frame)); }

  /// Hands a fresh data packet to the routing layer of `src`.
  SendOutcome originate(NodeId src, NodeId dst) {
    DataPacket pkt{kAdhocFlow, adhoc_seq_++, src, dst, now(), 0};
    metrics_.on_generated();
    return agent(src).send_data(pkt);
  }

  // --- routing host interface ---------------------------------------------

  SimTime now() const { return scheduler_.now(); }

  void send_control(NodeId self, NodeId dst, RoutingMessage msg) {
    if (enqueue(self, make_control_frame(self, dst, std::move(msg), config_.mac)) ==
        EnqueueResult::kDroppedQueueFull) {
      ++metrics_.control_dropped;
    }
  }

  void send_data(NodeId self, NodeId next_hop, const DataPacket& pkt) {
    const std::uint32_t bytes =
        pkt.flow < flows_.size() ? flows_[pkt.flow].packet_bytes : config_.traffic.packet_bytes;
    if (enqueue(self, make_data_frame(self, next_hop, pkt, bytes, config_.mac)) ==
        EnqueueResult::kDroppedQueueFull) {
      metrics_.on_dropped(DropCause::kQueueFull);
    }
  }

  EventHandle schedule_rreq_timeout(NodeId self, NodeId dest, SimTime at) {
    return scheduler_.schedule(at, Event{EventKind::kRouteTimeout, self, dest, nullptr});
  }

  void cancel(EventHandle h) { scheduler_.cancel(h); }

  double draw_gate() { return gate_stream_.uniform(0.0, 100.0); }

  void deliver(NodeId, const DataPacket& pkt) { metrics_.on_delivered(pkt, now()); }

  void drop_data(NodeId, const DataPacket&, DropCause cause) { metrics_.on_dropped(cause); }

  void drop_control(NodeId, const RoutingMessage&) { ++metrics_.control_dropped; }

  void trace_gate(NodeId self, SimTime t, const Rreq& rreq, const GateDecision& g) {
    if (!sinks_.routing) return;
    char buf[192];
    char pi[32] = "-";
    char r[32] = "-";
    if (g.p_i) std::snprintf(pi, sizeof pi, "%.6f", *g.p_i);
    if (g.r) std::snprintf(r, sizeof r, "%.6f", *g.r);
    std::snprintf(buf, sizeof buf, "%.9f\t%u\t%u:%u\t%zu\t%s\t%s\t%s\n", t, self, rreq.originator,
                  rreq.rreq_id, g.beta, pi, r, g.forward ? "forward" : "drop");
    *sinks_.routing << buf;
  }

 private:
  struct NodeState {
    NodeState(std::uint32_t capacity, AodvAgent<Network> a) : queue(capacity), agent(std::move(a)) {}

    MacQueue queue;
    AodvAgent<Network> agent;
    bool busy = false;  // a frame is staged or on the air
    std::optional<Frame> staged;
    EventHandle tx_start;
    EventHandle hello;
    std::uint64_t tx_count = 0;
    bool dead_handled = false;
  };

  void bootstrap() {
    if (config_.aodv.hello_interval > 0.0) {
      for (NodeId n = 0; n < config_.nodes; ++n) {
        const double first = hello_stream_.uniform(0.0, config_.aodv.hello_interval);
        nodes_[n]->hello = scheduler_.schedule(first, Event{EventKind::kHelloTick, n, 0, nullptr});
      }
    }
    for (const auto& f : flows_) {
      if (f.expected_packets() > 0 && f.tick(0) <= config_.duration) {
        scheduler_.schedule(f.tick(0), Event{EventKind::kCbrTick, f.src, f.id, nullptr});
      }
    }
    scheduler_.schedule(config_.duration, Event{EventKind::kSimEnd, kBroadcast, 0, nullptr});
  }

  bool decodable(double d) const {
    return d <= 0.0 || received_power(config_.radio, d) >= rx_thresh_;
  }
  bool sensed(double d) const {
    return d <= 0.0 || received_power(config_.radio, d) >= cs_thresh_;
  }

  EnqueueResult enqueue(NodeId node, Frame frame) {
    NodeState& ns = *nodes_.at(node);
    if (!ledger_.alive(node)) {
      if (const DataPacket* p = frame.data()) drop_data(node, *p, DropCause::kNodeDead);
      return EnqueueResult::kAccepted;
    }
    frame.enqueued_at = now();
    const EnqueueResult r = ns.queue.push(std::move(frame));
    try_dispatch(node);
    return r;
  }

  void try_dispatch(NodeId node) {
    NodeState& ns = *nodes_[node];
    if (ns.busy || ns.queue.empty() || !ledger_.alive(node)) return;
    ns.staged = ns.queue.pop();
    ns.busy = true;
    const double jitter =
        config_.mac.jitter_max > 0.0 ? jitter_stream_.uniform(0.0, config_.mac.jitter_max) : 0.0;
    ns.tx_start = scheduler_.schedule_in(jitter, Event{EventKind::kTxStart, node, 0, nullptr});
  }

  void dispatch(SimTime t, Event& e) {
    if (sinks_.events) trace_event(t, e);
    switch (e.kind) {
      case EventKind::kTxStart: start_transmission(e.node); break;
      case EventKind::kFrameArrival: on_arrival(e.node, *e.tx); break;
      case EventKind::kTxComplete:
        nodes_[e.node]->busy = false;
        try_dispatch(e.node);
        break;
      case EventKind::kCbrTick: on_cbr_tick(static_cast<std::uint32_t>(e.arg), e.node); break;
      case EventKind::kHelloTick: on_hello_tick(e.node); break;
      case EventKind::kRouteTimeout:
        if (ledger_.alive(e.node)) agent(e.node).on_rreq_timeout(static_cast<NodeId>(e.arg));
        break;
      case EventKind::kSimEnd: break;
    }
  }

  void start_transmission(NodeId node) {
    NodeState& ns = *nodes_[node];
    if (!ns.staged) return;
    channel_.prune(node, now() - 2.0 * max_airtime_);
    if (config_.mac.carrier_sense) {
      const SimTime idle_at = channel_.busy_until(node, now());
      if (idle_at > now()) {
        ++deferrals_;
        const double jitter = config_.mac.jitter_max > 0.0
                                  ? jitter_stream_.uniform(0.0, config_.mac.jitter_max)
                                  : 0.0;
        ns.tx_start = scheduler_.schedule(idle_at + jitter,
                                          Event{EventKind::kTxStart, node, 0, nullptr});
        return;
      }
    }
    auto tx = std::make_shared<Transmission>();
    tx->id = next_tx_id_++;
    tx->frame = std::move(*ns.staged);
    ns.staged.reset();
    const Frame& f = tx->frame;
    const SimTime t = now();
    const double air = airtime(f.size_bits, config_.radio.bitrate);
    tx->start = t;
    tx->end = t + air;
    max_airtime_ = std::max(max_airtime_, air);

    ++ns.tx_count;
    ++metrics_.mac_frames_tx;
    if (const RoutingMessage* m = f.control()) {
      ++metrics_.control_tx[static_cast<std::size_t>(control_kind(*m))];
    }
    const bool died = debit(node, tx_energy(f.size_bits, config_.energy, config_.radio.bitrate),
                            EnergyUse::kTx, air);

    channel_.note(node, node, tx->id, tx->start, tx->end);  // half duplex
    const Position here = mobility_.position_at(node, t);
    bool dst_reached = f.dst == kBroadcast;
    for (NodeId j = 0; j < config_.nodes; ++j) {
      if (j == node || !ledger_.alive(j)) continue;
      const double d = euclidean(here, mobility_.position_at(j, t));
      if (!sensed(d)) continue;
      channel_.note(j, node, tx->id, tx->start, tx->end);
      if (!decodable(d)) continue;
      if (j == f.dst) dst_reached = true;
      scheduler_.schedule(tx->end, Event{EventKind::kFrameArrival, j, tx->id, tx});
    }
    if (f.data() && dst_reached) ++data_in_air_;
    if (const DataPacket* p = f.data(); p && !dst_reached) {
      const bool dst_dead = f.dst < config_.nodes && !ledger_.alive(f.dst);
      metrics_.on_dropped(dst_dead ? DropCause::kNodeDead : DropCause::kNoRoute);
    }
    scheduler_.schedule(tx->end, Event{EventKind::kTxComplete, node, tx->id, nullptr});
    if (died) kill(node);
  }

  void on_arrival(NodeId node, const Transmission& tx) {
    const Frame& f = tx.frame;
    const DataPacket* data = f.data();
    const bool addressed = f.dst == node;
    if (data && addressed) --data_in_air_;
    if (!ledger_.alive(node)) {
      if (data && addressed) metrics_.on_dropped(DropCause::kNodeDead);
      return;
    }
    channel_.prune(node, now() - 2.0 * max_airtime_);
    const bool collided = channel_.collided(node, tx.id, tx.start, tx.end);
    const bool died = debit(node, rx_energy(f.size_bits, config_.energy, config_.radio.bitrate),
                            EnergyUse::kRx, tx.end - tx.start);
    if (collided) {
      if (data && addressed) metrics_.on_dropped(DropCause::kCollision);
    } else if (data) {
      if (addressed) agent(node).process_data(*data);
    } else if (addressed || f.dst == kBroadcast) {
      ++metrics_.control_rx;
      handle_control(node, *f.control(), f.src);
    }
    if (died) kill(node);
  }

  void handle_control(NodeId node, const RoutingMessage& msg, NodeId from) {
    auto& a = agent(node);
    std::visit(
        [&](const auto& m) {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, Rreq>) a.process_rreq(m, from);
          else if constexpr (std::is_same_v<T, Rrep>) a.process_rrep(m, from);
          else if constexpr (std::is_same_v<T, Rerr>) a.process_rerr(m, from);
          else a.process_hello(m);
        },
        msg);
  }

  void on_cbr_tick(std::uint32_t flow_id, NodeId src) {
    const CbrFlow& flow = flows_.at(flow_id);
    if (!ledger_.alive(src)) return;
    const std::uint32_t seq = flow_seq_[flow_id]++;
    metrics_.on_generated();
    agent(src).send_data(DataPacket{flow_id, seq, src, flow.dst, now(), 0});
    const SimTime next = flow.tick(seq + 1);
    if (seq + 1 < flow.expected_packets() && next <= config_.duration) {
      scheduler_.schedule(next, Event{EventKind::kCbrTick, src, flow_id, nullptr});
    }
  }

  void on_hello_tick(NodeId node) {
    if (!ledger_.alive(node)) return;
    agent(node).on_hello_tick();
    const double interval = config_.aodv.hello_interval;
    const double next = interval * (1.0 + hello_stream_.uniform(-0.1, 0.1));
    nodes_[node]->hello = scheduler_.schedule_in(next, Event{EventKind::kHelloTick, node, 0, nullptr});
  }

  /// Charges energy, first settling idle time. Returns true if the node died.
  bool debit(NodeId node, double joules, EnergyUse use, double busy_seconds) {
    if (ledger_.accrue_idle(node, now())) return true;
    ledger_.note_busy(node, busy_seconds);
    bool died = false;
    ledger_.drain(node, joules, use, &died);
    return died;
  }

  /// Silences a node whose battery is empty.
  void kill(NodeId node) {
    NodeState& ns = *nodes_[node];
    if (ns.dead_handled) return;
    ns.dead_handled = true;
    ns.queue.clear([&](const Frame& f) {
      if (f.is_data()) metrics_.on_dropped(DropCause::kNodeDead);
    });
    if (ns.staged) {
      if (ns.staged->data()) metrics_.on_dropped(DropCause::kNodeDead);
      ns.staged.reset();
      scheduler_.cancel(ns.tx_start);
    }
    scheduler_.cancel(ns.hello);
    ns.agent.shutdown();
  }

  void trace_event(SimTime t, const Event& e) {
    char buf[256];
    char node[16] = "-";
    if (e.node != kBroadcast) std::snprintf(node, sizeof node, "%u", e.node);
    std::string detail;
    char d[160];
    switch (e.kind) {
      case EventKind::kTxStart: {
        const auto& ns = *nodes_[e.node];
        if (ns.staged) {
          std::snprintf(d, sizeof d, "%s dst=%s bits=%" PRIu64, frame_kind(*ns.staged),
                        ns.staged->dst == kBroadcast ? "*" : std::to_string(ns.staged->dst).c_str(),
                        ns.staged->size_bits);
          detail = d;
        }
        break;
      }
      case EventKind::kFrameArrival:
        std::snprintf(d, sizeof d, "%s from=%u tx=%" PRIu64, frame_kind(e.tx->frame),
                      e.tx->frame.src, e.tx->id);
        detail = d;
        break;
      case EventKind::kTxComplete:
      case EventKind::kCbrTick:
      case EventKind::kRouteTimeout:
        detail = std::to_string(e.arg);
        break;
      default: break;
    }
    std::snprintf(buf, sizeof buf, "%.9f\t%s\t%s\t%s\n", t, node, to_string(e.kind), detail.c_str());
    *sinks_.events << buf;
  }

  ScenarioConfig config_;
  TraceSinks sinks_;
  Scheduler<Event> scheduler_;
  Mobility mobility_;
  Channel channel_;
  EnergyLedger ledger_;
  RandomStream traffic_stream_;
  RandomStream gate_stream_;
  RandomStream jitter_stream_;
  RandomStream hello_stream_;
  double rx_thresh_ = 0.0;
  double cs_thresh_ = 0.0;
  double carrier_range_ = 0.0;
  double max_airtime_ = 0.0;
  std::uint64_t next_tx_id_ = 0;
  std::uint64_t deferrals_ = 0;
  std::uint64_t data_in_air_ = 0;
  std::uint32_t adhoc_seq_ = 0;
  std::vector<std::unique_ptr<NodeState>> nodes_;
  std::vector<CbrFlow> flows_;
  std::map<std::uint32_t, std::uint32_t> flow_seq_;
  MetricsAccumulator metrics_;
};

}  // namespace manet
