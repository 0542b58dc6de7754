#pragma once

// CBR flows, delivery tracking and the five headline metrics.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "manet/engine.hpp"
#include "manet/messages.hpp"
#include "manet/radio.hpp"
#include "manet/rng.hpp"

namespace manet {

struct TrafficParams {
  std::uint32_t flows = 10;
  std::uint32_t packet_bytes = 512;
  double rate = 4.0;     // packets/s per flow
  SimTime start = 10.0;
  SimTime stop = 190.0;
};

struct CbrFlow {
  std::uint32_t id = 0;
  NodeId src = 0;
  NodeId dst = 0;
  std::uint32_t packet_bytes = 512;
  double interval = 0.25;
  SimTime start_at = 0.0;
  SimTime stop_at = 0.0;

  /// Time of the k-th packet (k from 0). Computed by multiplication so long
  /// flows do not accumulate rounding drift.
  SimTime tick(std::uint64_t k) const { return start_at + static_cast<double>(k) * interval; }

  /// Packets a flow emits over its whole window when the source stays alive.
  /// The random phase shifts both window ends, so the count depends only on
  /// the window length; the slack absorbs rounding in that subtraction.
  std::uint64_t expected_packets() const {
    return static_cast<std::uint64_t>(std::ceil((stop_at - start_at) / interval - 1e-9));
  }
};

/// Distinct ordered (src, dst) pairs drawn uniformly without replacement.
/// Each flow's window is shifted by a random phase in [0, interval) so that
/// sources do not tick in lockstep; the window length is unchanged.
inline std::vector<CbrFlow> spawn_flows(std::size_t node_count, const TrafficParams& traffic,
                                        RandomStream& stream) {
  if (node_count < 2) throw std::invalid_argument("at least 2 nodes are required");
  const std::uint64_t pairs = node_count * (node_count - 1);
  if (traffic.flows > pairs) {
    throw std::invalid_argument("flow count exceeds the number of ordered node pairs");
  }
  if (!(traffic.rate > 0.0)) throw std::invalid_argument("traffic rate must be positive");
  if (!(traffic.start < traffic.stop)) throw std::invalid_argument("empty traffic window");

  // Partial Fisher-Yates over the implicit pair index space.
  std::vector<std::uint64_t> index(pairs);
  for (std::uint64_t i = 0; i < pairs; ++i) index[i] = i;
  std::vector<CbrFlow> flows;
  for (std::uint32_t f = 0; f < traffic.flows; ++f) {
    const std::uint64_t j = f + stream.below(pairs - f);
    std::swap(index[f], index[j]);
    const std::uint64_t pair = index[f];
    const NodeId src = static_cast<NodeId>(pair / (node_count - 1));
    NodeId dst = static_cast<NodeId>(pair % (node_count - 1));
    if (dst >= src) ++dst;
    flows.push_back(CbrFlow{f, src, dst, traffic.packet_bytes, 1.0 / traffic.rate, traffic.start,
                            traffic.stop});
  }
  for (auto& flow : flows) {
    const double phase = stream.uniform(0.0, flow.interval);
    flow.start_at += phase;
    flow.stop_at += phase;
  }
  return flows;
}

enum class DropCause : std::uint8_t { kQueueFull, kCollision, kNoRoute, kBufferTimeout, kTtl, kNodeDead };
inline constexpr std::size_t kDropCauses = 6;

struct MetricsAccumulator {
  std::uint64_t generated = 0;
  std::uint64_t delivered = 0;
  std::array<std::uint64_t, kDropCauses> dropped_by_cause{};
  std::uint64_t mac_frames_tx = 0;
  std::array<std::uint64_t, 4> control_tx{};  // by ControlKind
  std::uint64_t control_rx = 0;
  std::uint64_t control_dropped = 0;  // routing messages lost to queue/reverse-route failures
  double latency_sum = 0.0;
  std::set<std::pair<std::uint32_t, std::uint32_t>> delivered_ids;

  void on_generated() { ++generated; }

  /// Counts each (flow, seq) once. Returns false for a duplicate.
  bool on_delivered(const DataPacket& p, SimTime t) {
    if (!delivered_ids.emplace(p.flow, p.seq).second) return false;
    ++delivered;
    latency_sum += t - p.created_at;
    return true;
  }

  void on_dropped(DropCause cause) { ++dropped_by_cause[static_cast<std::size_t>(cause)]; }

  std::uint64_t dropped(DropCause cause) const {
    return dropped_by_cause[static_cast<std::size_t>(cause)];
  }

  std::uint64_t dropped_total() const {
    std::uint64_t s = 0;
    for (auto d : dropped_by_cause) s += d;
    return s;
  }

  std::uint64_t control_tx_total() const {
    std::uint64_t s = 0;
    for (auto c : control_tx) s += c;
    return s;
  }

  std::uint64_t tx(ControlKind k) const { return control_tx[static_cast<std::size_t>(k)]; }
};

/// MAC frames transmitted per delivered data packet; empty when nothing was
/// delivered.
inline std::optional<double> mac_load(const MetricsAccumulator& acc) {
  if (acc.delivered == 0) return std::nullopt;
  return static_cast<double>(acc.mac_frames_tx) / static_cast<double>(acc.delivered);
}

struct MetricsReport {
  std::uint64_t dropped_packets = 0;
  double consumed_power = 0.0;  // J, mean per node
  double throughput = 0.0;      // delivered packets per ms
  std::optional<double> mac_load;
  std::uint64_t control_overhead = 0;

  std::uint64_t rreq_tx = 0;
  std::uint64_t rrep_tx = 0;
  std::uint64_t rerr_tx = 0;
  std::uint64_t hello_tx = 0;
  std::uint64_t control_rx = 0;
  std::uint64_t generated = 0;
  std::uint64_t delivered = 0;
  std::uint64_t drop_queue = 0;
  std::uint64_t drop_collision = 0;
  std::uint64_t drop_noroute = 0;
  std::uint64_t drop_buffer = 0;
  std::uint64_t dead_nodes = 0;
  std::uint64_t mac_frames_tx = 0;
  /// generated - delivered - dropped at the end of the run.
  std::uint64_t in_flight = 0;
};

inline MetricsReport finalize(const MetricsAccumulator& acc, SimTime duration,
                              const EnergyLedger& ledger) {
  if (!(duration > 0.0)) throw std::invalid_argument("duration must be positive");
  MetricsReport r;
  r.dropped_packets = acc.dropped_total();
  double energy = 0.0;
  for (NodeId n = 0; n < ledger.size(); ++n) {
    const auto& e = ledger[n];
    energy += e.consumed_tx + e.consumed_rx;
    if (ledger.params().count_idle_in_metric) energy += e.consumed_idle;
    if (!e.alive) ++r.dead_nodes;
  }
  r.consumed_power = ledger.size() ? energy / static_cast<double>(ledger.size()) : 0.0;
  r.throughput = static_cast<double>(acc.delivered) / (duration * 1000.0);
  r.mac_load = mac_load(acc);
  r.rreq_tx = acc.tx(ControlKind::kRreq);
  r.rrep_tx = acc.tx(ControlKind::kRrep);
  r.rerr_tx = acc.tx(ControlKind::kRerr);
  r.hello_tx = acc.tx(ControlKind::kHello);
  r.control_rx = acc.control_rx;
  r.control_overhead = acc.control_tx_total() + acc.control_rx;
  r.generated = acc.generated;
  r.delivered = acc.delivered;
  r.drop_queue = acc.dropped(DropCause::kQueueFull);
  r.drop_collision = acc.dropped(DropCause::kCollision);
  r.drop_noroute = acc.dropped(DropCause::kNoRoute);
  r.drop_buffer = acc.dropped(DropCause::kBufferTimeout);
  r.mac_frames_tx = acc.mac_frames_tx;
  const std::uint64_t settled = acc.delivered + r.dropped_packets;
  if (settled > acc.generated) throw std::logic_error("more packets settled than generated");
  r.in_flight = acc.generated - settled;
  return r;
}

}  // namespace manet
