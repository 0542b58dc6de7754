#pragma once

// Wire-level payloads carried by MAC frames.

#include <cstdint>
#include <utility>
#include <variant>
#include <vector>

#include "manet/engine.hpp"

namespace manet {

struct Rreq {
  NodeId originator = 0;
  std::uint32_t originator_seq = 0;
  std::uint32_t rreq_id = 0;
  NodeId destination = 0;
  std::uint32_t dest_seq_known = 0;  // 0: unknown
  std::uint32_t hop_count = 0;
};

struct Rrep {
  NodeId originator = 0;
  NodeId destination = 0;
  std::uint32_t dest_seq = 0;
  std::uint32_t hop_count = 0;
  double lifetime = 0.0;
};

struct Rerr {
  std::vector<std::pair<NodeId, std::uint32_t>> unreachable;
};

struct Hello {
  NodeId sender = 0;
};

using RoutingMessage = std::variant<Rreq, Rrep, Rerr, Hello>;

struct DataPacket {
  std::uint32_t flow = 0;
  std::uint32_t seq = 0;
  NodeId src = 0;
  NodeId dst = 0;
  SimTime created_at = 0.0;
  std::uint32_t hops = 0;
};

enum class Priority : std::uint8_t { kControl, kData };

enum class ControlKind : std::uint8_t { kRreq, kRrep, kRerr, kHello };

inline ControlKind control_kind(const RoutingMessage& m) {
  return static_cast<ControlKind>(m.index());
}

/// Routing payload sizes in bytes (AODV message + IP/UDP headers).
inline constexpr std::uint32_t kIpUdpBytes = 28;

inline std::uint32_t payload_bytes(const RoutingMessage& m) {
  struct {
    std::uint32_t operator()(const Rreq&) const { return 24; }
    std::uint32_t operator()(const Rrep&) const { return 20; }
    std::uint32_t operator()(const Rerr& e) const {
      return 4 + 8 * static_cast<std::uint32_t>(e.unreachable.size());
    }
    std::uint32_t operator()(const Hello&) const { return 20; }
  } size;
  return std::visit(size, m) + kIpUdpBytes;
}

}  // namespace manet
