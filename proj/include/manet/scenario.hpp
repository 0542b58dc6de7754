#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string_view>

#include "manet/mac.hpp"
#include "manet/mobility.hpp"
#include "manet/radio.hpp"
#include "manet/routing.hpp"
#include "manet/traffic.hpp"

namespace manet {

enum class Protocol : std::uint8_t { kAodv, kAodvExt };

constexpr std::string_view to_string(Protocol p) {
  return p == Protocol::kAodv ? "aodv" : "aodv_ext";
}

inline std::optional<Protocol> parse_protocol(std::string_view s) {
  if (s == "aodv") return Protocol::kAodv;
  if (s == "aodv_ext") return Protocol::kAodvExt;
  return std::nullopt;
}

/// Everything one simulation run depends on.
struct ScenarioConfig {
  std::uint32_t nodes = 10;
  MobilityParams mobility;
  RadioParams radio;
  EnergyParams energy;
  MacParams mac;
  AodvParams aodv;
  Protocol protocol = Protocol::kAodv;
  ExtParams ext;
  TrafficParams traffic;
  double duration = 200.0;
  std::uint64_t seed = 1;
};

inline void validate(const ScenarioConfig& c) {
  if (c.nodes < 2) throw std::invalid_argument("sim.nodes must be >= 2");
  if (!(c.duration > 0.0)) throw std::invalid_argument("sim.duration must be positive");
  validate(c.radio);
  validate(c.ext);
  if (!(c.energy.p_tx > 0 && c.energy.p_rx > 0 && c.energy.p_idle > 0 &&
        c.energy.initial_energy > 0)) {
    throw std::invalid_argument("energy parameters must be positive");
  }
  if (c.mac.queue_capacity == 0 || c.mac.header_bytes == 0 || c.mac.jitter_max < 0) {
    throw std::invalid_argument("invalid mac parameters");
  }
  if (c.traffic.flows > static_cast<std::uint64_t>(c.nodes) * (c.nodes - 1)) {
    throw std::invalid_argument("traffic.flows exceeds the number of ordered node pairs");
  }
}

}  // namespace manet
