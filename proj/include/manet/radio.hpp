#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numbers>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "manet/engine.hpp"

namespace manet {

enum class Propagation : std::uint8_t {
  /// P_t G_t G_r (h_t h_r lambda / (4 pi r^2))^2
  kScaledTwoRay,
  /// P_t G_t G_r h_t^2 h_r^2 / r^4
  kStandardTwoRay,
};

constexpr std::string_view to_string(Propagation p) {
  return p == Propagation::kScaledTwoRay ? "scaled" : "standard";
}

struct RadioParams {
  double tx_power = 0.28183815;  // RF power at the antenna, W
  double gain_tx = 1.0;
  double gain_rx = 1.0;
  double height_tx = 1.5;   // m
  double height_rx = 1.5;   // m
  double wavelength = 0.1224;  // m, 2.45 GHz
  double rx_thresh = 0.0;   // W; 0 selects the 250 m default for the variant
  double cs_thresh = 0.0;   // W; 0 selects the default carrier-sense range
  double bitrate = 2.0e6;   // bit/s
  Propagation propagation = Propagation::kScaledTwoRay;
};

/// Default decode range and carrier-sense range, meters.
inline constexpr double kDefaultCommRange = 250.0;
inline constexpr double kDefaultCarrierRange = 250.0;

inline double received_power(const RadioParams& p, double r) {
  if (!(r > 0.0)) throw std::domain_error("received_power requires r > 0");
  const double gains = p.tx_power * p.gain_tx * p.gain_rx;
  switch (p.propagation) {
    case Propagation::kScaledTwoRay: {
      const double a = p.height_tx * p.height_rx * p.wavelength / (4.0 * std::numbers::pi * r * r);
      return gains * a * a;
    }
    case Propagation::kStandardTwoRay: {
      const double h2 = p.height_tx * p.height_tx * p.height_rx * p.height_rx;
      const double r2 = r * r;
      return gains * h2 / (r2 * r2);
    }
  }
  return 0.0;
}

namespace detail {
// received_power(r) = k / r^4 for both variants; returns k.
inline double path_constant(const RadioParams& p) {
  return received_power(p, 1.0);
}
}  // namespace detail

/// Distance at which received power equals `threshold`.
inline double range_for_threshold(const RadioParams& p, double threshold) {
  if (!(threshold > 0.0)) throw std::domain_error("threshold must be positive");
  return std::pow(detail::path_constant(p) / threshold, 0.25);
}

/// Threshold that yields a given range.
inline double threshold_for_range(const RadioParams& p, double range) {
  return received_power(p, range);
}

inline double effective_rx_thresh(const RadioParams& p) {
  return p.rx_thresh > 0.0 ? p.rx_thresh : threshold_for_range(p, kDefaultCommRange);
}

inline double effective_cs_thresh(const RadioParams& p) {
  return p.cs_thresh > 0.0 ? p.cs_thresh : threshold_for_range(p, kDefaultCarrierRange);
}

inline double comm_range(const RadioParams& p) {
  return range_for_threshold(p, effective_rx_thresh(p));
}

inline double carrier_range(const RadioParams& p) {
  return range_for_threshold(p, effective_cs_thresh(p));
}

inline void validate(const RadioParams& p) {
  if (!(p.tx_power > 0 && p.gain_tx > 0 && p.gain_rx > 0 && p.height_tx > 0 && p.height_rx > 0 &&
        p.wavelength > 0 && p.bitrate > 0 && p.rx_thresh >= 0 && p.cs_thresh >= 0)) {
    throw std::invalid_argument("radio parameters must be positive");
  }
  if (effective_cs_thresh(p) > effective_rx_thresh(p)) {
    throw std::invalid_argument("cs_thresh must not exceed rx_thresh");
  }
}

// ---------------------------------------------------------------------------
// Energy

struct EnergyParams {
  double p_tx = 0.1819;   // W
  double p_rx = 0.0501;   // W
  double p_idle = 0.0350; // W
  double initial_energy = 1000.0;  // J
  bool count_idle_in_metric = false;
};

inline double airtime(std::uint64_t bits, double bitrate) {
  if (bits == 0) throw std::invalid_argument("frame must carry at least one bit");
  return static_cast<double>(bits) / bitrate;
}

inline double tx_energy(std::uint64_t bits, const EnergyParams& e, double bitrate) {
  return airtime(bits, bitrate) * e.p_tx;
}

inline double rx_energy(std::uint64_t bits, const EnergyParams& e, double bitrate) {
  return airtime(bits, bitrate) * e.p_rx;
}

enum class EnergyUse : std::uint8_t { kTx, kRx, kIdle };

struct NodeEnergy {
  double residual = 0.0;
  double consumed_tx = 0.0;
  double consumed_rx = 0.0;
  double consumed_idle = 0.0;
  bool alive = true;

  // Idle bookkeeping: radio time not spent in tx/rx since the last accrual.
  SimTime idle_mark = 0.0;
  double busy_since_mark = 0.0;

  double consumed() const { return consumed_tx + consumed_rx + consumed_idle; }
};

/// Per-node battery accounts. Every debit is capped by the residual, so
/// residual + consumed stays equal to the initial energy.
class EnergyLedger {
 public:
  EnergyLedger(std::size_t nodes, const EnergyParams& params) : params_(params) {
    nodes_.assign(nodes, NodeEnergy{params.initial_energy});
  }

  const EnergyParams& params() const { return params_; }
  std::size_t size() const { return nodes_.size(); }
  const NodeEnergy& operator[](NodeId n) const { return nodes_.at(n); }
  bool alive(NodeId n) const { return nodes_.at(n).alive; }

  /// Returns the residual. A return of true in `died` marks the transition
  /// to zero during this call.
  double drain(NodeId node, double joules, EnergyUse use, bool* died = nullptr) {
    if (joules < 0.0) throw std::invalid_argument("negative drain");
    NodeEnergy& e = nodes_.at(node);
    const double taken = std::min(joules, e.residual);
    e.residual -= taken;
    switch (use) {
      case EnergyUse::kTx: e.consumed_tx += taken; break;
      case EnergyUse::kRx: e.consumed_rx += taken; break;
      case EnergyUse::kIdle: e.consumed_idle += taken; break;
    }
    bool just_died = false;
    if (e.alive && (e.residual <= 0.0 || taken < joules)) {
      e.residual = 0.0;
      e.alive = false;
      just_died = true;
    }
    if (died) *died = just_died;
    return e.residual;
  }

  /// Records radio-busy time so the next idle accrual skips it.
  void note_busy(NodeId node, double seconds) { nodes_.at(node).busy_since_mark += seconds; }

  /// Charges idle power for the part of [mark, t] not spent busy.
  bool accrue_idle(NodeId node, SimTime t) {
    NodeEnergy& e = nodes_.at(node);
    if (!e.alive) return false;
    const double idle = std::max(0.0, (t - e.idle_mark) - e.busy_since_mark);
    e.idle_mark = t;
    e.busy_since_mark = 0.0;
    bool died = false;
    if (idle > 0.0) drain(node, idle * params_.p_idle, EnergyUse::kIdle, &died);
    return died;
  }

  /// Largest |initial - residual - consumed| over all nodes.
  double conservation_error() const {
    double worst = 0.0;
    for (const auto& e : nodes_) {
      worst = std::max(worst, std::abs(params_.initial_energy - e.residual - e.consumed()));
    }
    return worst;
  }

 private:
  EnergyParams params_;
  std::vector<NodeEnergy> nodes_;
};

// ---------------------------------------------------------------------------
// Channel

/// Remembers, per receiver, the airtime intervals of every transmission it
/// could sense (including its own). A reception collides when any other
/// sensed interval overlaps it; there is no capture.
class Channel {
 public:
  explicit Channel(std::size_t nodes) : heard_(nodes) {}

  void note(NodeId receiver, NodeId sender, std::uint64_t tx_id, SimTime start, SimTime end) {
    heard_.at(receiver).push_back(Interval{sender, tx_id, start, end});
  }

  /// True when `tx_id`'s interval at `receiver` overlaps another sensed
  /// interval from a different transmission. Intervals that merely touch do
  /// not collide.
  bool collided(NodeId receiver, std::uint64_t tx_id, SimTime start, SimTime end) const {
    for (const auto& iv : heard_.at(receiver)) {
      if (iv.tx_id == tx_id) continue;
      if (iv.start < end && start < iv.end) return true;
    }
    return false;
  }

  /// End of the latest foreign transmission `receiver` senses at time t, or
  /// t itself when the medium is idle.
  SimTime busy_until(NodeId receiver, SimTime t) const {
    SimTime until = t;
    for (const auto& iv : heard_.at(receiver)) {
      if (iv.sender != receiver && iv.start <= t && t < iv.end) until = std::max(until, iv.end);
    }
    return until;
  }

  /// Drops intervals that ended before `horizon`.
  void prune(NodeId receiver, SimTime horizon) {
    auto& q = heard_.at(receiver);
    std::erase_if(q, [&](const Interval& iv) { return iv.end < horizon; });
  }

 private:
  struct Interval {
    NodeId sender;
    std::uint64_t tx_id;
    SimTime start;
    SimTime end;
  };
  std::vector<std::deque<Interval>> heard_;
};

}  // namespace manet
