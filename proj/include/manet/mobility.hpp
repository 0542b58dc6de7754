#pragma once

// Random-waypoint motion. Legs are generated lazily and kept, so a node's
// position at any time is a pure function of (seed, node id).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "manet/engine.hpp"
#include "manet/rng.hpp"

namespace manet {

struct Position {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Position&, const Position&) = default;
};

inline double euclidean(const Position& a, const Position& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

struct Area {
  double width = 800.0;
  double height = 800.0;

  bool contains(const Position& p) const {
    return p.x >= 0.0 && p.x <= width && p.y >= 0.0 && p.y <= height;
  }
};

struct MobilityParams {
  Area area;
  double speed_min = 1.0;
  double speed_max = 40.0;
  double pause = 0.0;
};

struct WaypointLeg {
  Position origin;
  Position destination;
  double speed = 0.0;
  SimTime depart_at = 0.0;
  SimTime arrive_at = 0.0;  // depart_at + travel time; pause follows
};

/// Authoritative node positions. `speed_max == 0` yields a static
/// deployment: nodes stay at their initial positions.
class Mobility {
 public:
  Mobility(std::uint64_t seed, std::size_t node_count, const MobilityParams& params)
      : params_(params) {
    if (node_count < 2) throw std::invalid_argument("at least 2 nodes are required");
    if (!(params.area.width > 0.0) || !(params.area.height > 0.0)) {
      throw std::invalid_argument("area dimensions must be positive");
    }
    if (params.speed_min < 0.0 || params.speed_max < params.speed_min) {
      throw std::invalid_argument("invalid speed range");
    }
    if (params.speed_max > 0.0 && params.speed_min <= 0.0) {
      throw std::invalid_argument("mobile nodes need speed_min > 0");
    }
    nodes_.reserve(node_count);
    for (std::size_t i = 0; i < node_count; ++i) {
      NodeTrack track{RandomStream(seed, StreamLabel::kMobility, i), {}};
      Position start{track.stream.uniform(0.0, params.area.width),
                     track.stream.uniform(0.0, params.area.height)};
      // uniform() is half-open; the far edge is still inside the area.
      track.legs.push_back(static_leg(start, 0.0));
      nodes_.push_back(std::move(track));
      if (is_mobile()) nodes_.back().legs.back() = draw_leg(nodes_.back(), start, 0.0);
    }
  }

  /// Hand-placed nodes. Each node follows its legs in order and then stays at
  /// the final destination; a single static leg pins a node in place.
  static Mobility scripted(const Area& area, std::vector<std::vector<WaypointLeg>> legs) {
    Mobility m;
    m.params_.area = area;
    m.params_.speed_min = m.params_.speed_max = 0.0;
    m.scripted_ = true;
    for (std::size_t i = 0; i < legs.size(); ++i) {
      if (legs[i].empty()) throw std::invalid_argument("scripted node without legs");
      m.nodes_.push_back(NodeTrack{RandomStream(0, StreamLabel::kMobility, i), std::move(legs[i])});
    }
    if (m.nodes_.size() < 2) throw std::invalid_argument("at least 2 nodes are required");
    return m;
  }

  static Mobility fixed(const Area& area, const std::vector<Position>& positions) {
    std::vector<std::vector<WaypointLeg>> legs;
    for (const auto& p : positions) legs.push_back({static_leg(p, 0.0)});
    return scripted(area, std::move(legs));
  }

  std::size_t size() const { return nodes_.size(); }
  const MobilityParams& params() const { return params_; }
  bool is_mobile() const { return params_.speed_max > 0.0; }

  Position initial_position(NodeId node) const { return track(node).legs.front().origin; }

  Position position_at(NodeId node, SimTime t) {
    if (t < 0.0) throw std::logic_error("negative time");
    NodeTrack& tr = track_mut(node);
    if (scripted_) {
      auto it = std::upper_bound(tr.legs.begin(), tr.legs.end(), t,
                                 [](SimTime v, const WaypointLeg& l) { return v < l.depart_at; });
      if (it == tr.legs.begin()) return tr.legs.front().origin;
      return interpolate(*std::prev(it), t);
    }
    if (!is_mobile()) return tr.legs.front().origin;
    while (next_depart(tr.legs.back()) <= t) {
      const WaypointLeg& last = tr.legs.back();
      tr.legs.push_back(draw_leg(tr, last.destination, next_depart(last)));
    }
    // Last leg departing at or before t.
    auto it = std::upper_bound(tr.legs.begin(), tr.legs.end(), t,
                               [](SimTime v, const WaypointLeg& l) { return v < l.depart_at; });
    const WaypointLeg& leg = *std::prev(it);
    return interpolate(leg, t);
  }

  double distance(NodeId a, NodeId b, SimTime t) {
    return euclidean(position_at(a, t), position_at(b, t));
  }

  /// Legs generated so far for `node`.
  const std::vector<WaypointLeg>& legs(NodeId node) const { return track(node).legs; }

  /// Tab-separated: node, depart time, origin x/y, destination x/y, speed.
  void write_waypoints(std::ostream& out, SimTime until) {
    for (NodeId n = 0; n < nodes_.size(); ++n) {
      (void)position_at(n, until);
      for (const auto& leg : track(n).legs) {
        if (leg.depart_at > until) break;
        out << n << '\t' << leg.depart_at << '\t' << leg.origin.x << ',' << leg.origin.y << '\t'
            << leg.destination.x << ',' << leg.destination.y << '\t' << leg.speed << '\n';
      }
    }
  }

  static WaypointLeg static_leg(Position p, SimTime t) { return {p, p, 0.0, t, t}; }

  static Position interpolate(const WaypointLeg& leg, SimTime t) {
    if (t >= leg.arrive_at) return leg.destination;
    const double span = leg.arrive_at - leg.depart_at;
    if (span <= 0.0) return leg.destination;
    const double f = std::clamp((t - leg.depart_at) / span, 0.0, 1.0);
    return {leg.origin.x + f * (leg.destination.x - leg.origin.x),
            leg.origin.y + f * (leg.destination.y - leg.origin.y)};
  }

 private:
  struct NodeTrack {
    RandomStream stream;
    std::vector<WaypointLeg> legs;
  };


  SimTime next_depart(const WaypointLeg& leg) const { return leg.arrive_at + params_.pause; }

  WaypointLeg draw_leg(NodeTrack& tr, Position origin, SimTime depart) {
    Position dest{tr.stream.uniform(0.0, params_.area.width),
                  tr.stream.uniform(0.0, params_.area.height)};
    double speed = params_.speed_min == params_.speed_max
                       ? params_.speed_min
                       : tr.stream.uniform(params_.speed_min, params_.speed_max);
    const double travel = euclidean(origin, dest) / speed;
    return {origin, dest, speed, depart, depart + travel};
  }

  const NodeTrack& track(NodeId node) const {
    if (node >= nodes_.size()) throw std::logic_error("unknown node id");
    return nodes_[node];
  }
  NodeTrack& track_mut(NodeId node) {
    if (node >= nodes_.size()) throw std::logic_error("unknown node id");
    return nodes_[node];
  }

  Mobility() = default;

  MobilityParams params_;
  std::vector<NodeTrack> nodes_;
  bool scripted_ = false;
};

}  // namespace manet
