#pragma once

// Scenario files: `[section]` headers, `key = value` lines and `#` comments.
// A fully qualified `section.key = value` line is accepted anywhere. Every
// key has a default; unknown keys are errors.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "manet/scenario.hpp"

namespace manet {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::size_t line, const std::string& msg)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Shortest text that parses back to the same double.
inline std::string format_real(double v) {
  char buf[64];
  for (int prec = 6; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline double parse_real(std::string_view s) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v)) {
    throw std::invalid_argument("expected a real number, got '" + std::string(s) + "'");
  }
  return v;
}

template <class Int>
Int parse_int(std::string_view s) {
  Int v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw std::invalid_argument("expected a non-negative integer, got '" + std::string(s) + "'");
  }
  return v;
}

inline bool parse_bool(std::string_view s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw std::invalid_argument("expected true or false, got '" + std::string(s) + "'");
}

struct KeySpec {
  std::string_view section;
  std::string_view key;
  std::function<void(ScenarioConfig&, std::string_view)> set;
  std::function<std::string(const ScenarioConfig&)> get;
  std::string_view doc;
};

inline void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

template <class T>
KeySpec real_key(std::string_view sec, std::string_view key, T ScenarioConfig::*group,
                 double T::*field, std::function<bool(double)> ok, const char* range,
                 std::string_view doc) {
  return {sec, key,
          [=](ScenarioConfig& c, std::string_view v) {
            const double x = parse_real(v);
            require(ok(x), range);
            c.*group.*field = x;
          },
          [=](const ScenarioConfig& c) { return format_real(c.*group.*field); }, doc};
}

template <class T, class Int>
KeySpec int_key(std::string_view sec, std::string_view key, T ScenarioConfig::*group,
                Int T::*field, Int min_value, const char* range, std::string_view doc) {
  return {sec, key,
          [=](ScenarioConfig& c, std::string_view v) {
            const Int x = parse_int<Int>(v);
            require(x >= min_value, range);
            c.*group.*field = x;
          },
          [=](const ScenarioConfig& c) { return std::to_string(c.*group.*field); }, doc};
}

inline bool positive(double x) { return x > 0.0; }
inline bool non_negative(double x) { return x >= 0.0; }

inline const std::vector<KeySpec>& key_table() {
  using S = ScenarioConfig;
  static const std::vector<KeySpec> table = [] {
    std::vector<KeySpec> t;
    // [sim]
    t.push_back({"sim", "nodes",
                 [](S& c, std::string_view v) {
                   c.nodes = parse_int<std::uint32_t>(v);
                   require(c.nodes >= 2, "sim.nodes must be >= 2");
                 },
                 [](const S& c) { return std::to_string(c.nodes); }, "node count"});
    t.push_back({"sim", "protocol",
                 [](S& c, std::string_view v) {
                   auto p = parse_protocol(v);
                   require(p.has_value(), "sim.protocol must be aodv or aodv_ext");
                   c.protocol = *p;
                 },
                 [](const S& c) { return std::string(to_string(c.protocol)); },
                 "aodv | aodv_ext"});
    t.push_back({"sim", "duration",
                 [](S& c, std::string_view v) {
                   c.duration = parse_real(v);
                   require(c.duration > 0.0, "sim.duration must be > 0");
                 },
                 [](const S& c) { return format_real(c.duration); }, "simulated seconds"});
    t.push_back({"sim", "seed",
                 [](S& c, std::string_view v) { c.seed = parse_int<std::uint64_t>(v); },
                 [](const S& c) { return std::to_string(c.seed); }, "64-bit seed"});
    auto mob_real = [&](std::string_view key, double MobilityParams::*f, auto ok, const char* r,
                        std::string_view doc) {
      t.push_back({"sim", key,
                   [=](S& c, std::string_view v) {
                     const double x = parse_real(v);
                     require(ok(x), r);
                     c.mobility.*f = x;
                   },
                   [=](const S& c) { return format_real(c.mobility.*f); }, doc});
    };
    auto area_real = [&](std::string_view key, double Area::*f, std::string_view doc) {
      t.push_back({"sim", key,
                   [=](S& c, std::string_view v) {
                     const double x = parse_real(v);
                     require(x > 0.0, "area dimensions must be > 0");
                     c.mobility.area.*f = x;
                   },
                   [=](const S& c) { return format_real(c.mobility.area.*f); }, doc});
    };
    area_real("width", &Area::width, "area width, m");
    area_real("height", &Area::height, "area height, m");
    mob_real("speed_min", &MobilityParams::speed_min, non_negative, "sim.speed_min must be >= 0",
             "m/s");
    mob_real("speed_max", &MobilityParams::speed_max, non_negative, "sim.speed_max must be >= 0",
             "m/s; 0 keeps nodes static");
    mob_real("pause", &MobilityParams::pause, non_negative, "sim.pause must be >= 0",
             "pause at each waypoint, s");

    // [radio]
    t.push_back(real_key("radio", "tx_power", &S::radio, &RadioParams::tx_power, positive,
                         "radio.tx_power must be > 0", "RF transmit power P_t, W"));
    t.push_back(real_key("radio", "gain_tx", &S::radio, &RadioParams::gain_tx, positive,
                         "radio.gain_tx must be > 0", ""));
    t.push_back(real_key("radio", "gain_rx", &S::radio, &RadioParams::gain_rx, positive,
                         "radio.gain_rx must be > 0", ""));
    t.push_back(real_key("radio", "height_tx", &S::radio, &RadioParams::height_tx, positive,
                         "radio.height_tx must be > 0", "m"));
    t.push_back(real_key("radio", "height_rx", &S::radio, &RadioParams::height_rx, positive,
                         "radio.height_rx must be > 0", "m"));
    t.push_back(real_key("radio", "wavelength", &S::radio, &RadioParams::wavelength, positive,
                         "radio.wavelength must be > 0", "m"));
    t.push_back(real_key("radio", "rx_thresh", &S::radio, &RadioParams::rx_thresh, non_negative,
                         "radio.rx_thresh must be >= 0", "W; 0 = 250 m range"));
    t.push_back(real_key("radio", "cs_thresh", &S::radio, &RadioParams::cs_thresh, non_negative,
                         "radio.cs_thresh must be >= 0", "W; 0 = default carrier range"));
    t.push_back(real_key("radio", "bitrate", &S::radio, &RadioParams::bitrate, positive,
                         "radio.bitrate must be > 0", "bit/s"));
    t.push_back({"radio", "propagation",
                 [](S& c, std::string_view v) {
                   if (v == "scaled") c.radio.propagation = Propagation::kScaledTwoRay;
                   else if (v == "standard") c.radio.propagation = Propagation::kStandardTwoRay;
                   else throw std::invalid_argument("radio.propagation must be scaled or standard");
                 },
                 [](const S& c) { return std::string(to_string(c.radio.propagation)); },
                 "scaled | standard"});

    // [energy]
    t.push_back(real_key("energy", "p_tx", &S::energy, &EnergyParams::p_tx, positive,
                         "energy.p_tx must be > 0", "W while transmitting"));
    t.push_back(real_key("energy", "p_rx", &S::energy, &EnergyParams::p_rx, positive,
                         "energy.p_rx must be > 0", "W while receiving"));
    t.push_back(real_key("energy", "p_idle", &S::energy, &EnergyParams::p_idle, positive,
                         "energy.p_idle must be > 0", "W while idle"));
    t.push_back(real_key("energy", "initial", &S::energy, &EnergyParams::initial_energy, positive,
                         "energy.initial must be > 0", "J per node"));
    t.push_back({"energy", "count_idle",
                 [](S& c, std::string_view v) { c.energy.count_idle_in_metric = parse_bool(v); },
                 [](const S& c) { return std::string(c.energy.count_idle_in_metric ? "true" : "false"); },
                 "include idle energy in consumed_power"});

    // [mac]
    t.push_back(int_key("mac", "queue_capacity", &S::mac, &MacParams::queue_capacity, 1u,
                        "mac.queue_capacity must be >= 1", "frames"));
    t.push_back(real_key("mac", "jitter_max", &S::mac, &MacParams::jitter_max, non_negative,
                         "mac.jitter_max must be >= 0", "s"));
    t.push_back(int_key("mac", "header_bytes", &S::mac, &MacParams::header_bytes, 1u,
                        "mac.header_bytes must be >= 1", "per frame"));
    t.push_back({"mac", "carrier_sense",
                 [](S& c, std::string_view v) { c.mac.carrier_sense = parse_bool(v); },
                 [](const S& c) { return std::string(c.mac.carrier_sense ? "true" : "false"); },
                 "defer while the medium is busy"});

    // [aodv]
    t.push_back(real_key("aodv", "hello_interval", &S::aodv, &AodvParams::hello_interval,
                         non_negative, "aodv.hello_interval must be >= 0", "s; 0 disables"));
    t.push_back(real_key("aodv", "neighbor_window", &S::aodv, &AodvParams::neighbor_window,
                         positive, "aodv.neighbor_window must be > 0", "s"));
    t.push_back(int_key("aodv", "rreq_retries", &S::aodv, &AodvParams::rreq_retries, 0u,
                        "aodv.rreq_retries must be >= 0", ""));
    t.push_back(real_key("aodv", "reply_wait", &S::aodv, &AodvParams::reply_wait, positive,
                         "aodv.reply_wait must be > 0", "s"));
    t.push_back(real_key("aodv", "route_lifetime", &S::aodv, &AodvParams::route_lifetime,
                         positive, "aodv.route_lifetime must be > 0", "s"));
    t.push_back(int_key("aodv", "buffer_capacity", &S::aodv, &AodvParams::buffer_capacity, 1u,
                        "aodv.buffer_capacity must be >= 1", "packets"));
    t.push_back(real_key("aodv", "buffer_timeout", &S::aodv, &AodvParams::buffer_timeout,
                         positive, "aodv.buffer_timeout must be > 0", "s"));
    t.push_back(int_key("aodv", "net_diameter", &S::aodv, &AodvParams::net_diameter, 1u,
                        "aodv.net_diameter must be >= 1", "hops"));
    t.push_back(int_key("aodv", "data_ttl", &S::aodv, &AodvParams::data_ttl, 1u,
                        "aodv.data_ttl must be >= 1", "hops"));

    // [ext]
    t.push_back(int_key("ext", "d", &S::ext, &ExtParams::d, 1u, "ext.d must be >= 1",
                        "minimum neighbour count"));
    t.push_back(real_key(
        "ext", "c_f", &S::ext, &ExtParams::c_f, [](double x) { return x > 0.0 && x <= 1.0; },
        "ext.c_f must lie in (0, 1]", "control factor"));

    // [traffic]
    t.push_back(int_key("traffic", "flows", &S::traffic, &TrafficParams::flows, 0u,
                        "traffic.flows must be >= 0", "CBR flows"));
    t.push_back(int_key("traffic", "packet_bytes", &S::traffic, &TrafficParams::packet_bytes, 1u,
                        "traffic.packet_bytes must be >= 1", "payload bytes"));
    t.push_back(real_key("traffic", "rate", &S::traffic, &TrafficParams::rate, positive,
                         "traffic.rate must be > 0", "packets/s per flow"));
    t.push_back(real_key("traffic", "start", &S::traffic, &TrafficParams::start, non_negative,
                         "traffic.start must be >= 0", "s"));
    t.push_back(real_key("traffic", "stop", &S::traffic, &TrafficParams::stop, positive,
                         "traffic.stop must be > 0", "s"));
    return t;
  }();
  return table;
}

inline const KeySpec* find_key(std::string_view section, std::string_view key) {
  for (const auto& k : key_table()) {
    if (k.section == section && k.key == key) return &k;
  }
  return nullptr;
}

}  // namespace detail

/// Applies one `section.key = value` assignment.
inline void apply_setting(ScenarioConfig& config, std::string_view qualified_key,
                          std::string_view value, std::size_t line = 0) {
  const auto dot = qualified_key.find('.');
  if (dot == std::string_view::npos) {
    throw ConfigError(line, "key '" + std::string(qualified_key) + "' has no section");
  }
  const auto* spec = detail::find_key(qualified_key.substr(0, dot), qualified_key.substr(dot + 1));
  if (!spec) throw ConfigError(line, "unknown key '" + std::string(qualified_key) + "'");
  try {
    spec->set(config, detail::trim(value));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(line, e.what());
  }
}

inline void check_scenario(const ScenarioConfig& c) {
  try {
    validate(c);
    if (c.mobility.speed_max < c.mobility.speed_min) {
      throw std::invalid_argument("sim.speed_max must be >= sim.speed_min");
    }
    if (c.mobility.speed_max > 0.0 && c.mobility.speed_min <= 0.0) {
      throw std::invalid_argument("moving nodes need sim.speed_min > 0");
    }
    if (!(c.traffic.start < c.traffic.stop)) {
      throw std::invalid_argument("traffic.start must be < traffic.stop");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(0, e.what());
  }
}

inline ScenarioConfig parse_scenario(std::string_view text, ScenarioConfig config = {}) {
  std::string section;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) throw ConfigError(line_no, "malformed section header");
      section = std::string(detail::trim(line.substr(1, line.size() - 2)));
      bool known = false;
      for (const auto& k : detail::key_table()) known = known || k.section == section;
      if (!known) throw ConfigError(line_no, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(line_no, "expected 'key = value'");
    const std::string_view key = detail::trim(line.substr(0, eq));
    const std::string_view value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(line_no, "missing key");
    if (value.empty()) throw ConfigError(line_no, "missing value for '" + std::string(key) + "'");
    if (key.find('.') != std::string_view::npos) {
      apply_setting(config, key, value, line_no);
    } else {
      if (section.empty()) throw ConfigError(line_no, "key '" + std::string(key) + "' outside a section");
      apply_setting(config, section + "." + std::string(key), value, line_no);
    }
  }
  check_scenario(config);
  return config;
}

/// Canonical text form; parse_scenario(emit_scenario(c)) == c.
inline std::string emit_scenario(const ScenarioConfig& c) {
  std::ostringstream out;
  std::string_view section;
  for (const auto& k : detail::key_table()) {
    if (k.section != section) {
      if (!section.empty()) out << '\n';
      section = k.section;
      out << '[' << section << "]\n";
    }
    out << k.key << " = " << k.get(c) << '\n';
  }
  return out.str();
}

inline bool operator==(const ScenarioConfig& a, const ScenarioConfig& b) {
  return emit_scenario(a) == emit_scenario(b);
}

}  // namespace manet
