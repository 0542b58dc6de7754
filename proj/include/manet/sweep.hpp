#pragma once

// Parameter sweeps over (node count, protocol, seed), CSV output and
// baseline/variant comparison.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "manet/config.hpp"
#include "manet/network.hpp"
#include "manet/scenario.hpp"

namespace manet {

inline constexpr std::string_view kCsvSchema = "manetsim-csv v1";

inline constexpr std::string_view kCsvHeader =
    "nodes,protocol,seed,dropped,consumed_power_J,throughput_pkt_per_ms,mac_load,ctrl_overhead,"
    "rreq_tx,rrep_tx,rerr_tx,hello_tx,ctrl_rx,generated,delivered,drop_queue,drop_collision,"
    "drop_noroute,drop_buffer,dead_nodes";

inline constexpr std::size_t kCsvMetricColumns = 17;  // columns after nodes,protocol,seed

struct RunRecord {
  std::uint32_t nodes = 0;
  Protocol protocol = Protocol::kAodv;
  std::uint64_t seed = 0;
  MetricsReport report;
  std::uint64_t in_custody = 0;      // data packets still held when the run ended
  double energy_conservation = 0.0;  // worst per-node |initial - residual - consumed|
};

/// Runs one scenario to completion and collects the accounting residues.
inline RunRecord run_scenario(const ScenarioConfig& config) {
  Network net(config);
  RunRecord rec;
  rec.nodes = config.nodes;
  rec.protocol = config.protocol;
  rec.seed = config.seed;
  rec.report = net.run();
  rec.in_custody = net.data_in_custody();
  rec.energy_conservation = net.energy().conservation_error();
  return rec;
}

/// Empty when the identities hold; otherwise a description of the first
/// violation.
inline std::optional<std::string> accounting_violation(const RunRecord& r, double energy_tol = 1e-9) {
  const auto& m = r.report;
  const std::uint64_t dropped = m.drop_queue + m.drop_collision + m.drop_noroute + m.drop_buffer;
  if (dropped > m.dropped_packets) return "per-cause drops exceed the total";
  if (m.delivered + m.dropped_packets + m.in_flight != m.generated) {
    return "generated != delivered + dropped + in-flight";
  }
  if (m.in_flight != r.in_custody) {
    return "in-flight count " + std::to_string(m.in_flight) + " != packets held " +
           std::to_string(r.in_custody);
  }
  if (!(r.energy_conservation <= energy_tol)) return "energy not conserved";
  return std::nullopt;
}

struct SweepSpec {
  ScenarioConfig base;
  std::vector<std::uint32_t> node_counts{10, 20, 30, 40, 50};
  std::vector<Protocol> protocols{Protocol::kAodv, Protocol::kAodvExt};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
};

/// Seeds base, base+1, ..., base+k-1.
inline std::vector<std::uint64_t> seed_range(std::uint64_t base, std::size_t k) {
  std::vector<std::uint64_t> s;
  for (std::size_t i = 0; i < k; ++i) s.push_back(base + i);
  return s;
}

/// Runs every cell of the sweep on up to `jobs` threads. The result order is
/// nodes, then protocol, then seed, as listed in the spec, whatever `jobs` is.
inline std::vector<RunRecord> run_sweep(const SweepSpec& spec, unsigned jobs = 1) {
  std::vector<ScenarioConfig> cells;
  for (auto n : spec.node_counts) {
    for (auto p : spec.protocols) {
      for (auto s : spec.seeds) {
        ScenarioConfig c = spec.base;
        c.nodes = n;
        c.protocol = p;
        c.seed = s;
        check_scenario(c);
        cells.push_back(c);
      }
    }
  }
  std::vector<RunRecord> out(cells.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        out[i] = run_scenario(cells[i]);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(cells.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

/// The 17 metric columns as reals; mac_load may be absent.
inline std::vector<std::optional<double>> metric_values(const MetricsReport& m) {
  auto d = [](std::uint64_t v) { return std::optional<double>(static_cast<double>(v)); };
  return {d(m.dropped_packets), m.consumed_power, m.throughput, m.mac_load,
          d(m.control_overhead), d(m.rreq_tx), d(m.rrep_tx), d(m.rerr_tx), d(m.hello_tx),
          d(m.control_rx), d(m.generated), d(m.delivered), d(m.drop_queue),
          d(m.drop_collision), d(m.drop_noroute), d(m.drop_buffer), d(m.dead_nodes)};
}

inline std::string csv_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string csv_cell(const std::optional<double>& v) { return v ? csv_real(*v) : "NA"; }

}  // namespace detail

inline std::string csv_row(const RunRecord& r) {
  const auto& m = r.report;
  std::ostringstream o;
  o << r.nodes << ',' << to_string(r.protocol) << ',' << r.seed << ',' << m.dropped_packets << ','
    << detail::csv_real(m.consumed_power) << ',' << detail::csv_real(m.throughput) << ','
    << detail::csv_cell(m.mac_load) << ',' << m.control_overhead << ',' << m.rreq_tx << ','
    << m.rrep_tx << ',' << m.rerr_tx << ',' << m.hello_tx << ',' << m.control_rx << ','
    << m.generated << ',' << m.delivered << ',' << m.drop_queue << ',' << m.drop_collision << ','
    << m.drop_noroute << ',' << m.drop_buffer << ',' << m.dead_nodes;
  return o.str();
}

struct CellSummary {
  std::uint32_t nodes = 0;
  Protocol protocol = Protocol::kAodv;
  std::size_t runs = 0;
  std::vector<std::optional<double>> mean;    // NA when any run lacks the value
  std::vector<std::optional<double>> stddev;  // sample standard deviation
};

inline std::vector<CellSummary> summarize(const std::vector<RunRecord>& records) {
  std::vector<CellSummary> cells;
  std::map<std::pair<std::uint32_t, Protocol>, std::vector<const RunRecord*>> groups;
  for (const auto& r : records) {
    auto& g = groups[{r.nodes, r.protocol}];
    if (g.empty()) cells.push_back(CellSummary{r.nodes, r.protocol, 0, {}, {}});
    g.push_back(&r);
  }
  for (auto& cell : cells) {
    const auto& g = groups[{cell.nodes, cell.protocol}];
    cell.runs = g.size();
    for (std::size_t col = 0; col < kCsvMetricColumns; ++col) {
      std::vector<double> xs;
      for (const auto* r : g) {
        if (auto v = detail::metric_values(r->report)[col]) xs.push_back(*v);
      }
      if (xs.size() != g.size()) {
        cell.mean.emplace_back();
        cell.stddev.emplace_back();
        continue;
      }
      double sum = 0.0;
      for (double x : xs) sum += x;
      const double mean = sum / static_cast<double>(xs.size());
      double ss = 0.0;
      for (double x : xs) ss += (x - mean) * (x - mean);
      cell.mean.push_back(mean);
      cell.stddev.push_back(xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0);
    }
  }
  return cells;
}

/// Full CSV document: schema line, config echo, header, one row per run,
/// then one `mean` row per (nodes, protocol). The matching standard
/// deviations follow as `# stddev,...` comment lines so that the data rows
/// keep a fixed cardinality.
inline std::string write_csv(const std::vector<RunRecord>& records, const ScenarioConfig& base) {
  std::ostringstream o;
  o << "# " << kCsvSchema << '\n';
  std::istringstream cfg(emit_scenario(base));
  for (std::string line; std::getline(cfg, line);) {
    if (!line.empty()) o << "# " << line << '\n';
  }
  o << kCsvHeader << '\n';
  for (const auto& r : records) o << csv_row(r) << '\n';
  const auto cells = summarize(records);
  auto emit = [&](const CellSummary& c, const char* label,
                  const std::vector<std::optional<double>>& v, const char* prefix) {
    o << prefix << c.nodes << ',' << to_string(c.protocol) << ',' << label;
    for (const auto& x : v) o << ',' << detail::csv_cell(x);
    o << '\n';
  };
  for (const auto& c : cells) emit(c, "mean", c.mean, "");
  for (const auto& c : cells) emit(c, "stddev", c.stddev, "# ");
  return o.str();
}

// ---------------------------------------------------------------------------
// Comparison

/// One parsed per-run CSV row. Aggregate and comment lines are skipped.
struct CsvRun {
  std::uint32_t nodes = 0;
  std::string protocol;
  std::uint64_t seed = 0;
  std::vector<std::optional<double>> values;  // kCsvMetricColumns entries
};

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::vector<CsvRun> read_csv_runs(std::string_view text) {
  std::vector<CsvRun> runs;
  bool header_seen = false;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != kCsvHeader) throw std::runtime_error("unexpected CSV header");
      header_seen = true;
      continue;
    }
    const auto f = split_csv_line(line);
    if (f.size() != 3 + kCsvMetricColumns) {
      throw std::runtime_error("CSV line " + std::to_string(line_no) + ": wrong column count");
    }
    if (f[2] == "mean" || f[2] == "stddev") continue;
    try {
      CsvRun r;
      r.nodes = detail::parse_int<std::uint32_t>(f[0]);
      r.protocol = f[1];
      r.seed = detail::parse_int<std::uint64_t>(f[2]);
      for (std::size_t i = 3; i < f.size(); ++i) {
        if (f[i] == "NA") r.values.emplace_back();
        else r.values.emplace_back(detail::parse_real(f[i]));
      }
      runs.push_back(std::move(r));
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error("CSV line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!header_seen) throw std::runtime_error("CSV has no header");
  return runs;
}

/// Metrics reported by compare(), with their column index.
inline const std::vector<std::pair<std::string_view, std::size_t>>& compared_metrics() {
  static const std::vector<std::pair<std::string_view, std::size_t>> m{
      {"dropped", 0},       {"consumed_power_J", 1}, {"throughput_pkt_per_ms", 2},
      {"mac_load", 3},      {"ctrl_overhead", 4},    {"rreq_tx", 5}};
  return m;
}

struct ComparisonRow {
  std::uint32_t nodes = 0;
  std::size_t seeds = 0;
  std::vector<std::optional<double>> base_mean;
  std::vector<std::optional<double>> variant_mean;
  std::vector<std::optional<double>> change_pct;  // 100 * (variant - base) / base

  /// variant / base for the named compared metric.
  std::optional<double> ratio(std::string_view metric) const {
    const auto& ms = compared_metrics();
    for (std::size_t i = 0; i < ms.size(); ++i) {
      if (ms[i].first == metric) {
        if (!base_mean[i] || !variant_mean[i] || *base_mean[i] == 0.0) return std::nullopt;
        return *variant_mean[i] / *base_mean[i];
      }
    }
    throw std::invalid_argument("unknown metric '" + std::string(metric) + "'");
  }
};

/// Seed-paired means of baseline vs variant per node count. Each node count
/// must have runs for both protocols over exactly the same seeds.
inline std::vector<ComparisonRow> compare(const std::vector<CsvRun>& runs, std::string_view base,
                                          std::string_view variant) {
  std::map<std::uint32_t, std::map<std::uint64_t, const CsvRun*>> by_base, by_variant;
  std::vector<std::uint32_t> order;
  for (const auto& r : runs) {
    if (r.protocol != base && r.protocol != variant) continue;
    if (!by_base.count(r.nodes) && !by_variant.count(r.nodes)) order.push_back(r.nodes);
    // Comparing a protocol with itself pairs every run with itself.
    for (auto* side : {&by_base, &by_variant}) {
      if ((side == &by_base ? base : variant) != r.protocol) continue;
      if (!(*side)[r.nodes].emplace(r.seed, &r).second) {
        throw std::invalid_argument("duplicate run for nodes=" + std::to_string(r.nodes) + " " +
                                    r.protocol + " seed=" + std::to_string(r.seed));
      }
    }
  }
  if (order.empty()) throw std::invalid_argument("no runs for the requested protocols");
  std::vector<ComparisonRow> rows;
  for (auto n : order) {
    const auto& b = by_base[n];
    const auto& v = by_variant[n];
    bool same = b.size() == v.size() && !b.empty();
    for (auto it = b.begin(); same && it != b.end(); ++it) same = v.count(it->first) > 0;
    if (!same) {
      throw std::invalid_argument("nodes=" + std::to_string(n) +
                                  ": baseline and variant seeds do not match");
    }
    ComparisonRow row;
    row.nodes = n;
    row.seeds = b.size();
    for (const auto& [name, col] : compared_metrics()) {
      (void)name;
      double sb = 0.0, sv = 0.0;
      bool complete = true;
      for (const auto& [seed, run] : b) {
        const auto& x = run->values[col];
        const auto& y = v.at(seed)->values[col];
        if (!x || !y) { complete = false; break; }
        sb += *x;
        sv += *y;
      }
      if (!complete) {
        row.base_mean.emplace_back();
        row.variant_mean.emplace_back();
        row.change_pct.emplace_back();
        continue;
      }
      const double k = static_cast<double>(b.size());
      row.base_mean.push_back(sb / k);
      row.variant_mean.push_back(sv / k);
      if (sb == 0.0) row.change_pct.emplace_back();
      else row.change_pct.push_back(100.0 * (sv - sb) / sb);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string write_comparison(const std::vector<ComparisonRow>& rows, std::string_view base,
                                    std::string_view variant) {
  std::ostringstream o;
  o << "# change_pct = 100 * (" << variant << " - " << base << ") / " << base
    << ", seed-paired means\n";
  o << "nodes,seeds";
  for (const auto& [name, col] : compared_metrics()) {
    (void)col;
    o << ',' << name << "_base," << name << "_variant," << name << "_change_pct";
  }
  o << '\n';
  for (const auto& r : rows) {
    o << r.nodes << ',' << r.seeds;
    for (std::size_t i = 0; i < r.base_mean.size(); ++i) {
      o << ',' << detail::csv_cell(r.base_mean[i]) << ',' << detail::csv_cell(r.variant_mean[i])
        << ',' << detail::csv_cell(r.change_pct[i]);
    }
    o << '\n';
  }
  return o.str();
}

}  // namespace manet
