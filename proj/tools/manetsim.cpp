// manetsim: run one scenario or a sweep, and compare protocols.
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration error,
// 3 a --expect threshold was not met.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "manet/config.hpp"
#include "manet/network.hpp"
#include "manet/sweep.hpp"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitExpect = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, sep);) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

/// `metric[@nodes](<=|>=)ratio`, checked against variant/base.
struct Expectation {
  std::string text;
  std::string metric;
  std::optional<std::uint32_t> nodes;
  bool at_most = true;
  double ratio = 1.0;
};

Expectation parse_expectation(const std::string& s) {
  Expectation e;
  e.text = s;
  auto op = s.find("<=");
  if (op == std::string::npos) {
    op = s.find(">=");
    e.at_most = false;
  }
  if (op == std::string::npos) throw UsageError("--expect needs <= or >=: '" + s + "'");
  std::string lhs = s.substr(0, op);
  try {
    e.ratio = manet::detail::parse_real(s.substr(op + 2));
    if (auto at = lhs.find('@'); at != std::string::npos) {
      e.nodes = manet::detail::parse_int<std::uint32_t>(lhs.substr(at + 1));
      lhs = lhs.substr(0, at);
    }
  } catch (const std::invalid_argument& ex) {
    throw UsageError("--expect '" + s + "': " + ex.what());
  }
  bool known = false;
  for (const auto& [name, col] : manet::compared_metrics()) known = known || name == lhs;
  if (!known) throw UsageError("--expect: unknown metric '" + lhs + "'");
  e.metric = lhs;
  return e;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete-event MANET simulator with AODV and density-gated RREQ forwarding"};
  std::string config_path;
  std::vector<std::string> overrides;
  bool sweep = false;
  std::size_t seeds = 5;
  std::string protocols = "aodv,aodv_ext";
  std::string nodes = "10,20,30,40,50";
  std::string out_path;
  std::vector<std::string> traces;
  std::string trace_prefix = "manetsim";
  unsigned jobs = 1;
  std::string compare_spec;
  std::string input_path;
  std::vector<std::string> expects;
  bool emit_config = false;

  app.add_option("--config", config_path, "Scenario file");
  app.add_option("--set", overrides, "Override a setting, e.g. --set ext.c_f=0.8")->take_all();
  app.add_flag("--sweep", sweep, "Run every (nodes, protocol, seed) combination");
  app.add_option("--seeds", seeds, "Number of seeds per cell, counting up from sim.seed")
      ->check(CLI::PositiveNumber);
  app.add_option("--protocols", protocols, "Comma-separated protocol list for --sweep");
  app.add_option("--nodes", nodes, "Comma-separated node counts for --sweep");
  app.add_option("--out", out_path, "Output file (default stdout)");
  app.add_option("--trace", traces, "Trace to write for a single run")
      ->check(CLI::IsMember({"events", "routing", "waypoints"}))
      ->take_all();
  app.add_option("--trace-prefix", trace_prefix, "Trace files are PREFIX.KIND.tsv");
  app.add_option("--jobs", jobs, "Worker threads for --sweep")->check(CLI::PositiveNumber);
  app.add_option("--compare", compare_spec, "BASE:VARIANT percent-change table");
  app.add_option("--input", input_path, "CSV to compare instead of running a sweep");
  app.add_option("--expect", expects, "Ratio threshold on variant/base, e.g. rreq_tx<=0.65")
      ->take_all();
  app.add_flag("--emit-config", emit_config, "Print the effective scenario and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }

  manet::ScenarioConfig config;
  std::vector<Expectation> expectations;
  manet::SweepSpec spec;
  std::string base_name, variant_name;
  try {
    if (!config_path.empty()) config = manet::parse_scenario(read_file(config_path));
    for (const auto& o : overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos) throw UsageError("--set expects KEY=VALUE: '" + o + "'");
      manet::apply_setting(config, manet::detail::trim(o.substr(0, eq)), o.substr(eq + 1));
    }
    manet::check_scenario(config);
    if (emit_config) {
      write_output(out_path, manet::emit_scenario(config));
      return 0;
    }
    for (const auto& e : expects) expectations.push_back(parse_expectation(e));
    if (!compare_spec.empty()) {
      const auto colon = compare_spec.find(':');
      if (colon == std::string::npos) throw UsageError("--compare expects BASE:VARIANT");
      base_name = compare_spec.substr(0, colon);
      variant_name = compare_spec.substr(colon + 1);
      for (const auto& n : {base_name, variant_name}) {
        if (!manet::parse_protocol(n)) throw UsageError("--compare: unknown protocol '" + n + "'");
      }
    } else if (!expectations.empty()) {
      throw UsageError("--expect requires --compare");
    }
    if (!input_path.empty() && compare_spec.empty()) throw UsageError("--input requires --compare");
    if (sweep && !input_path.empty()) throw UsageError("--sweep and --input are exclusive");
    if (sweep && !traces.empty()) throw UsageError("traces are only written for a single run");

    spec.base = config;
    spec.protocols.clear();
    for (const auto& p : split(protocols, ',')) {
      auto parsed = manet::parse_protocol(p);
      if (!parsed) throw UsageError("unknown protocol '" + p + "'");
      spec.protocols.push_back(*parsed);
    }
    spec.node_counts.clear();
    for (const auto& n : split(nodes, ',')) {
      try {
        const auto v = manet::detail::parse_int<std::uint32_t>(n);
        if (v < 2) throw std::invalid_argument("node counts must be >= 2");
        spec.node_counts.push_back(v);
      } catch (const std::invalid_argument& e) {
        throw UsageError("--nodes: " + std::string(e.what()));
      }
    }
    if (spec.protocols.empty() || spec.node_counts.empty()) {
      throw UsageError("--protocols and --nodes must not be empty");
    }
    spec.seeds = manet::seed_range(config.seed, seeds);
    if (sweep) {
      for (auto n : spec.node_counts) {
        manet::ScenarioConfig c = config;
        c.nodes = n;
        manet::check_scenario(c);
      }
    }
  } catch (const manet::ConfigError& e) {
    std::cerr << "manetsim: config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const UsageError& e) {
    std::cerr << "manetsim: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    std::string csv;
    if (!input_path.empty()) {
      csv = read_file(input_path);
    } else if (sweep) {
      csv = manet::write_csv(manet::run_sweep(spec, jobs), config);
    } else {
      std::vector<std::ofstream> files;
      manet::TraceSinks sinks;
      for (const auto& kind : traces) {
        files.emplace_back(trace_prefix + "." + kind + ".tsv", std::ios::binary);
        if (!files.back()) throw std::runtime_error("cannot open trace file for " + kind);
      }
      for (std::size_t i = 0; i < traces.size(); ++i) {
        if (traces[i] == "events") sinks.events = &files[i];
        else if (traces[i] == "routing") sinks.routing = &files[i];
        else sinks.waypoints = &files[i];
      }
      manet::Network net(config, sinks);
      manet::RunRecord rec;
      rec.nodes = config.nodes;
      rec.protocol = config.protocol;
      rec.seed = config.seed;
      rec.report = net.run();
      rec.in_custody = net.data_in_custody();
      rec.energy_conservation = net.energy().conservation_error();
      if (auto bad = manet::accounting_violation(rec)) {
        throw std::runtime_error("accounting check failed: " + *bad);
      }
      csv = manet::write_csv({rec}, config);
    }

    if (compare_spec.empty()) {
      write_output(out_path, csv);
      return 0;
    }
    const auto rows =
        manet::compare(manet::read_csv_runs(csv), base_name, variant_name);
    write_output(out_path, manet::write_comparison(rows, base_name, variant_name));

    int status = 0;
    for (const auto& e : expectations) {
      bool matched = false;
      for (const auto& row : rows) {
        if (e.nodes && row.nodes != *e.nodes) continue;
        matched = true;
        const auto ratio = row.ratio(e.metric);
        const bool ok = ratio && (e.at_most ? *ratio <= e.ratio : *ratio >= e.ratio);
        if (!ok) {
          std::fprintf(stderr, "manetsim: expectation %s failed at nodes=%u (ratio %s)\n",
                       e.text.c_str(), row.nodes,
                       ratio ? std::to_string(*ratio).c_str() : "undefined");
          status = kExitExpect;
        }
      }
      if (!matched) {
        std::fprintf(stderr, "manetsim: expectation %s matched no node count\n", e.text.c_str());
        status = kExitExpect;
      }
    }
    return status;
  } catch (const manet::ConfigError& e) {
    std::cerr << "manetsim: config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const UsageError& e) {
    std::cerr << "manetsim: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    // mismatched comparison cells, bad CSV input
    std::cerr << "manetsim: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "manetsim: " << e.what() << '\n';
    return kExitRuntime;
  }
}
