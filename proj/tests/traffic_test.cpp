#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "manet/network.hpp"
#include "manet/traffic.hpp"

using namespace manet;

TEST(Flows, DistinctPairs) {
  RandomStream rng(1, StreamLabel::kTraffic);
  TrafficParams t;
  const auto flows = spawn_flows(10, t, rng);
  ASSERT_EQ(flows.size(), 10u);
  std::set<std::pair<NodeId, NodeId>> pairs;
  for (const auto& f : flows) {
    EXPECT_NE(f.src, f.dst);
    EXPECT_LT(f.src, 10u);
    EXPECT_LT(f.dst, 10u);
    EXPECT_TRUE(pairs.emplace(f.src, f.dst).second);
    EXPECT_DOUBLE_EQ(f.interval, 0.25);
    EXPECT_GE(f.start_at, 10.0);
    EXPECT_LT(f.start_at, 10.25);
    EXPECT_DOUBLE_EQ(f.stop_at - f.start_at, 180.0);
  }
}

TEST(Flows, AllPairsWhenSaturated) {
  RandomStream rng(3, StreamLabel::kTraffic);
  TrafficParams t;
  t.flows = 12;
  const auto flows = spawn_flows(4, t, rng);
  std::set<std::pair<NodeId, NodeId>> pairs;
  for (const auto& f : flows) pairs.emplace(f.src, f.dst);
  EXPECT_EQ(pairs.size(), 12u);
}

TEST(Flows, RejectsImpossibleRequests) {
  RandomStream rng(1, StreamLabel::kTraffic);
  TrafficParams t;
  t.flows = 3;
  EXPECT_THROW(spawn_flows(2, t, rng), std::invalid_argument);
  EXPECT_THROW(spawn_flows(1, t, rng), std::invalid_argument);
  t.flows = 1;
  t.rate = 0.0;
  EXPECT_THROW(spawn_flows(5, t, rng), std::invalid_argument);
  t.rate = 4.0;
  t.start = t.stop;
  EXPECT_THROW(spawn_flows(5, t, rng), std::invalid_argument);
}

TEST(Flows, DeterministicPerSeed) {
  RandomStream a(8, StreamLabel::kTraffic), b(8, StreamLabel::kTraffic);
  const auto fa = spawn_flows(20, TrafficParams{}, a);
  const auto fb = spawn_flows(20, TrafficParams{}, b);
  ASSERT_EQ(fa.size(), fb.size());
  for (std::size_t i = 0; i < fa.size(); ++i) {
    EXPECT_EQ(fa[i].src, fb[i].src);
    EXPECT_EQ(fa[i].dst, fb[i].dst);
    EXPECT_EQ(fa[i].start_at, fb[i].start_at);
  }
}

TEST(Cbr, FourHundredPacketsInHundredSeconds) {
  CbrFlow f{0, 0, 1, 512, 0.25, 0.0, 100.0};
  EXPECT_EQ(f.expected_packets(), 400u);
  EXPECT_DOUBLE_EQ(f.tick(399), 99.75);
  CbrFlow g{0, 0, 1, 512, 0.25, 10.1, 190.1};
  EXPECT_EQ(g.expected_packets(), 720u);
}

TEST(Cbr, GeneratedMatchesFlowWindows) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    ScenarioConfig cfg;
    cfg.seed = seed;
    cfg.duration = 60.0;
    cfg.traffic.start = 5.0;
    cfg.traffic.stop = 50.0;
    Network net(cfg);
    const auto r = net.run();
    std::uint64_t want = 0;
    for (const auto& f : net.flows()) {
      EXPECT_EQ(f.expected_packets(), 180u);  // 45 s at 4 packets/s
      want += f.expected_packets();
    }
    EXPECT_EQ(r.generated, want);
  }
}

TEST(Cbr, DeadSourceStopsGenerating) {
  ScenarioConfig cfg;
  cfg.mobility.speed_min = cfg.mobility.speed_max = 0.0;
  cfg.traffic.flows = 1;
  cfg.traffic.start = 1.0;
  cfg.traffic.stop = 100.0;
  cfg.duration = 100.0;
  cfg.energy.initial_energy = 0.5;  // idle drain empties it after ~14 s
  Network net(cfg, Mobility::fixed(Area{}, {{0, 0}, {100, 0}}));
  const auto r = net.run();
  EXPECT_EQ(r.dead_nodes, 2u);
  EXPECT_LT(r.generated, 60u);
  EXPECT_GT(r.generated, 0u);
}

TEST(Delivery, DuplicateIsIdempotent) {
  MetricsAccumulator acc;
  acc.generated = 2;
  const DataPacket p{3, 7, 0, 1, 1.0, 0};
  EXPECT_TRUE(acc.on_delivered(p, 1.5));
  EXPECT_FALSE(acc.on_delivered(p, 1.6));
  EXPECT_EQ(acc.delivered, 1u);
  EXPECT_DOUBLE_EQ(acc.latency_sum, 0.5);
}

// --- metric oracles ---------------------------------------------------------------

TEST(Metrics, ThroughputOracle) {
  MetricsAccumulator acc;
  acc.generated = acc.delivered = 600;
  EnergyLedger ledger(2, EnergyParams{});
  EXPECT_DOUBLE_EQ(finalize(acc, 200.0, ledger).throughput, 0.003);
  acc.delivered = 0;
  EXPECT_DOUBLE_EQ(finalize(acc, 200.0, ledger).throughput, 0.0);
}

TEST(Metrics, DroppedSumsCauses) {
  MetricsAccumulator acc;
  acc.generated = 100;
  for (int i = 0; i < 40; ++i) acc.on_dropped(DropCause::kQueueFull);
  for (int i = 0; i < 25; ++i) acc.on_dropped(DropCause::kCollision);
  for (int i = 0; i < 35; ++i) acc.on_dropped(DropCause::kNoRoute);
  const auto r = finalize(acc, 10.0, EnergyLedger(2, EnergyParams{}));
  EXPECT_EQ(r.dropped_packets, 100u);
  EXPECT_EQ(r.drop_queue + r.drop_collision + r.drop_noroute, 100u);
  EXPECT_EQ(r.in_flight, 0u);
}

TEST(Metrics, SettlingMoreThanGeneratedIsABug) {
  MetricsAccumulator acc;
  acc.generated = 1;
  acc.on_dropped(DropCause::kTtl);
  acc.on_delivered(DataPacket{}, 0.0);
  EXPECT_THROW(finalize(acc, 10.0, EnergyLedger(2, EnergyParams{})), std::logic_error);
}

TEST(Metrics, ConsumedPowerOracle) {
  EnergyLedger ledger(2, EnergyParams{});
  ledger.drain(0, 4.0, EnergyUse::kTx);
  ledger.drain(1, 2.0, EnergyUse::kRx);
  ledger.drain(1, 7.0, EnergyUse::kIdle);  // excluded by default
  EXPECT_DOUBLE_EQ(finalize(MetricsAccumulator{}, 10.0, ledger).consumed_power, 3.0);
  EnergyParams with_idle;
  with_idle.count_idle_in_metric = true;
  EnergyLedger l2(2, with_idle);
  l2.drain(0, 4.0, EnergyUse::kTx);
  l2.drain(1, 2.0, EnergyUse::kIdle);
  EXPECT_DOUBLE_EQ(finalize(MetricsAccumulator{}, 10.0, l2).consumed_power, 3.0);
}

TEST(Metrics, ControlOverheadDecomposes) {
  MetricsAccumulator acc;
  acc.control_tx = {10, 4, 2, 30};
  acc.control_rx = 54;
  const auto r = finalize(acc, 10.0, EnergyLedger(2, EnergyParams{}));
  EXPECT_EQ(r.control_overhead, 100u);
  EXPECT_EQ(r.rreq_tx + r.rrep_tx + r.rerr_tx + r.hello_tx + r.control_rx, r.control_overhead);
}

TEST(MetricsProperty, IdentitiesHoldOverRandomScenarios) {
  RandomStream pick(99, StreamLabel::kTraffic);
  for (int i = 0; i < 8; ++i) {
    ScenarioConfig cfg;
    cfg.seed = 100 + i;
    cfg.nodes = 5 + static_cast<std::uint32_t>(pick.below(30));
    cfg.protocol = pick.below(2) ? Protocol::kAodvExt : Protocol::kAodv;
    cfg.duration = 40.0 + pick.uniform(0.0, 40.0);
    cfg.traffic.stop = cfg.duration - 5.0;
    cfg.traffic.flows = 1 + static_cast<std::uint32_t>(pick.below(15));
    Network net(cfg);
    const auto r = net.run();
    SCOPED_TRACE(::testing::Message() << "nodes=" << cfg.nodes << " seed=" << cfg.seed);
    EXPECT_EQ(r.delivered + r.dropped_packets + r.in_flight, r.generated);
    EXPECT_EQ(r.in_flight, net.data_in_custody());
    EXPECT_LE(r.delivered, r.generated);
    EXPECT_LE(r.drop_queue + r.drop_collision + r.drop_noroute + r.drop_buffer, r.dropped_packets);
    EXPECT_EQ(r.rreq_tx + r.rrep_tx + r.rerr_tx + r.hello_tx + r.control_rx, r.control_overhead);
    if (r.mac_load) {
      EXPECT_NEAR(*r.mac_load * static_cast<double>(r.delivered),
                  static_cast<double>(r.mac_frames_tx), 1e-6);
    }
    EXPECT_LT(net.energy().conservation_error(), 1e-6);
    EXPECT_GE(r.consumed_power, 0.0);
  }
}
