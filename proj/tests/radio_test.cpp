#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "manet/network.hpp"
#include "manet/radio.hpp"

using namespace manet;

namespace {

RadioParams unit_params(Propagation p) {
  RadioParams r;
  r.tx_power = 1.0;
  r.height_tx = r.height_rx = 1.0;
  r.wavelength = 0.125;
  r.propagation = p;
  return r;
}

/// Quiet network: no beacons, no CBR traffic, no jitter.
ScenarioConfig quiet_config() {
  ScenarioConfig c;
  c.aodv.hello_interval = 0.0;
  c.traffic.flows = 0;
  c.mac.jitter_max = 0.0;
  c.duration = 10.0;
  return c;
}

Frame raw_frame(NodeId src, NodeId dst, std::uint64_t bits) {
  Frame f;
  f.src = src;
  f.dst = dst;
  f.payload = RoutingMessage{Hello{src}};
  f.size_bits = bits;
  return f;
}

Frame data_to(NodeId src, NodeId dst, std::uint32_t seq) {
  Frame f = make_data_frame(src, dst, DataPacket{0, seq, src, dst, 0.0, 0}, 512, MacParams{});
  return f;
}

}  // namespace

TEST(Propagation, ScaledVariantOracle) {
  const double p = received_power(unit_params(Propagation::kScaledTwoRay), 10.0);
  EXPECT_NEAR(p, 9.894646840072049e-09, 9.894646840072049e-09 * 1e-9);
  EXPECT_NEAR(p, 9.8947e-9, 9.8947e-9 * 1e-4);  // printed to five figures
}

TEST(Propagation, StandardVariantOracle) {
  EXPECT_NEAR(received_power(unit_params(Propagation::kStandardTwoRay), 10.0), 1e-4, 1e-4 * 1e-12);
}

TEST(Propagation, DoublingDistanceDividesBySixteen) {
  for (auto v : {Propagation::kScaledTwoRay, Propagation::kStandardTwoRay}) {
    const auto p = unit_params(v);
    for (double r : {1.0, 7.5, 120.0, 900.0}) {
      EXPECT_NEAR(received_power(p, r) / received_power(p, 2 * r), 16.0, 1e-9);
    }
  }
}

TEST(Propagation, RejectsNonPositiveDistance) {
  EXPECT_THROW(received_power(RadioParams{}, 0.0), std::domain_error);
}

TEST(Propagation, RangeInversion) {
  auto p = unit_params(Propagation::kStandardTwoRay);
  EXPECT_NEAR(range_for_threshold(p, 1e-8), 100.0, 1e-9);
  p.rx_thresh = 1e-8;
  EXPECT_NEAR(received_power(p, comm_range(p)), 1e-8, 1e-8 * 1e-9);
  const double r1 = range_for_threshold(p, 1e-8);
  const double r4 = range_for_threshold(p, 4e-8);
  EXPECT_NEAR(r4 / r1, 1.0 / std::sqrt(2.0), 1e-12);
}

TEST(Propagation, DefaultsGiveTwoHundredFiftyMeters) {
  RadioParams p;
  EXPECT_NEAR(comm_range(p), 250.0, 1e-9);
  EXPECT_NEAR(effective_rx_thresh(p), 3.4653562533460193e-14, 1e-22);
  p.propagation = Propagation::kStandardTwoRay;
  EXPECT_NEAR(comm_range(p), 250.0, 1e-9);
  validate(RadioParams{});
  RadioParams bad;
  bad.rx_thresh = 1e-10;
  bad.cs_thresh = 1e-9;
  EXPECT_THROW(validate(bad), std::invalid_argument);
}

TEST(PropagationProperty, MonotoneDecay) {
  RandomStream rng(17, StreamLabel::kTraffic);
  for (int i = 0; i < 1000; ++i) {
    RadioParams p;
    p.tx_power = rng.uniform(0.01, 10.0);
    p.gain_tx = rng.uniform(0.1, 4.0);
    p.gain_rx = rng.uniform(0.1, 4.0);
    p.height_tx = rng.uniform(0.5, 5.0);
    p.height_rx = rng.uniform(0.5, 5.0);
    p.wavelength = rng.uniform(0.01, 1.0);
    p.propagation = i % 2 ? Propagation::kScaledTwoRay : Propagation::kStandardTwoRay;
    const double r1 = rng.uniform(0.1, 1000.0);
    const double r2 = r1 + rng.uniform(0.01, 1000.0);
    ASSERT_GT(received_power(p, r1), received_power(p, r2));
  }
}

// --- energy -------------------------------------------------------------------

TEST(Energy, FrameEnergyOracles) {
  EnergyParams e;
  EXPECT_NEAR(tx_energy(8000, e, 2e6), 7.276e-4, 1e-15);
  EXPECT_NEAR(rx_energy(8000, e, 2e6), 2.004e-4, 1e-15);
  EXPECT_NEAR(tx_energy(16000, e, 2e6), 2 * tx_energy(8000, e, 2e6), 1e-18);
  EXPECT_NEAR(tx_energy(8000, e, 2e6) / rx_energy(8000, e, 2e6), 0.1819 / 0.0501, 1e-12);
  EnergyParams unit;
  unit.p_rx = 1.0;
  EXPECT_DOUBLE_EQ(rx_energy(1, unit, 1.0), 1.0);
  EXPECT_THROW(tx_energy(0, e, 2e6), std::invalid_argument);
}

TEST(Energy, DrainFloorsAtZero) {
  EnergyParams e;
  e.initial_energy = 1.0;
  EnergyLedger ledger(2, e);
  bool died = true;
  EXPECT_NEAR(ledger.drain(0, 0.3, EnergyUse::kTx, &died), 0.7, 1e-15);
  EXPECT_FALSE(died);
  EXPECT_TRUE(ledger.alive(0));
  ledger.drain(0, 0.6, EnergyUse::kRx);
  EXPECT_NEAR(ledger[0].residual, 0.1, 1e-15);
  EXPECT_DOUBLE_EQ(ledger.drain(0, 0.3, EnergyUse::kRx, &died), 0.0);
  EXPECT_TRUE(died);
  EXPECT_FALSE(ledger.alive(0));
  EXPECT_NEAR(ledger[0].consumed(), 1.0, 1e-12);
  EXPECT_LE(ledger.conservation_error(), 1e-12);
  EXPECT_THROW(ledger.drain(1, -1.0, EnergyUse::kTx), std::invalid_argument);
}

TEST(Energy, IdleAccrualSkipsBusyTime) {
  EnergyLedger ledger(1, EnergyParams{});
  ledger.note_busy(0, 2.0);
  ledger.accrue_idle(0, 10.0);
  EXPECT_NEAR(ledger[0].consumed_idle, 8.0 * 0.0350, 1e-12);
}

TEST(Energy, ScriptedExchangeDebitsExactly) {
  const int k = 25;
  const std::uint64_t bits = 12000;
  auto cfg = quiet_config();
  Network net(cfg, Mobility::fixed(Area{}, {{100, 100}, {200, 100}}));
  for (int i = 0; i < k; ++i) net.inject(0, raw_frame(0, kBroadcast, bits));
  net.run();
  const double air = static_cast<double>(bits) / 2e6;
  EXPECT_NEAR(net.energy()[0].consumed_tx, k * air * 0.1819, 1e-12);
  EXPECT_NEAR(net.energy()[1].consumed_rx, k * air * 0.0501, 1e-12);
  EXPECT_DOUBLE_EQ(net.energy()[0].consumed_rx, 0.0);
  EXPECT_DOUBLE_EQ(net.energy()[1].consumed_tx, 0.0);
  EXPECT_LE(net.energy().conservation_error(), 1e-9);
  EXPECT_EQ(net.metrics().mac_frames_tx, static_cast<std::uint64_t>(k));
  EXPECT_EQ(net.metrics().control_rx, static_cast<std::uint64_t>(k));
}

TEST(Energy, IdleExcludedFromMetricUnlessEnabled) {
  auto cfg = quiet_config();
  Network a(cfg, Mobility::fixed(Area{}, {{0, 0}, {100, 0}}));
  const auto ra = a.run();
  EXPECT_DOUBLE_EQ(ra.consumed_power, 0.0);
  EXPECT_NEAR(a.energy()[0].consumed_idle, 10.0 * 0.0350, 1e-12);
  cfg.energy.count_idle_in_metric = true;
  Network b(cfg, Mobility::fixed(Area{}, {{0, 0}, {100, 0}}));
  EXPECT_NEAR(b.run().consumed_power, 10.0 * 0.0350, 1e-12);
}

TEST(Energy, ExhaustedNodeFallsSilent) {
  auto cfg = quiet_config();
  cfg.energy.initial_energy = 0.01;  // about 11 frames of 12000 bits at 0.1819 W
  Network net(cfg, Mobility::fixed(Area{}, {{0, 0}, {100, 0}}));
  for (int i = 0; i < 40; ++i) net.inject(0, raw_frame(0, kBroadcast, 12000));
  const auto r = net.run();
  EXPECT_FALSE(net.energy().alive(0));
  EXPECT_EQ(r.dead_nodes, 1u);
  EXPECT_LT(net.transmissions_by(0), 40u);
  EXPECT_DOUBLE_EQ(net.energy()[0].residual, 0.0);
  EXPECT_LE(net.energy().conservation_error(), 1e-9);
}

// --- reception and collisions ----------------------------------------------

TEST(Channel, OneNeighbourInRangeOneReception) {
  auto cfg = quiet_config();
  Network net(cfg, Mobility::fixed(Area{}, {{0, 0}, {240, 0}, {600, 0}}));
  net.inject(0, raw_frame(0, kBroadcast, 1000));
  net.run_until(10.0);
  EXPECT_EQ(net.metrics().control_rx, 1u);
  EXPECT_DOUBLE_EQ(net.energy()[2].consumed_rx, 0.0);
}

TEST(Channel, NeighbourOutOfRangeNoReception) {
  auto cfg = quiet_config();
  Network net(cfg, Mobility::fixed(Area{}, {{0, 0}, {260, 0}}));
  net.inject(0, raw_frame(0, kBroadcast, 1000));
  net.run_until(10.0);
  EXPECT_EQ(net.metrics().control_rx, 0u);
}

TEST(Channel, HiddenTerminalsCollideAtCommonReceiver) {
  auto cfg = quiet_config();
  Network net(cfg, Mobility::fixed(Area{}, {{0, 0}, {200, 0}, {400, 0}}));
  net.inject(0, data_to(0, 1, 0));
  net.inject(2, data_to(2, 1, 1));
  net.run_until(10.0);
  EXPECT_EQ(net.metrics().delivered, 0u);
  EXPECT_EQ(net.metrics().dropped(DropCause::kCollision), 2u);
}

TEST(Channel, PartialOverlapCollidesBothWays) {
  for (bool reversed : {false, true}) {
    auto cfg = quiet_config();
    Network net(cfg, Mobility::fixed(Area{}, {{0, 0}, {200, 0}, {400, 0}}));
    const NodeId first = reversed ? 2 : 0, second = reversed ? 0 : 2;
    net.inject(first, data_to(first, 1, 0));
    net.run_until(0.001);  // data frames take about 2.4 ms
    net.inject(second, data_to(second, 1, 1));
    net.run_until(10.0);
    EXPECT_EQ(net.metrics().delivered, 0u);
    EXPECT_EQ(net.metrics().dropped(DropCause::kCollision), 2u);
  }
}

TEST(Channel, BackToBackFramesDoNotCollide) {
  auto cfg = quiet_config();
  Network net(cfg, Mobility::fixed(Area{}, {{0, 0}, {200, 0}, {400, 0}}));
  net.inject(0, data_to(0, 1, 0));
  net.run_until(0.005);
  net.inject(2, data_to(2, 1, 1));
  net.run_until(10.0);
  EXPECT_EQ(net.metrics().delivered, 2u);
}

TEST(Channel, OptionalCarrierSenseDefersInsteadOfColliding) {
  auto cfg = quiet_config();
  cfg.mac.carrier_sense = true;
  Network net(cfg, Mobility::fixed(Area{}, {{0, 0}, {100, 0}, {200, 0}}));
  net.inject(0, data_to(0, 1, 0));
  net.run_until(0.001);
  net.inject(2, data_to(2, 1, 1));
  net.run_until(10.0);
  EXPECT_EQ(net.metrics().delivered, 2u);
  EXPECT_EQ(net.deferrals(), 1u);
}

TEST(Channel, HalfDuplexSenderCannotReceive) {
  auto cfg = quiet_config();
  Network net(cfg, Mobility::fixed(Area{}, {{0, 0}, {100, 0}}));
  net.inject(0, data_to(0, 1, 0));
  net.inject(1, data_to(1, 0, 1));
  net.run_until(10.0);
  EXPECT_EQ(net.metrics().delivered, 0u);
}

TEST(ChannelProperty, DecodeRangeMatchesThreshold) {
  RandomStream rng(23, StreamLabel::kTraffic);
  const RadioParams radio;
  const double thresh = effective_rx_thresh(radio);
  const double range = comm_range(radio);
  for (int i = 0; i < 300; ++i) {
    const Position a{rng.uniform(0, 800), rng.uniform(0, 800)};
    const Position b{rng.uniform(0, 800), rng.uniform(0, 800)};
    const double d = euclidean(a, b);
    if (std::abs(d - range) < 1e-6 || d == 0.0) continue;
    auto cfg = quiet_config();
    Network net(cfg, Mobility::fixed(Area{}, {a, b}));
    const bool decodes = net.in_decode_range(0, 1, 0.0);
    ASSERT_EQ(decodes, received_power(radio, d) >= thresh);
    ASSERT_EQ(decodes, d <= range);
  }
}

TEST(ChannelProperty, CollisionOutcomeIndependentOfInjectionOrder) {
  RandomStream rng(29, StreamLabel::kTraffic);
  for (int i = 0; i < 50; ++i) {
    std::vector<Position> pos;
    for (int k = 0; k < 3; ++k) pos.push_back({rng.uniform(0, 500), rng.uniform(0, 500)});
    const double offset = rng.uniform(0.0, 0.004);
    std::uint64_t outcomes[2][2];
    for (int order = 0; order < 2; ++order) {
      auto cfg = quiet_config();
      Network net(cfg, Mobility::fixed(Area{}, pos));
      const NodeId a = order ? 2 : 0, c = order ? 0 : 2;
      net.inject(a, data_to(a, 1, 0));
      net.run_until(offset > 0 ? offset : 1e-9);
      net.inject(c, data_to(c, 1, 1));
      net.run_until(10.0);
      outcomes[order][0] = net.metrics().delivered;
      outcomes[order][1] = net.metrics().dropped(DropCause::kCollision);
    }
    ASSERT_EQ(outcomes[0][0], outcomes[1][0]);
    ASSERT_EQ(outcomes[0][1], outcomes[1][1]);
  }
}
