#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "manet/engine.hpp"
#include "manet/rng.hpp"

using namespace manet;

namespace {

struct Log {
  std::vector<std::string> order;
  std::vector<SimTime> times;
};

}  // namespace

TEST(Scheduler, ZeroTimeEventRunsBeforeLaterOnes) {
  Scheduler<std::string> s;
  s.schedule(1.0, "later");
  s.schedule(0.0, "now");
  Log log;
  s.run_until(5.0, [&](SimTime, std::string& p) { log.order.push_back(p); });
  EXPECT_EQ(log.order, (std::vector<std::string>{"now", "later"}));
}

TEST(Scheduler, TiesBreakByInsertionOrder) {
  Scheduler<std::string> s;
  s.schedule(5.0, "A");
  s.schedule(5.0, "B");
  s.schedule(5.0, "C");
  Log log;
  s.run_until(10.0, [&](SimTime, std::string& p) { log.order.push_back(p); });
  EXPECT_EQ(log.order, (std::vector<std::string>{"A", "B", "C"}));
}

TEST(Scheduler, CancelledEventNeverFires) {
  Scheduler<int> s;
  s.schedule(1.0, 1);
  auto h = s.schedule(2.0, 2);
  s.schedule(3.0, 3);
  s.cancel(h);
  EXPECT_EQ(s.pending(), 2u);
  std::vector<int> seen;
  s.run_until(10.0, [&](SimTime, int& p) { seen.push_back(p); });
  EXPECT_EQ(seen, (std::vector<int>{1, 3}));
  s.cancel(h);  // already cancelled: no-op
  EXPECT_EQ(s.pending(), 0u);
}

TEST(Scheduler, CancelAfterDispatchIsNoop) {
  Scheduler<int> s;
  auto h = s.schedule(1.0, 1);
  s.run_until(2.0, [](SimTime, int&) {});
  s.cancel(h);
  EXPECT_EQ(s.pending(), 0u);
}

TEST(Scheduler, EmptyQueueDrainsEarly) {
  Scheduler<int> s;
  const auto r = s.run_until(10.0, [](SimTime, int&) {});
  EXPECT_EQ(r.dispatched, 0u);
  EXPECT_TRUE(r.drained);
  EXPECT_LT(r.clock, 10.0);
}

TEST(Scheduler, StopsAtEndTime) {
  Scheduler<int> s;
  for (int i = 1; i <= 3; ++i) s.schedule(i, i);
  const auto r = s.run_until(2.5, [](SimTime, int&) {});
  EXPECT_EQ(r.dispatched, 2u);
  EXPECT_FALSE(r.drained);
  EXPECT_DOUBLE_EQ(r.clock, 2.5);
  EXPECT_EQ(s.pending(), 1u);
}

TEST(Scheduler, EventAtEndTimeIsDispatched) {
  Scheduler<int> s;
  s.schedule(2.0, 0);
  EXPECT_EQ(s.run_until(2.0, [](SimTime, int&) {}).dispatched, 1u);
}

TEST(Scheduler, RejectsPastAndNonFiniteTimes) {
  Scheduler<int> s;
  s.schedule(2.0, 0);
  s.run_until(2.0, [](SimTime, int&) {});
  EXPECT_THROW(s.schedule(1.0, 0), std::logic_error);
  EXPECT_THROW(s.schedule(std::nan(""), 0), std::logic_error);
  EXPECT_THROW(s.schedule(INFINITY, 0), std::logic_error);
  EXPECT_THROW(s.run_until(0.0, [](SimTime, int&) {}), std::logic_error);
}

TEST(Scheduler, HandlersMayScheduleFollowUps) {
  Scheduler<int> s;
  s.schedule(0.0, 0);
  std::vector<SimTime> times;
  s.run_until(1.0, [&](SimTime t, int& n) {
    times.push_back(t);
    if (n < 5) s.schedule_in(0.1, n + 1);
  });
  ASSERT_EQ(times.size(), 6u);
  EXPECT_NEAR(times.back(), 0.5, 1e-12);
}

TEST(SchedulerProperty, ClockIsMonotoneUnderRandomLoad) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    RandomStream rng(seed, StreamLabel::kTraffic);
    Scheduler<int> s;
    std::vector<EventHandle> handles;
    for (int i = 0; i < 500; ++i) handles.push_back(s.schedule(rng.uniform(0.0, 100.0), i));
    for (int i = 0; i < 100; ++i) s.cancel(handles[rng.below(handles.size())]);
    SimTime last = 0.0;
    std::vector<std::pair<SimTime, int>> trace;
    s.run_until(100.0, [&](SimTime t, int& id) {
      ASSERT_GE(t, last);
      ASSERT_DOUBLE_EQ(t, s.now());
      last = t;
      trace.emplace_back(t, id);
      if (id % 7 == 0 && t < 90.0) s.schedule(t + rng.uniform(0.0, 5.0), id + 1000);
    });
    for (std::size_t i = 1; i < trace.size(); ++i) {
      if (trace[i].first == trace[i - 1].first && trace[i].second < 1000 && trace[i - 1].second < 1000) {
        EXPECT_LT(trace[i - 1].second, trace[i].second);
      }
    }
  }
}

// --- generators -------------------------------------------------------------

TEST(Xoshiro, MatchesReferenceOutputs) {
  Xoshiro256StarStar g({1, 2, 3, 4});
  const std::array<std::uint64_t, 6> expected{11520ull, 0ull, 1509978240ull,
                                              1215971899390074240ull, 1216172134540287360ull,
                                              607988272756665600ull};
  for (auto e : expected) EXPECT_EQ(g.next(), e);
}

TEST(SplitMix, MatchesReferenceOutputs) {
  SplitMix64 g(1234567);
  const std::array<std::uint64_t, 5> expected{6457827717110365317ull, 3203168211198807973ull,
                                              9817491932198370423ull, 4593380528125082431ull,
                                              16408922859458223821ull};
  for (auto e : expected) EXPECT_EQ(g.next(), e);
}

TEST(RandomStream, UniformStaysInHalfOpenRange) {
  RandomStream r(42, StreamLabel::kExtGate);
  for (int i = 0; i < 100000; ++i) {
    const double v = r.uniform(0.0, 100.0);
    ASSERT_GE(v, 0.0);
    ASSERT_LT(v, 100.0);
  }
  EXPECT_THROW(r.uniform(1.0, 1.0), std::logic_error);
  EXPECT_THROW(r.below(0), std::logic_error);
}

TEST(RandomStream, SameSeedSameSequence) {
  RandomStream a(9, StreamLabel::kTraffic), b(9, StreamLabel::kTraffic);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.uniform(0.0, 1.0), b.uniform(0.0, 1.0));
}

TEST(RandomStream, MeanOfMillionDraws) {
  RandomStream r(3, StreamLabel::kExtGate);
  double sum = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) sum += r.uniform(0.0, 100.0);
  EXPECT_NEAR(sum / n, 50.0, 0.5);
}

TEST(RandomStream, LabelsAreIsolated) {
  RandomStream gate_a(5, StreamLabel::kExtGate);
  RandomStream gate_b(5, StreamLabel::kExtGate);
  RandomStream jitter(5, StreamLabel::kMacJitter);
  std::vector<double> first;
  for (int i = 0; i < 50; ++i) first.push_back(gate_a.uniform(0.0, 100.0));
  for (int i = 0; i < 1000; ++i) jitter.uniform(0.0, 1.0);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(gate_b.uniform(0.0, 100.0), first[i]);
  RandomStream other(5, StreamLabel::kMacJitter);
  EXPECT_NE(other.next_u64(), RandomStream(5, StreamLabel::kExtGate).next_u64());
}

TEST(RandomStream, IndexedStreamsDiffer) {
  RandomStream a(1, StreamLabel::kMobility, 0), b(1, StreamLabel::kMobility, 1);
  EXPECT_NE(a.next_u64(), b.next_u64());
}

TEST(RandomStream, BelowIsUnbiasedEnough) {
  RandomStream r(11, StreamLabel::kTraffic);
  std::array<int, 7> counts{};
  const int n = 70000;
  for (int i = 0; i < n; ++i) ++counts[r.below(7)];
  for (int c : counts) EXPECT_NEAR(c, n / 7, 400);
}
