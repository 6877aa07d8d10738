#include <gtest/gtest.h>

#include <numeric>

#include "support.hpp"

namespace fnf {
namespace {

using test::home_registry;

PatternVector pv(std::vector<double> v) { return PatternVector(std::move(v)); }

// ---------------------------------------------------------------------------
// estimate_pattern

TEST(EstimatePattern, ConstantRoutine) {
  std::vector<Event> events;
  for (int d = 0; d < 7; ++d) events.push_back(test::lbl(d * kSecondsPerDay + 8 * 3600 + 1800, "Door_1", "contact", "open"));
  const auto f = estimate_pattern(events, 7);
  for (std::size_t i = 0; i < 24; ++i) EXPECT_DOUBLE_EQ(f[i], i == 8 ? 1.0 : 0.0);
}

TEST(EstimatePattern, ArithmeticMean) {
  std::vector<Event> events;
  for (int k = 0; k < 3; ++k) events.push_back(test::lbl(20 * 3600 + k, "Door_1", "contact", "open"));
  for (int k = 0; k < 5; ++k) events.push_back(test::lbl(kSecondsPerDay + 20 * 3600 + 60 + k, "Door_1", "contact", "open"));
  EXPECT_DOUBLE_EQ(estimate_pattern(events, 2)[20], 4.0);
}

TEST(EstimatePattern, EmptyIsZero) {
  const auto f = estimate_pattern(std::vector<Event>{}, 7);
  EXPECT_EQ(f.size(), 24u);
  EXPECT_DOUBLE_EQ(f.sum(), 0.0);
}

TEST(EstimatePattern, MatchesRecountOracle) {
  // two-peak synthetic trace
  std::mt19937_64 rng(5);
  std::vector<Event> events;
  for (int d = 0; d < 30; ++d)
    for (int k = 0; k < 40; ++k) {
      const int hour = (rng() % 2) ? 7 + static_cast<int>(rng() % 2) : 19 + static_cast<int>(rng() % 3);
      events.push_back(test::lbl(d * kSecondsPerDay + hour * 3600 + static_cast<int>(rng() % 3600), "Door_1", "contact", "open"));
    }
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.ts < b.ts; });
  for (std::int64_t window : {1, 7, 30}) {
    const auto f = estimate_pattern(events, window);
    std::vector<double> recount(24, 0.0);
    for (const auto& e : events) {
      const auto day = e.ts / 86400;
      if (day >= 30 - window) recount[static_cast<std::size_t>((e.ts % 86400) / 3600)] += 1.0;
    }
    for (std::size_t i = 0; i < 24; ++i) EXPECT_DOUBLE_EQ(f[i], recount[i] / static_cast<double>(window));
  }
  // unbounded window covers everything
  const auto all = estimate_pattern(events, std::nullopt);
  EXPECT_NEAR(all.sum(), 40.0, 1e-12);
}

// ---------------------------------------------------------------------------
// build_target

TEST(BuildTarget, UniformDirect) {
  const auto t = build_target(pv({1, 3, 2}), Uniform{});
  EXPECT_EQ(t.d, (std::vector<double>{3, 3, 3}));
  EXPECT_EQ(t.y, (std::vector<double>{2, 0, 1}));
  EXPECT_DOUBLE_EQ(t.leak_budget(), 0.0);
}

TEST(BuildTarget, GaussianFormula) {
  std::vector<double> f(24, 0.0);
  for (std::size_t i = 0; i < 24; ++i) f[i] = 0.1 * static_cast<double>(i % 5);
  f[12] = 5.0;
  const auto t = build_target(pv(f), Gaussian{4.0});
  for (std::size_t i = 0; i < 24; ++i) {
    const double x = static_cast<double>(i) - 12.0;  // |i-12| <= 12, so circular and linear agree
    const double d = 5.0 * std::exp(-x * x / 32.0);
    EXPECT_NEAR(t.d[i], d, 1e-12) << i;
    EXPECT_NEAR(t.y[i], std::max(d - f[i], 0.0), 1e-12) << i;
  }
  EXPECT_DOUBLE_EQ(t.d[12], 5.0);
}

TEST(BuildTarget, GaussianWrapsAroundMidnight) {
  std::vector<double> f(24, 0.0);
  f[1] = 2.0;
  const auto t = build_target(pv(f), Gaussian{4.0});
  EXPECT_NEAR(t.d[23], 2.0 * std::exp(-4.0 / 32.0), 1e-12);
  EXPECT_NEAR(t.d[0], t.d[2], 1e-12);
}

TEST(BuildTarget, GaussianSigmaFloor) {
  EXPECT_THROW(build_target(pv(std::vector<double>(24, 1.0)), Gaussian{3.9}), ConfigError);
  EXPECT_NO_THROW(build_target(pv(std::vector<double>(24, 1.0)), Gaussian{4.0}));
}

TEST(BuildTarget, AlreadyAtTarget) {
  const auto t = build_target(pv({2, 2, 2, 2}), Uniform{});
  for (double y : t.y) EXPECT_DOUBLE_EQ(y, 0.0);
}

TEST(BuildTarget, AllZeroIsDegenerate) {
  const auto t = build_target(PatternVector(24), Gaussian{4.0});
  EXPECT_TRUE(t.degenerate);
  for (std::size_t i = 0; i < 24; ++i) {
    EXPECT_DOUBLE_EQ(t.d[i], 0.0);
    EXPECT_DOUBLE_EQ(t.y[i], 0.0);
  }
}

TEST(BuildTarget, DeficitInvariants) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 10);
  for (int iter = 0; iter < 500; ++iter) {
    std::vector<double> f(24);
    for (auto& x : f) x = u(rng);
    for (const TargetDistribution& dist : {TargetDistribution{Uniform{}}, TargetDistribution{Gaussian{4.0 + u(rng)}}}) {
      const auto t = build_target(pv(f), dist);
      EXPECT_DOUBLE_EQ(*std::max_element(t.d.begin(), t.d.end()), *std::max_element(f.begin(), f.end()));
      double leak = 0;
      for (std::size_t i = 0; i < 24; ++i) {
        EXPECT_GE(t.y[i], 0.0);
        if (t.d[i] < f[i]) {
          EXPECT_EQ(t.y[i], 0.0);
        }
        leak += std::max(f[i] - t.d[i], 0.0);
      }
      EXPECT_NEAR(t.leak_budget(), leak, 1e-12);
    }
  }
}

// ---------------------------------------------------------------------------
// maybe_pseudo

struct PoolFixture {
  DeviceRegistry reg = home_registry();
  std::vector<Applet> applets = test::parse_all({"If Any new motion detected by Motion_Sensor_A, then Switch on Switch_A",
                                                 "If temperature is above 30 by Temp_1, then Switch on Switch_B",
                                                 "If contact is open by Door_1, then log door"},
                                                reg);
  TriggerTables tables = merge_applets(applets, reg);
  DevicePool pool = trigger_pool(tables, reg);
};

TEST(MaybePseudo, ZeroDeficitNeverEmits) {
  PoolFixture p;
  std::mt19937_64 rng(1);
  const std::vector<double> y(24, 0.0);
  for (int i = 0; i < 10000; ++i) EXPECT_FALSE(maybe_pseudo(0, 3600, y, rng, p.pool, i, UserId("u")));
}

TEST(MaybePseudo, FullDeficitAlwaysEmits) {
  PoolFixture p;
  std::mt19937_64 rng(1);
  const std::vector<double> y(24, 3600.0);
  for (int i = 0; i < 10000; ++i) {
    const auto e = maybe_pseudo(0, 3600, y, rng, p.pool, i, UserId("u"));
    ASSERT_TRUE(e);
    EXPECT_TRUE(e->pseudo);
    EXPECT_EQ(e->ts, i);
    // always a trigger value
    const auto* actions = p.tables.lookup(e->device, e->value);
    ASSERT_NE(actions, nullptr);
    EXPECT_FALSE(actions->empty());
  }
}

TEST(MaybePseudo, HalfDeficitBinomial) {
  PoolFixture p;
  std::mt19937_64 rng(77);
  const double m = 3600;
  const std::vector<double> y(24, m / 2);
  int hits = 0;
  for (int i = 0; i < 10000; ++i) hits += maybe_pseudo(3, m, y, rng, p.pool, i, UserId("u")).has_value();
  EXPECT_NEAR(hits / 10000.0, 0.5, 0.02);
}

TEST(MaybePseudo, EmptyPoolIsConfigError) {
  std::mt19937_64 rng(1);
  const std::vector<double> y(24, 1.0);
  EXPECT_THROW(maybe_pseudo(0, 3600, y, rng, DevicePool{}, 0, UserId("u")), ConfigError);
  EXPECT_NO_THROW(maybe_pseudo(0, 3600, std::vector<double>(24, 0.0), rng, DevicePool{}, 0, UserId("u")));
}

TEST(MaybePseudo, DeviceAndValueUniform) {
  PoolFixture p;
  ASSERT_EQ(p.pool.size(), 3u);
  std::mt19937_64 rng(8);
  std::map<std::string, int> per_device;
  std::map<std::int64_t, int> temps;
  const int n = 30000;
  for (int i = 0; i < n; ++i) {
    const auto e = draw_pseudo(p.pool, 0, UserId("u"), rng);
    ++per_device[e.device.str()];
    if (e.value.is_numeric()) {
      ++temps[e.value.as_number()];
      EXPECT_GE(e.value.as_number(), 31);
      EXPECT_LE(e.value.as_number(), 80);
    }
  }
  for (const auto& [d, c] : per_device) EXPECT_NEAR(c / static_cast<double>(n), 1.0 / 3.0, 0.015) << d;
  EXPECT_EQ(temps.size(), 50u);
}

// ---------------------------------------------------------------------------
// exchange

TEST(Exchange, RealCommandDelivered) {
  PoolFixture p;
  TaPlatform ta(p.applets);
  PseudoLedger ledger(p.tables);
  const std::vector<Event> batch{test::lbl(5, "Motion_Sensor_A", "motion", "active")};
  const auto r = exchange_round(std::span<const Event>(batch), ledger, ta);
  ASSERT_EQ(r.delivered.size(), 1u);
  EXPECT_EQ(r.delivered[0], (Command{5, UserId("u1"), DeviceId("Switch_A"), "on"}));
  EXPECT_TRUE(r.discarded.empty());
  EXPECT_TRUE(ledger.empty());
}

TEST(Exchange, PseudoCommandDiscarded) {
  PoolFixture p;
  TaPlatform ta(p.applets);
  PseudoLedger ledger(p.tables);
  auto e = test::lbl(5, "Motion_Sensor_A", "motion", "active");
  e.pseudo = true;
  const std::vector<Event> batch{e};
  const auto r = exchange_round(std::span<const Event>(batch), ledger, ta);
  EXPECT_TRUE(r.delivered.empty());
  EXPECT_EQ(r.discarded.size(), 1u);
  EXPECT_EQ(r.pseudo_sent, 1u);
  // T saw it as an ordinary event
  ASSERT_EQ(ta.log().size(), 1u);
  EXPECT_FALSE(ta.log().events[0].pseudo);
}

TEST(Exchange, EmptyBatchNeverReachesT) {
  PoolFixture p;
  TaPlatform ta(p.applets);
  PseudoLedger ledger(p.tables);
  const auto r = exchange_round(std::span<const Event>(), ledger, ta);
  EXPECT_EQ(ta.batches(), 0u);
  EXPECT_TRUE(r.delivered.empty());
}

TEST(Exchange, CollisionRejected) {
  PoolFixture p;
  TaPlatform ta(p.applets);
  PseudoLedger ledger(p.tables);
  auto real = test::lbl(5, "Motion_Sensor_A", "motion", "active");
  auto fake = real;
  fake.pseudo = true;
  const std::vector<Event> batch{real, fake};
  EXPECT_THROW(exchange_round(std::span<const Event>(batch), ledger, ta), ProtocolError);
  EXPECT_TRUE(ledger.empty());
  // different user at the same second is fine
  fake.user = UserId("u2");
  const std::vector<Event> ok{real, fake};
  const auto r = exchange_round(std::span<const Event>(ok), ledger, ta);
  EXPECT_EQ(r.delivered.size(), 1u);
  EXPECT_EQ(r.discarded.size(), 1u);
}

struct RogueTa {
  std::string exchange(std::string_view) {
    return wire::encode_commands(std::vector<Command>{Command{99, UserId("u1"), DeviceId("Switch_A"), "on"}});
  }
};

TEST(Exchange, UnmatchedCommandReported) {
  PoolFixture p;
  RogueTa ta;
  PseudoLedger ledger(p.tables);
  const std::vector<Event> batch{test::lbl(5, "Motion_Sensor_A", "motion", "active")};
  const auto r = exchange_round(std::span<const Event>(batch), ledger, ta);
  EXPECT_TRUE(r.delivered.empty());
  EXPECT_EQ(r.unmatched.size(), 1u);
}

TEST(Wire, RealAndPseudoSerializeIdentically) {
  auto real = test::num(7, "Temp_1", "temperature", 33);
  auto fake = real;
  fake.pseudo = true;
  EXPECT_EQ(wire::encode_batch(std::vector<Event>{real}), wire::encode_batch(std::vector<Event>{fake}));
  const auto j = nlohmann::json::parse(wire::encode_batch(std::vector<Event>{fake}));
  std::set<std::string> keys;
  for (const auto& [k, v] : j[0].items()) keys.insert(k);
  EXPECT_EQ(keys, (std::set<std::string>{"ts", "user", "device", "attribute", "value"}));
}

TEST(Wire, RoundTrip) {
  const std::vector<Event> batch{test::num(7, "Temp_1", "temperature", -3), test::lbl(8, "Door_1", "contact", "open")};
  const auto back = wire::decode_batch(wire::encode_batch(batch));
  EXPECT_EQ(back.events, batch);
  const std::vector<Command> cmds{Command{1, UserId("a"), DeviceId("S"), "off"}};
  EXPECT_EQ(wire::decode_commands(wire::encode_commands(cmds)), cmds);
  EXPECT_THROW(wire::decode_batch("{}"), ProtocolError);
  EXPECT_THROW(wire::decode_commands("[{\"ts\":1}]"), ProtocolError);
  EXPECT_EQ(wire::decode_batch(R"([{"ts":1,"user":"a"}, {"ts":1,"user":"a","device":"d","attribute":"x","value":2}])")
                .malformed,
            1u);
}

// ---------------------------------------------------------------------------
// refresh

// Poisson(rate_i) events per bucket per day.
void add_poisson_day(DailyCounts& h, std::int64_t day, const std::vector<double>& rate, std::mt19937_64& rng) {
  for (std::size_t i = 0; i < rate.size(); ++i) {
    std::poisson_distribution<int> k(rate[i]);
    for (int j = k(rng); j > 0; --j) h.add(day * kSecondsPerDay + static_cast<Timestamp>(i) * 3600 + 10);
  }
}

TEST(Refresh, StationaryDeficitConverges) {
  std::mt19937_64 rng(4);
  std::vector<double> rate(24);
  for (std::size_t i = 0; i < 24; ++i) rate[i] = 2.0 + 3.0 * std::sin(static_cast<double>(i) / 24.0 * 6.283) + 3.0;
  DailyCounts h(24, 0);
  std::vector<double> diffs;
  std::vector<double> prev;
  for (std::int64_t day = 0; day < 400; ++day) {
    add_poisson_day(h, day, rate, rng);
    const auto t = refresh_cycle(h, day + 1, std::nullopt, Uniform{});
    if (!prev.empty()) {
      double diff = 0;
      for (std::size_t i = 0; i < 24; ++i) diff = std::max(diff, std::abs(t.y[i] - prev[i]));
      diffs.push_back(diff);
    }
    prev = t.y;
  }
  const double early = std::accumulate(diffs.begin(), diffs.begin() + 20, 0.0) / 20;
  const double late = std::accumulate(diffs.end() - 20, diffs.end(), 0.0) / 20;
  EXPECT_LT(late, early / 10);
  EXPECT_LT(late, 0.05);
}

TEST(Refresh, RoutineShiftMovesArgmax) {
  std::mt19937_64 rng(6);
  std::vector<double> before(24, 0.5), after(24, 0.5);
  before[8] = 10;
  after[11] = 10;
  const std::int64_t p = 7;
  DailyCounts h(24, 0);
  for (std::int64_t day = 0; day < 20; ++day) add_poisson_day(h, day, before, rng);
  EXPECT_EQ(refresh_cycle(h, 20, p, Uniform{}).f.argmax(), 8u);
  for (std::int64_t day = 20; day < 20 + p; ++day) add_poisson_day(h, day, after, rng);
  EXPECT_EQ(refresh_cycle(h, 20 + p, p, Uniform{}).f.argmax(), 11u);
}

TEST(Refresh, UnboundedWindowIsFullHistory) {
  std::mt19937_64 rng(7);
  std::vector<Event> events;
  DailyCounts h(24, 0);
  for (std::int64_t day = 0; day < 15; ++day)
    for (int k = 0; k < 10; ++k) {
      const Timestamp ts = day * kSecondsPerDay + static_cast<Timestamp>(rng() % 86400);
      events.push_back(test::lbl(ts, "Door_1", "contact", "open"));
    }
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.ts < b.ts; });
  for (const auto& e : events) h.add(e.ts);
  const auto t = refresh_cycle(h, 15, std::nullopt, Uniform{});
  const auto f = estimate_pattern(events, std::nullopt);
  for (std::size_t i = 0; i < 24; ++i) EXPECT_NEAR(t.f[i], f[i], 1e-12);
}

// ---------------------------------------------------------------------------
// gateway-level properties

struct Stationary {
  DeviceRegistry reg = home_registry();
  std::vector<Applet> applets = test::parse_all({"If Any new motion detected by Motion_Sensor_A, then Switch on Switch_A",
                                                 "If motion is inactive by Motion_Sensor_A, then Switch off Switch_A"},
                                                reg);
  TriggerTables tables = merge_applets(applets, reg);
  std::vector<double> rate;  // forwarded events per hour bucket per day
  std::vector<Event> trace;

  explicit Stationary(std::int64_t days, std::uint64_t seed) : rate(24) {
    for (std::size_t i = 0; i < 24; ++i) rate[i] = (i >= 7 && i <= 9) ? 6.0 : (i >= 18 && i <= 22 ? 4.0 : 0.5);
    std::mt19937_64 rng(seed);
    bool active = false;
    for (std::int64_t d = 0; d < days; ++d)
      for (std::size_t i = 0; i < 24; ++i) {
        std::poisson_distribution<int> k(rate[i]);
        std::vector<Timestamp> ts;
        for (int j = k(rng); j > 0; --j) ts.push_back(d * kSecondsPerDay + static_cast<Timestamp>(i * 3600 + rng() % 3600));
        std::sort(ts.begin(), ts.end());
        ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
        for (auto t : ts) {
          active = !active;  // alternate so every event changes the switch
          trace.push_back(test::lbl(t, "Motion_Sensor_A", "motion", active ? "active" : "inactive"));
        }
      }
  }
};

// Expected observed count per bucket equals d_i once F has settled.
TEST(GatewayFuzz, ObservedCountsReachTarget) {
  const std::int64_t days = 60;
  Stationary s(days, 12);
  TaPlatform ta(s.applets);
  GatewayConfig cfg;
  cfg.mode = Mode::FuzzIdeal;
  cfg.p_days = 14;
  cfg.seed = 3;
  const auto r = replay(std::span<const Event>(s.trace), s.tables, s.reg, ta, cfg);
  EXPECT_EQ(r.unmatched, 0u);
  // observed per bucket over the second half
  std::vector<double> seen(24, 0.0);
  for (const auto& e : ta.log().events)
    if (day_of(e.ts) >= days / 2) seen[bucket_of(e.ts, 24)] += 1.0;
  const double half = static_cast<double>(days / 2);
  const double d = 6.0;  // max rate; target is flat at the peak
  for (std::size_t i = 0; i < 24; ++i) {
    const double mean = seen[i] / half;
    // counts are roughly Poisson(d) per day; allow 4 standard errors plus the
    // estimation error of max(F) over a 14-day window
    EXPECT_NEAR(mean, d, 4.0 * std::sqrt(d / half) + 1.2) << "bucket " << i;
  }
  const auto snap = adversary_snapshot(ta.log(), 24, days / 2, days);
  const auto& v = snap.at(UserId("u1"));
  EXPECT_LT(std::abs(test::oracle_pearson(v.values(), s.rate)), 0.6);
}

TEST(GatewayFuzz, LedgerSoundAndFunctionPreserved) {
  Stationary s(10, 13);
  const auto want = test::oracle_state_changes(s.trace, s.applets);
  for (auto mode : {Mode::FuzzIdeal, Mode::FuzzGaussian, Mode::FuzzNaive}) {
    TaPlatform ta(s.applets);
    GatewayConfig cfg;
    cfg.mode = mode;
    cfg.naive_rate = 20;
    cfg.seed = 5;
    StateRegistry reg(s.reg);
    const auto r = replay(std::span<const Event>(s.trace), s.tables, s.reg, ta, cfg, &reg);
    EXPECT_GT(r.pseudo_sent, 0u) << to_string(mode);
    EXPECT_EQ(r.unmatched, 0u);
    EXPECT_EQ(r.discarded, r.pseudo_sent);  // every pseudo event here fires one applet
    EXPECT_EQ(r.state_changes, want) << to_string(mode);
    // no delivered command lacks a real cause
    std::set<std::pair<Timestamp, std::string>> real_ticks;
    for (const auto& e : r.forwarded) real_ticks.emplace(e.ts, e.user.str());
    for (const auto& c : r.delivered) EXPECT_TRUE(real_ticks.count({c.ts, c.user.str()}));
  }
}

TEST(GatewayFuzz, NoPseudoOnRealTicks) {
  Stationary s(5, 14);
  TaPlatform ta(s.applets);
  GatewayConfig cfg;
  cfg.mode = Mode::FuzzNaive;
  cfg.naive_rate = 3000;  // nearly every tick
  const auto r = replay(std::span<const Event>(s.trace), s.tables, s.reg, ta, cfg);
  std::map<Timestamp, int> per_tick;
  for (const auto& e : ta.log().events) ++per_tick[e.ts];
  for (const auto& [ts, n] : per_tick) EXPECT_EQ(n, 1) << ts;
  EXPECT_GT(r.pseudo_sent, 10000u);
}

TEST(GatewayFuzz, PerDeviceChannels) {
  const auto reg = home_registry();
  const auto applets = test::parse_all({"If Any new motion detected by Motion_Sensor_A, then Switch on Switch_A",
                                        "If contact is open by Door_1, then Switch on Switch_B"},
                                       reg);
  const auto tables = merge_applets(applets, reg);
  std::vector<Event> trace;
  for (int d = 0; d < 10; ++d) {
    trace.push_back(test::lbl(d * kSecondsPerDay + 3600, "Motion_Sensor_A", "motion", "active"));
    trace.push_back(test::lbl(d * kSecondsPerDay + 3601, "Switch_A", "switch", "off"));
    trace.push_back(test::lbl(d * kSecondsPerDay + 7200, "Door_1", "contact", "open"));
    trace.push_back(test::lbl(d * kSecondsPerDay + 7201, "Switch_B", "switch", "off"));
  }
  TaPlatform ta(applets);
  GatewayConfig cfg;
  cfg.mode = Mode::FuzzIdeal;
  cfg.per_device = true;
  const auto r = replay(std::span<const Event>(trace), tables, reg, ta, cfg);
  std::map<std::string, int> by_device;
  for (const auto& e : ta.log().events) ++by_device[e.device.str()];
  // each channel flattens its own device to one event per bucket per day
  EXPECT_NEAR(by_device["Motion_Sensor_A"] / 9.0, 24.0, 6.0);
  EXPECT_NEAR(by_device["Door_1"] / 9.0, 24.0, 6.0);
  EXPECT_EQ(r.unmatched, 0u);
}

}  // namespace
}  // namespace fnf
