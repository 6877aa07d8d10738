#pragma once

// The gateway S: replays a trace one protocol tick (one second) at a time,
// filters real events, adds pseudo-events, exchanges each batch with T and
// delivers the commands that belong to real events.

#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fnf/applet_catalog.hpp"
#include "fnf/filter_engine.hpp"
#include "fnf/fuzz_engine.hpp"

namespace fnf {

enum class Mode { Baseline, Filter, FuzzIdeal, FuzzGaussian, FuzzNaive };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::Baseline: return "baseline";
    case Mode::Filter: return "filter";
    case Mode::FuzzIdeal: return "fuzz-ideal";
    case Mode::FuzzGaussian: return "fuzz-gaussian";
    case Mode::FuzzNaive: return "fuzz-naive";
  }
  return "?";
}

inline Mode parse_mode(const std::string& s) {
  for (auto m : {Mode::Baseline, Mode::Filter, Mode::FuzzIdeal, Mode::FuzzGaussian, Mode::FuzzNaive})
    if (s == to_string(m)) return m;
  throw ConfigError("unknown mode '" + s + "'");
}

inline bool is_fuzz(Mode m) { return m == Mode::FuzzIdeal || m == Mode::FuzzGaussian || m == Mode::FuzzNaive; }

struct GatewayConfig {
  Mode mode = Mode::Filter;
  std::size_t n = 24;
  std::optional<std::int64_t> p_days = 7;
  double ticks_per_bucket = 3600.0;
  double sigma = 4.0;
  bool per_device = false;
  double naive_rate = 1.0;  // pseudo-events per bucket per day in fuzz-naive
  FilterOptions filter;
  std::uint64_t seed = 1;
  // Fuzzing covers [first_day, end_day); end_day defaults to the day after the
  // last event.
  std::int64_t first_day = 0;
  std::optional<std::int64_t> end_day;
  std::vector<UserId> users;  // fuzzed users; defaults to those in the trace
};

struct ReplayResult {
  FilterStats stats;
  std::vector<Event> forwarded;        // real events uploaded, values as sent
  std::vector<Command> delivered;      // commands delivered to actuators
  std::vector<Command> state_changes;  // delivered commands that changed state
  std::uint64_t real_sent = 0;
  std::uint64_t pseudo_sent = 0;
  std::uint64_t discarded = 0;
  std::uint64_t unmatched = 0;
  std::uint64_t collisions_skipped = 0;
  std::uint64_t batches = 0;
  std::map<UserId, double> leak_budget;  // mean per refresh

  double overhead_ratio() const {
    return real_sent == 0 ? 0.0 : static_cast<double>(real_sent + pseudo_sent) / static_cast<double>(real_sent);
  }

  nlohmann::json to_json() const {
    nlohmann::json leak = nlohmann::json::object();
    for (const auto& [u, v] : leak_budget) leak[u.str()] = v;
    return {{"filter", stats.to_json()},        {"real_sent", real_sent},
            {"pseudo_sent", pseudo_sent},       {"discarded", discarded},
            {"unmatched", unmatched},           {"collisions_skipped", collisions_skipped},
            {"batches", batches},               {"delivered", delivered.size()},
            {"state_changes", state_changes.size()}, {"overhead_ratio", overhead_ratio()},
            {"leak_budget", leak}};
  }
};

template <TaEndpoint Ta>
ReplayResult replay(std::span<const Event> trace, const TriggerTables& tables, const DeviceRegistry& devices, Ta& ta,
                    const GatewayConfig& cfg, StateRegistry* registry_out = nullptr) {
  require_sorted(trace);
  for (const auto& e : trace) {
    if (e.pseudo) throw DomainError("trace events must not be pseudo");
    devices.validate(e.device, e.value);
  }

  ReplayResult out;
  StateRegistry local(devices);
  StateRegistry& registry = registry_out ? *registry_out : local;
  std::mt19937_64 filter_rng(cfg.seed);
  std::mt19937_64 fuzz_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  PseudoLedger ledger(tables);

  const bool fuzz = is_fuzz(cfg.mode);
  const auto pool = trigger_pool(tables, devices);
  std::vector<Fuzzer> fuzzers;
  if (fuzz) {
    FuzzConfig fc;
    fc.n = cfg.n;
    fc.p_days = cfg.p_days;
    fc.ticks_per_bucket = cfg.ticks_per_bucket;
    fc.per_device = cfg.per_device;
    if (cfg.mode == Mode::FuzzGaussian) fc.distribution = Gaussian{cfg.sigma};
    if (cfg.mode == Mode::FuzzNaive) fc.naive_rate = cfg.naive_rate;
    std::set<UserId> users(cfg.users.begin(), cfg.users.end());
    if (users.empty())
      for (const auto& e : trace) users.insert(e.user);
    for (const auto& u : users) fuzzers.emplace_back(u, pool, fc, cfg.first_day);
  }

  std::vector<Event> batch;
  auto run_batch = [&] {
    if (batch.empty()) return;
    auto res = exchange_recorded(std::span<const Event>(batch), ledger, ta);
    ++out.batches;
    out.real_sent += res.real_sent;
    out.pseudo_sent += res.pseudo_sent;
    out.discarded += res.discarded.size();
    out.unmatched += res.unmatched.size();
    for (const auto& c : res.unmatched)
      std::clog << "gateway: unmatched command " << c.user.str() << "/" << c.device.str() << " at t=" << c.ts << "\n";
    for (auto& c : res.delivered) {
      if (registry.apply(c)) out.state_changes.push_back(c);
      out.delivered.push_back(std::move(c));
    }
    batch.clear();
  };

  // Collects the real events of one tick into `batch`.
  std::set<UserId> real_users;
  FilterResult tick_result;
  auto take_tick = [&](std::span<const Event> tick) {
    real_users.clear();
    if (cfg.mode == Mode::Baseline) {
      for (const auto& ev : tick) {
        registry.apply(ev);
        out.stats.record(Forward{ev});
        batch.push_back(ev);
      }
    } else {
      tick_result.forwarded.clear();
      tick_result.stats = {};
      filter_tick(tick, tables, registry, filter_rng, tick_result, cfg.filter);
      out.stats.input_count += tick_result.stats.input_count;
      out.stats.forwarded_count += tick_result.stats.forwarded_count;
      out.stats.untrigger_device += tick_result.stats.untrigger_device;
      out.stats.untrigger_state += tick_result.stats.untrigger_state;
      out.stats.actuator_csv += tick_result.stats.actuator_csv;
      for (auto& ev : tick_result.forwarded) batch.push_back(ev);
    }
    for (const auto& ev : batch) {
      real_users.insert(ev.user);
      ledger.record(ev);  // real events never collide with each other
      out.forwarded.push_back(ev);
    }
    for (auto& fz : fuzzers)
      for (const auto& ev : batch)
        if (ev.user == fz.user()) fz.observe(ev);
  };

  std::vector<Event> pseudo;
  auto add_pseudo = [&](Timestamp ts) {
    for (auto& fz : fuzzers) {
      if (real_users.count(fz.user())) continue;  // a real event goes out this tick
      pseudo.clear();
      fz.tick(ts, fuzz_rng, pseudo);
      for (auto& p : pseudo) {
        if (ledger.record(p))
          batch.push_back(std::move(p));
        else
          ++out.collisions_skipped;
      }
    }
  };

  if (!fuzz) {
    std::size_t i = 0;
    while (i < trace.size()) {
      std::size_t j = i;
      while (j < trace.size() && trace[j].ts == trace[i].ts) ++j;
      take_tick(trace.subspan(i, j - i));
      run_batch();
      i = j;
    }
  } else {
    std::int64_t last_day = cfg.first_day;
    if (!trace.empty()) last_day = std::max(last_day, day_of(trace.back().ts));
    const std::int64_t end_day = cfg.end_day.value_or(last_day + 1);
    std::size_t i = 0;
    while (i < trace.size() && trace[i].ts < cfg.first_day * kSecondsPerDay) {
      std::size_t j = i;
      while (j < trace.size() && trace[j].ts == trace[i].ts) ++j;
      take_tick(trace.subspan(i, j - i));
      run_batch();
      i = j;
    }
    for (std::int64_t day = cfg.first_day; day < end_day; ++day) {
      for (auto& fz : fuzzers) fz.refresh(day);
      const Timestamp day_end = (day + 1) * kSecondsPerDay;
      for (Timestamp ts = day * kSecondsPerDay; ts < day_end; ++ts) {
        real_users.clear();
        if (i < trace.size() && trace[i].ts == ts) {
          std::size_t j = i;
          while (j < trace.size() && trace[j].ts == ts) ++j;
          take_tick(trace.subspan(i, j - i));
          i = j;
        }
        add_pseudo(ts);
        run_batch();
      }
    }
    while (i < trace.size()) {
      std::size_t j = i;
      while (j < trace.size() && trace[j].ts == trace[i].ts) ++j;
      take_tick(trace.subspan(i, j - i));
      run_batch();
      i = j;
    }
    for (const auto& fz : fuzzers) out.leak_budget[fz.user()] = fz.mean_leak_budget();
  }
  return out;
}

}  // namespace fnf
