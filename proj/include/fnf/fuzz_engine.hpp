#pragma once

// Pseudo-event injection. The gateway estimates the filtered pattern F over a
// trailing window, picks a target D whose peak equals max(F), and in every
// tick without a real event emits a pseudo-event with probability y_i / m,
// where y_i = max(d_i - f_i, 0) and m is the number of ticks per bucket.
// Replies to pseudo-events are matched through the ledger and discarded.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <variant>
#include <vector>

#include "fnf/applet_catalog.hpp"
#include "fnf/pattern.hpp"
#include "fnf/wire.hpp"

namespace fnf {

struct Uniform {};
struct Gaussian {
  double sigma = 4.0;
};
using TargetDistribution = std::variant<Uniform, Gaussian>;

struct Target {
  PatternVector f;
  std::vector<double> d;
  std::vector<double> y;
  bool degenerate = false;  // F was all zero

  // Unmaskable excess per day: sum of max(f_i - d_i, 0).
  double leak_budget() const {
    double s = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) s += std::max(f[i] - d[i], 0.0);
    return s;
  }
  double pseudo_per_day() const {
    double s = 0.0;
    for (double v : y) s += v;
    return s;
  }
};

// Circular distance between buckets; the day wraps around.
inline double bucket_distance(std::size_t a, std::size_t b, std::size_t n) {
  const auto d = a > b ? a - b : b - a;
  return static_cast<double>(std::min(d, n - d));
}

inline std::vector<double> materialize(const TargetDistribution& dist, const PatternVector& f) {
  const std::size_t n = f.size();
  const double peak = f.max();
  std::vector<double> d(n, 0.0);
  if (peak <= 0.0) return d;
  if (std::holds_alternative<Uniform>(dist)) {
    std::fill(d.begin(), d.end(), peak);
    return d;
  }
  const double sigma = std::get<Gaussian>(dist).sigma;
  if (!(sigma >= static_cast<double>(n) / 6.0))
    throw ConfigError("gaussian sigma " + std::to_string(sigma) + " below n/6 = " + std::to_string(n / 6.0));
  const auto mu = f.argmax();
  for (std::size_t i = 0; i < n; ++i) {
    const double x = bucket_distance(i, mu, n);
    d[i] = peak * std::exp(-(x * x) / (2.0 * sigma * sigma));
  }
  return d;
}

inline Target build_target(const PatternVector& f, const TargetDistribution& dist) {
  Target t;
  t.f = f;
  t.d = materialize(dist, f);
  t.y.resize(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) t.y[i] = std::max(t.d[i] - f[i], 0.0);
  t.degenerate = f.max() <= 0.0;
  return t;
}

// F re-estimated on the trailing `p_days` before `day`; short histories use
// what is available.
inline Target refresh_cycle(const DailyCounts& history, std::int64_t day, std::optional<std::int64_t> p_days,
                            const TargetDistribution& dist) {
  return build_target(history.mean(day, p_days), dist);
}

// ---------------------------------------------------------------------------
// Pseudo-event generation

struct TriggerChoice {
  std::optional<std::string> label;  // discrete trigger value
  std::int64_t lo = 0;               // numeric trigger sub-range
  std::int64_t hi = 0;
};

struct PoolDevice {
  DeviceId device;
  std::string attribute;
  std::vector<TriggerChoice> choices;
};

using DevicePool = std::vector<PoolDevice>;

// Trigger devices with the values / sub-ranges that fire at least one applet.
inline DevicePool trigger_pool(const TriggerTables& tables, const DeviceRegistry& devices) {
  DevicePool pool;
  for (const auto& [id, table] : tables.discrete) {
    PoolDevice p{id, devices.at(id).attribute, {}};
    for (const auto& s : table.trigger_states()) p.choices.push_back(TriggerChoice{s, 0, 0});
    if (!p.choices.empty()) pool.push_back(std::move(p));
  }
  for (const auto& [id, table] : tables.numeric) {
    PoolDevice p{id, devices.at(id).attribute, {}};
    for (const auto& r : table.ranges)
      if (!r.actions.empty()) p.choices.push_back(TriggerChoice{std::nullopt, r.lo, r.hi});
    if (!p.choices.empty()) pool.push_back(std::move(p));
  }
  return pool;
}

template <class Rng>
Event draw_pseudo(const DevicePool& pool, Timestamp ts, const UserId& user, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick_dev(0, pool.size() - 1);
  const auto& dev = pool[pick_dev(rng)];
  std::uniform_int_distribution<std::size_t> pick_choice(0, dev.choices.size() - 1);
  const auto& c = dev.choices[pick_choice(rng)];
  Event e;
  e.ts = ts;
  e.user = user;
  e.device = dev.device;
  e.attribute = dev.attribute;
  if (c.label) {
    e.value = Value::label(*c.label);
  } else {
    std::uniform_int_distribution<std::int64_t> v(c.lo, c.hi);
    e.value = Value::number(v(rng));
  }
  e.pseudo = true;
  return e;
}

// With probability min(y_bucket / m, 1) returns a pseudo-event for `user`.
template <class Rng>
std::optional<Event> maybe_pseudo(std::size_t bucket, double m, std::span<const double> y, Rng& rng,
                                  const DevicePool& pool, Timestamp ts, const UserId& user) {
  if (m < 1.0) throw ConfigError("sends per bucket must be >= 1");
  const double prob = std::min(y[bucket] / m, 1.0);
  if (prob <= 0.0) return std::nullopt;
  if (pool.empty()) throw ConfigError("pseudo-event requested but the trigger-device pool is empty");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (!(u(rng) < prob)) return std::nullopt;
  return draw_pseudo(pool, ts, user, rng);
}

struct FuzzConfig {
  std::size_t n = 24;
  std::optional<std::int64_t> p_days = 7;
  double ticks_per_bucket = 3600.0;  // m
  TargetDistribution distribution = Uniform{};
  bool per_device = false;            // one F per (user, trigger device)
  std::optional<double> naive_rate;   // constant pseudo-events per bucket per day, ignores F
};

// Per-user fuzzing state: history of forwarded real events, current target,
// and the bucket clock.
class Fuzzer {
 public:
  Fuzzer(UserId user, const DevicePool& pool, FuzzConfig cfg, std::int64_t first_day = 0)
      : user_(std::move(user)), cfg_(std::move(cfg)) {
    if (cfg_.ticks_per_bucket < 1.0) throw ConfigError("ticks per bucket must be >= 1");
    if (cfg_.per_device) {
      for (const auto& dev : pool) channels_.push_back(Channel{DevicePool{dev}, DailyCounts(cfg_.n, first_day), {}});
    } else {
      channels_.push_back(Channel{pool, DailyCounts(cfg_.n, first_day), {}});
    }
    for (auto& c : channels_) c.target = build_target(PatternVector(cfg_.n), cfg_.distribution);
    if (cfg_.naive_rate)
      for (auto& c : channels_) c.target.y.assign(cfg_.n, *cfg_.naive_rate / static_cast<double>(channels_.size()));
  }

  // Record a real event that was uploaded.
  void observe(const Event& forwarded) {
    for (auto& c : channels_) {
      if (!cfg_.per_device || c.pool.front().device == forwarded.device) c.history.add(forwarded.ts);
    }
  }

  // Start of `day`: rebuild F, D and Y from the trailing window.
  void refresh(std::int64_t day) {
    for (auto& c : channels_) {
      c.history.extend_to(day);
      if (cfg_.naive_rate) continue;
      c.target = refresh_cycle(c.history, day, cfg_.p_days, cfg_.distribution);
      leak_sum_ += c.target.leak_budget();
    }
    ++refreshes_;
  }

  // One protocol tick without a real event for this user.
  template <class Rng>
  void tick(Timestamp ts, Rng& rng, std::vector<Event>& out) {
    const auto bucket = bucket_of(ts, cfg_.n);
    for (const auto& c : channels_) {
      if (c.pool.empty()) continue;
      if (auto e = maybe_pseudo(bucket, cfg_.ticks_per_bucket, c.target.y, rng, c.pool, ts, user_))
        out.push_back(std::move(*e));
    }
  }

  // Sum of every channel's current target.
  Target combined_target() const {
    Target t;
    t.f = PatternVector(cfg_.n);
    t.d.assign(cfg_.n, 0.0);
    t.y.assign(cfg_.n, 0.0);
    for (const auto& c : channels_) {
      for (std::size_t i = 0; i < cfg_.n; ++i) {
        t.f[i] += c.target.f[i];
        t.d[i] += c.target.d[i];
        t.y[i] += c.target.y[i];
      }
    }
    t.degenerate = t.f.max() <= 0.0;
    return t;
  }

  // Mean leak budget per refresh.
  double mean_leak_budget() const { return refreshes_ == 0 ? 0.0 : leak_sum_ / static_cast<double>(refreshes_); }
  const UserId& user() const noexcept { return user_; }
  const FuzzConfig& config() const noexcept { return cfg_; }

 private:
  struct Channel {
    DevicePool pool;
    DailyCounts history;
    Target target;
  };

  UserId user_;
  FuzzConfig cfg_;
  std::vector<Channel> channels_;
  double leak_sum_ = 0.0;
  std::size_t refreshes_ = 0;
};

// ---------------------------------------------------------------------------
// Exchange with the TA platform

template <class T>
concept TaEndpoint = requires(T& ta, std::string_view batch) {
  { ta.exchange(batch) } -> std::convertible_to<std::string>;
};

// The gateway-private record of one batch: every event with its pseudo label
// and the actuators its value can command. Commands name actuators, so they
// match an entry by (timestamp, user) plus actuator.
class PseudoLedger {
 public:
  explicit PseudoLedger(const TriggerTables& tables) : tables_(&tables) {}

  // False (and nothing recorded) when a real and a pseudo event would share
  // (timestamp, user) and either the device or a commandable actuator.
  bool record(const Event& e) {
    Entry entry{e.device, e.value, e.pseudo, targets_of(e)};
    auto& slot = entries_[{e.ts, e.user}];
    for (const auto& other : slot) {
      if (other.pseudo == e.pseudo) continue;
      if (other.device == e.device || overlaps(other.targets, entry.targets)) return false;
    }
    slot.push_back(std::move(entry));
    return true;
  }

  enum class Match { Real, Pseudo, None };

  Match match(const Command& c) const {
    auto it = entries_.find({c.ts, c.user});
    if (it == entries_.end()) return Match::None;
    for (const auto& e : it->second)
      if (std::find(e.targets.begin(), e.targets.end(), c.device) != e.targets.end())
        return e.pseudo ? Match::Pseudo : Match::Real;
    return Match::None;
  }

  void purge() { entries_.clear(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t size() const noexcept {
    std::size_t s = 0;
    for (const auto& [k, v] : entries_) s += v.size();
    return s;
  }

 private:
  struct Entry {
    DeviceId device;
    Value value;
    bool pseudo;
    std::vector<DeviceId> targets;
  };

  std::vector<DeviceId> targets_of(const Event& e) const {
    std::vector<DeviceId> out;
    const ActionSet* a = nullptr;
    try {
      a = tables_->lookup(e.device, e.value);
    } catch (const DomainError&) {
      a = nullptr;
    }
    if (a != nullptr)
      for (const auto& act : a->device_actions) out.push_back(act.actuator);
    return out;
  }

  static bool overlaps(const std::vector<DeviceId>& a, const std::vector<DeviceId>& b) {
    for (const auto& x : a)
      if (std::find(b.begin(), b.end(), x) != b.end()) return true;
    return false;
  }

  const TriggerTables* tables_;
  std::map<std::pair<Timestamp, UserId>, std::vector<Entry>> entries_;
};

struct ExchangeResult {
  std::vector<Command> delivered;
  std::vector<Command> discarded;
  std::vector<Command> unmatched;  // protocol errors
  std::size_t real_sent = 0;
  std::size_t pseudo_sent = 0;
};

// Sends a batch whose events are already in `ledger` and sorts the reply.
template <TaEndpoint Ta>
ExchangeResult exchange_recorded(std::span<const Event> batch, PseudoLedger& ledger, Ta& ta) {
  ExchangeResult out;
  if (batch.empty()) return out;
  for (const auto& e : batch) (e.pseudo ? out.pseudo_sent : out.real_sent) += 1;
  const std::string reply = ta.exchange(wire::encode_batch(batch));
  for (auto& c : wire::decode_commands(reply)) {
    switch (ledger.match(c)) {
      case PseudoLedger::Match::Real: out.delivered.push_back(std::move(c)); break;
      case PseudoLedger::Match::Pseudo: out.discarded.push_back(std::move(c)); break;
      case PseudoLedger::Match::None: out.unmatched.push_back(std::move(c)); break;
    }
  }
  ledger.purge();
  return out;
}

// One S <-> T round. `batch` carries the pseudo flags; they are stripped on
// the wire. Throws ProtocolError on a real/pseudo key collision in the batch.
template <TaEndpoint Ta>
ExchangeResult exchange_round(std::span<const Event> batch, PseudoLedger& ledger, Ta& ta) {
  for (const auto& e : batch) {
    if (!ledger.record(e)) {
      ledger.purge();
      throw ProtocolError("ledger key collision for " + e.user.str() + "/" + e.device.str() + " at t=" +
                          std::to_string(e.ts));
    }
  }
  return exchange_recorded(batch, ledger, ta);
}

}  // namespace fnf
