#pragma once

// Simulated stateless trigger-action platform. It answers every batch with
// the commands its applets produce and, being honest-but-curious, keeps a
// copy of every event it was sent. Its only input is wire text.

#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fnf/applet_catalog.hpp"
#include "fnf/pattern.hpp"
#include "fnf/wire.hpp"

namespace fnf {

// Commands for a batch: one per (event, firing applet), in batch order and
// then applet order. Depends on nothing but its arguments.
inline std::vector<Command> evaluate_batch(std::span<const Event> batch, std::span<const Applet> applets) {
  std::vector<Command> out;
  for (const auto& ev : batch)
    for (const auto& a : applets)
      if (a.trigger_device == ev.device && a.actuator && a.fires_on(ev.value))
        out.push_back(Command{ev.ts, ev.user, *a.actuator, *a.command});
  return out;
}

// Everything T has received, in arrival order.
struct AdversaryLog {
  std::vector<Event> events;
  std::size_t size() const noexcept { return events.size(); }
};

class TaPlatform {
 public:
  TaPlatform() = default;
  explicit TaPlatform(std::vector<Applet> applets) : default_(std::move(applets)) {}

  // Per-user applet set; users without one use the default set.
  void install(const UserId& user, std::vector<Applet> applets) { per_user_[user] = std::move(applets); }

  void set_logging(bool on) noexcept { logging_ = on; }

  // One protocol exchange: batch JSON in, command JSON out.
  std::string exchange(std::string_view batch_json) {
    auto batch = wire::decode_batch(batch_json);
    if (batch.malformed != 0) {
      malformed_ += batch.malformed;
      if (warn_) std::clog << "ta_platform: skipped " << batch.malformed << " malformed wire event(s)\n";
    }
    std::vector<Command> reply;
    for (const auto& ev : batch.events) {
      auto cmds = evaluate_batch(std::span<const Event>(&ev, 1), applets_for(ev.user));
      reply.insert(reply.end(), cmds.begin(), cmds.end());
    }
    if (logging_) log_.events.insert(log_.events.end(), batch.events.begin(), batch.events.end());
    ++batches_;
    return wire::encode_commands(reply);
  }

  const AdversaryLog& log() const noexcept { return log_; }
  std::size_t malformed() const noexcept { return malformed_; }
  std::size_t batches() const noexcept { return batches_; }
  void quiet() noexcept { warn_ = false; }

 private:
  std::span<const Applet> applets_for(const UserId& user) const {
    auto it = per_user_.find(user);
    return it == per_user_.end() ? std::span<const Applet>(default_) : std::span<const Applet>(it->second);
  }

  std::vector<Applet> default_;
  std::map<UserId, std::vector<Applet>> per_user_;
  AdversaryLog log_;
  std::size_t malformed_ = 0;
  std::size_t batches_ = 0;
  bool logging_ = true;
  bool warn_ = true;
};

// Per-user pattern vectors from the adversary's view. Without an explicit
// window the whole log (day 0 up to the last observed day) is averaged.
inline std::map<UserId, PatternVector> adversary_snapshot(const AdversaryLog& log, std::size_t n = 24,
                                                          std::optional<std::int64_t> window_days = std::nullopt,
                                                          std::optional<std::int64_t> end_day = std::nullopt) {
  std::map<UserId, std::vector<Event>> by_user;
  std::int64_t last = 0;
  for (const auto& e : log.events) {
    by_user[e.user].push_back(e);
    last = std::max(last, day_of(e.ts));
  }
  const auto end = end_day.value_or(last + 1);
  std::map<UserId, PatternVector> out;
  for (const auto& [user, events] : by_user) out.emplace(user, estimate_pattern(events, window_days, n, end));
  return out;
}

}  // namespace fnf
