#pragma once

// Four-step filter applied to every real event before upload:
//   1. drop events of devices outside the trigger set,
//   2. drop values that map to no action,
//   3. drop triggers whose actuators already sit at the consequential state,
//   4. replace surviving numeric values by a uniform draw from their sub-range.

#include <concepts>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "fnf/applet_catalog.hpp"
#include "fnf/core_model.hpp"

namespace fnf {

enum class DropReason { UntriggerDevice, UntriggerState, ActuatorAlreadyInCsv };

inline const char* to_string(DropReason r) {
  switch (r) {
    case DropReason::UntriggerDevice: return "untrigger_device";
    case DropReason::UntriggerState: return "untrigger_state";
    case DropReason::ActuatorAlreadyInCsv: return "actuator_csv";
  }
  return "?";
}

struct Drop {
  DropReason reason;
};

struct Forward {
  Event event;
};

using FilterDecision = std::variant<Drop, Forward>;

struct FilterOptions {
  // Redraw step-4 values until they differ from the true reading (only when
  // the sub-range has more than one value). Off by default.
  bool resample_until_different = false;
};

// Anything that answers "what state is this actuator in right now".
template <class T>
concept StateView = requires(const T& v, const UserId& u, const DeviceId& d) {
  { v.get(u, d) } -> std::convertible_to<std::optional<Value>>;
};

// A registry plus the consequences of triggers forwarded earlier in the same
// tick whose commands have not come back yet. The TA platform is honest, so
// those commands will land exactly as projected.
class ProjectedState {
 public:
  explicit ProjectedState(const StateRegistry& base) : base_(&base) {}

  std::optional<Value> get(const UserId& u, const DeviceId& d) const {
    if (auto it = pending_.find({u, d}); it != pending_.end()) return it->second;
    return base_->get(u, d);
  }

  void expect(const UserId& u, const ActionSet& actions) {
    for (const auto& a : actions.device_actions) pending_[{u, a.actuator}] = Value::label(a.csv);
  }

  void clear() { pending_.clear(); }

 private:
  const StateRegistry* base_;
  std::map<std::pair<UserId, DeviceId>, Value> pending_;
};

// True when at least one mapped actuator would change state, or the value
// also drives an external action (which has no state to compare against).
// Unknown actuator state counts as "would change".
template <StateView View>
bool would_change_something(const Event& ev, const ActionSet& actions, const View& state) {
  if (!actions.external_actions.empty()) return true;
  for (const auto& a : actions.device_actions) {
    const auto current = state.get(ev.user, a.actuator);
    if (!current || current->is_numeric() || current->as_label() != a.csv) return true;
  }
  return false;
}

template <StateView View, class Rng>
FilterDecision filter_event(const Event& ev, const TriggerTables& tables, const View& state, Rng& rng,
                            const FilterOptions& opts = {}) {
  const ActionSet* actions = tables.lookup(ev.device, ev.value);
  if (actions == nullptr) return Drop{DropReason::UntriggerDevice};
  if (actions->empty()) return Drop{DropReason::UntriggerState};
  if (!would_change_something(ev, *actions, state)) return Drop{DropReason::ActuatorAlreadyInCsv};

  Event out = ev;
  if (ev.value.is_numeric()) {
    const auto& range = tables.numeric.at(ev.device).locate(ev.value.as_number());
    std::uniform_int_distribution<std::int64_t> draw(range.lo, range.hi);
    std::int64_t v = draw(rng);
    if (opts.resample_until_different && range.hi > range.lo)
      while (v == ev.value.as_number()) v = draw(rng);
    out.value = Value::number(v);
  }
  return Forward{std::move(out)};
}

struct FilterStats {
  std::uint64_t input_count = 0;
  std::uint64_t forwarded_count = 0;
  std::uint64_t untrigger_device = 0;
  std::uint64_t untrigger_state = 0;
  std::uint64_t actuator_csv = 0;

  void record(const FilterDecision& d) {
    ++input_count;
    if (const auto* drop = std::get_if<Drop>(&d)) {
      switch (drop->reason) {
        case DropReason::UntriggerDevice: ++untrigger_device; break;
        case DropReason::UntriggerState: ++untrigger_state; break;
        case DropReason::ActuatorAlreadyInCsv: ++actuator_csv; break;
      }
    } else {
      ++forwarded_count;
    }
  }

  double forward_ratio() const {
    return input_count == 0 ? 0.0 : static_cast<double>(forwarded_count) / static_cast<double>(input_count);
  }

  nlohmann::json to_json() const {
    return {{"input_count", input_count},
            {"forwarded_count", forwarded_count},
            {"drops",
             {{"untrigger_device", untrigger_device},
              {"untrigger_state", untrigger_state},
              {"actuator_csv", actuator_csv}}}};
  }

  friend bool operator==(const FilterStats&, const FilterStats&) = default;
};

struct FilterResult {
  std::vector<Event> forwarded;
  FilterStats stats;
};

inline void require_sorted(std::span<const Event> events) {
  for (std::size_t i = 1; i < events.size(); ++i)
    if (events[i].ts < events[i - 1].ts)
      throw OrderingError("event " + std::to_string(i) + " at t=" + std::to_string(events[i].ts) +
                          " precedes t=" + std::to_string(events[i - 1].ts));
}

// Filters one tick (events sharing a timestamp). Real reports are applied to
// the registry first, since the gateway packs at the end of the second; each
// event is then judged against the registry plus the projected effect of the
// triggers already forwarded this tick.
template <class Rng>
void filter_tick(std::span<const Event> tick, const TriggerTables& tables, StateRegistry& registry, Rng& rng,
                 FilterResult& out, const FilterOptions& opts = {}) {
  for (const auto& ev : tick) registry.apply(ev);
  ProjectedState view(registry);
  for (const auto& ev : tick) {
    auto decision = filter_event(ev, tables, view, rng, opts);
    out.stats.record(decision);
    if (auto* fwd = std::get_if<Forward>(&decision)) {
      view.expect(ev.user, *tables.lookup(ev.device, fwd->event.value));
      out.forwarded.push_back(std::move(fwd->event));
    }
  }
}

// Replays a time-sorted trace. Commands are assumed delivered as the honest
// TA platform would issue them, so `registry` ends in the same state as a
// full gateway replay.
template <class Rng>
FilterResult filter_trace(std::span<const Event> events, const TriggerTables& tables, StateRegistry& registry, Rng& rng,
                          const FilterOptions& opts = {}) {
  require_sorted(events);
  FilterResult out;
  std::size_t i = 0;
  while (i < events.size()) {
    std::size_t j = i;
    while (j < events.size() && events[j].ts == events[i].ts) ++j;
    const auto forwarded_before = out.forwarded.size();
    filter_tick(events.subspan(i, j - i), tables, registry, rng, out, opts);
    for (std::size_t k = forwarded_before; k < out.forwarded.size(); ++k) {
      const auto& fwd = out.forwarded[k];
      for (const auto& a : tables.lookup(fwd.device, fwd.value)->device_actions)
        registry.apply(Command{fwd.ts, fwd.user, a.actuator, a.command});
    }
    i = j;
  }
  return out;
}

}  // namespace fnf
