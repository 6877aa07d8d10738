#pragma once

// Domain types shared across the gateway: identifiers, device kinds, values,
// events, commands, and the live state registry consulted by the filter.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fnf/error.hpp"

namespace fnf {

// Seconds since the trace epoch.
using Timestamp = std::int64_t;

constexpr Timestamp kSecondsPerDay = 86400;

// Opaque, non-empty, case-sensitive identifier. The tag keeps device and
// user ids from being mixed up.
template <class Tag>
class Id {
 public:
  Id() = default;
  explicit Id(std::string value) : value_(std::move(value)) {
    if (value_.empty()) throw DomainError("identifier must be non-empty");
  }

  const std::string& str() const noexcept { return value_; }
  bool empty() const noexcept { return value_.empty(); }

  friend auto operator<=>(const Id&, const Id&) = default;
  friend bool operator==(const Id&, const Id&) = default;

 private:
  std::string value_;
};

using DeviceId = Id<struct DeviceIdTag>;
using UserId = Id<struct UserIdTag>;

struct DiscreteKind {
  std::vector<std::string> states;
};

struct NumericKind {
  std::int64_t min = 0;
  std::int64_t max = 0;
  std::string unit;
};

// Either a Discrete{states} or Numeric{min, max, unit} device. Construct via
// the factories, which enforce the invariants.
class DeviceKind {
 public:
  static DeviceKind discrete(std::vector<std::string> states) {
    if (states.size() < 2) throw DomainError("discrete device needs at least two states");
    auto sorted = states;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw DomainError("discrete device states must be distinct");
    for (const auto& s : states)
      if (s.empty()) throw DomainError("discrete state label must be non-empty");
    return DeviceKind(DiscreteKind{std::move(states)});
  }

  static DeviceKind numeric(std::int64_t min, std::int64_t max, std::string unit = {}) {
    if (!(min < max)) throw DomainError("numeric device requires min < max");
    return DeviceKind(NumericKind{min, max, std::move(unit)});
  }

  bool is_numeric() const noexcept { return std::holds_alternative<NumericKind>(kind_); }
  bool is_discrete() const noexcept { return !is_numeric(); }

  const DiscreteKind& as_discrete() const { return std::get<DiscreteKind>(kind_); }
  const NumericKind& as_numeric() const { return std::get<NumericKind>(kind_); }

  bool has_state(const std::string& label) const {
    if (!is_discrete()) return false;
    const auto& s = as_discrete().states;
    return std::find(s.begin(), s.end(), label) != s.end();
  }

  bool in_range(std::int64_t v) const {
    if (!is_numeric()) return false;
    const auto& n = as_numeric();
    return v >= n.min && v <= n.max;
  }

 private:
  explicit DeviceKind(std::variant<DiscreteKind, NumericKind> k) : kind_(std::move(k)) {}
  std::variant<DiscreteKind, NumericKind> kind_;
};

enum class DeviceRole { TriggerDevice, Actuator, IdleDevice };

inline const char* to_string(DeviceRole r) {
  switch (r) {
    case DeviceRole::TriggerDevice: return "trigger";
    case DeviceRole::Actuator: return "actuator";
    case DeviceRole::IdleDevice: return "idle";
  }
  return "?";
}

// DiscreteLabel or NumericValue.
class Value {
 public:
  Value() = default;
  static Value label(std::string s) { return Value(std::move(s)); }
  static Value number(std::int64_t v) { return Value(v); }

  bool is_numeric() const noexcept { return std::holds_alternative<std::int64_t>(v_); }
  const std::string& as_label() const { return std::get<std::string>(v_); }
  std::int64_t as_number() const { return std::get<std::int64_t>(v_); }

  std::string to_string() const { return is_numeric() ? std::to_string(as_number()) : as_label(); }

  friend bool operator==(const Value&, const Value&) = default;
  friend auto operator<=>(const Value&, const Value&) = default;

 private:
  explicit Value(std::string s) : v_(std::move(s)) {}
  explicit Value(std::int64_t v) : v_(v) {}
  std::variant<std::string, std::int64_t> v_;
};

struct Event {
  Timestamp ts = 0;
  UserId user;
  DeviceId device;
  std::string attribute;
  Value value;
  bool pseudo = false;

  friend bool operator==(const Event&, const Event&) = default;
};

struct Command {
  Timestamp ts = 0;
  UserId user;
  DeviceId device;
  std::string command;

  friend bool operator==(const Command&, const Command&) = default;
  friend auto operator<=>(const Command&, const Command&) = default;
};

// Command verbs understood by actuators, and the state each one leaves the
// actuator in (its consequential state value).
inline std::optional<std::string> consequential_state(const std::string& command) {
  if (command == "on") return "on";
  if (command == "off") return "off";
  if (command == "lock") return "locked";
  if (command == "unlock") return "unlocked";
  return std::nullopt;
}

struct DeviceInfo {
  DeviceId id;
  DeviceKind kind;
  std::string attribute;
};

// Device id -> kind. One registry describes the device layout; in a
// multi-user run every user shares it.
class DeviceRegistry {
 public:
  void add(DeviceId id, DeviceKind kind, std::string attribute = {}) {
    if (devices_.contains(id)) throw DomainError("duplicate device '" + id.str() + "'");
    if (attribute.empty()) attribute = default_attribute(kind);
    devices_.emplace(id, DeviceInfo{id, std::move(kind), std::move(attribute)});
  }

  bool contains(const DeviceId& id) const { return devices_.contains(id); }

  const DeviceInfo& at(const DeviceId& id) const {
    auto it = devices_.find(id);
    if (it == devices_.end()) throw UnknownDeviceError(id.str());
    return it->second;
  }

  const DeviceInfo* find(const DeviceId& id) const {
    auto it = devices_.find(id);
    return it == devices_.end() ? nullptr : &it->second;
  }

  bool accepts(const DeviceId& id, const Value& v) const {
    const auto* info = find(id);
    if (info == nullptr) return false;
    return v.is_numeric() ? info->kind.in_range(v.as_number()) : info->kind.has_state(v.as_label());
  }

  // Throws DomainError / UnknownDeviceError when `v` is not a valid state.
  void validate(const DeviceId& id, const Value& v) const {
    const auto& info = at(id);
    const bool ok = v.is_numeric() ? info.kind.in_range(v.as_number()) : info.kind.has_state(v.as_label());
    if (!ok) throw DomainError("value '" + v.to_string() + "' outside the domain of '" + id.str() + "'");
  }

  std::size_t size() const noexcept { return devices_.size(); }
  auto begin() const { return devices_.begin(); }
  auto end() const { return devices_.end(); }

 private:
  static std::string default_attribute(const DeviceKind& k) { return k.is_numeric() ? "value" : "state"; }
  std::map<DeviceId, DeviceInfo> devices_;
};

// (user, device) -> current value. Unknown entries read as std::nullopt.
class StateRegistry {
 public:
  using Key = std::pair<UserId, DeviceId>;

  explicit StateRegistry(const DeviceRegistry& devices) : devices_(&devices) {}

  std::optional<Value> get(const UserId& user, const DeviceId& device) const {
    auto it = state_.find(Key{user, device});
    if (it == state_.end()) return std::nullopt;
    return it->second;
  }

  // Real device report. Returns true when the stored state changed.
  bool apply(const Event& ev) {
    devices_->validate(ev.device, ev.value);
    return store(Key{ev.user, ev.device}, ev.value);
  }

  // Delivered command. Returns true when the command changed the actuator.
  bool apply(const Command& cmd) {
    const auto& info = devices_->at(cmd.device);
    if (!info.kind.is_discrete()) throw DomainError("command sent to numeric device '" + cmd.device.str() + "'");
    auto target = consequential_state(cmd.command);
    if (!target || !info.kind.has_state(*target))
      throw DomainError("command '" + cmd.command + "' has no state on '" + cmd.device.str() + "'");
    return store(Key{cmd.user, cmd.device}, Value::label(*target));
  }

  const DeviceRegistry& devices() const noexcept { return *devices_; }
  std::size_t size() const noexcept { return state_.size(); }
  auto begin() const { return state_.begin(); }
  auto end() const { return state_.end(); }

 private:
  bool store(Key key, Value v) {
    auto [it, inserted] = state_.try_emplace(std::move(key), v);
    if (inserted) return true;
    if (it->second == v) return false;
    it->second = std::move(v);
    return true;
  }

  const DeviceRegistry* devices_;
  std::map<Key, Value> state_;
};

// Value-returning form: registry_apply(reg, x) leaves `reg` untouched.
template <class EventOrCommand>
StateRegistry registry_apply(StateRegistry reg, const EventOrCommand& x) {
  reg.apply(x);
  return reg;
}

}  // namespace fnf

template <class Tag>
struct std::hash<fnf::Id<Tag>> {
  std::size_t operator()(const fnf::Id<Tag>& id) const noexcept { return std::hash<std::string>{}(id.str()); }
};
