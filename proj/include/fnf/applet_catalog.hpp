#pragma once

// Applet descriptions -> key-information records -> per-device trigger tables.
//
// Sentence grammar (one applet per line):
//
//   If <trigger> by <DeviceId>, then <action>
//
//   <trigger> := "Any new motion detected"
//              | <attribute> "is" <label>
//              | <attribute> ["is"] ("above" | "below") <integer>
//   <action>  := ("Switch on" | "Switch off" | "Lock" | "Unlock") <DeviceId>
//              | "log" <text>
//
// "above X" fires for integer values >= X+1 and "below X" for values <= X-1,
// so a numeric device splits at X (above) or X-1 (below).

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "fnf/core_model.hpp"
#include "fnf/error.hpp"

namespace fnf {

enum class Comparator { Above, Below };

struct DiscreteTrigger {
  std::string value;
  friend bool operator==(const DiscreteTrigger&, const DiscreteTrigger&) = default;
};

struct NumericTrigger {
  Comparator comparator = Comparator::Above;
  std::int64_t threshold = 0;
  friend bool operator==(const NumericTrigger&, const NumericTrigger&) = default;
};

using TriggerSpec = std::variant<DiscreteTrigger, NumericTrigger>;

struct Applet {
  std::string id;
  DeviceId trigger_device;
  std::string attribute;
  TriggerSpec trigger;
  std::optional<DeviceId> actuator;
  std::optional<std::string> command;  // verb sent to the actuator ("on", "lock", ...)
  std::optional<std::string> csv;      // state the actuator ends up in
  std::optional<std::string> external_action;

  bool is_numeric() const noexcept { return std::holds_alternative<NumericTrigger>(trigger); }

  // Does a value reported by the trigger device fire this applet?
  bool fires_on(const Value& v) const {
    if (const auto* d = std::get_if<DiscreteTrigger>(&trigger)) return !v.is_numeric() && v.as_label() == d->value;
    const auto& n = std::get<NumericTrigger>(trigger);
    if (!v.is_numeric()) return false;
    return n.comparator == Comparator::Above ? v.as_number() >= n.threshold + 1 : v.as_number() <= n.threshold - 1;
  }

  friend bool operator==(const Applet&, const Applet&) = default;
};

namespace detail {

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

}  // namespace detail

// Parses one sentence. Offsets in ParseError are positions within `sentence`.
inline Applet parse_description(const std::string& sentence, const DeviceRegistry& devices, std::string id = {}) {
  static const std::regex kSentence(R"(^(\s*)If (.+) by ([^\s,]+), then (.+?)\s*$)");
  static const std::regex kNumeric(R"(^([A-Za-z_][\w ]*?) (?:is )?(above|below) (-?\d+)$)");
  static const std::regex kDiscrete(R"(^([A-Za-z_]\w*) is ([^\s]+)$)");
  static const std::regex kDeviceAction(R"(^(Switch on|Switch off|Lock|Unlock) ([^\s]+)$)");
  static const std::regex kLogAction(R"(^log (.+)$)");

  std::smatch m;
  if (!std::regex_match(sentence, m, kSentence)) {
    std::size_t offset = 0;
    while (offset < sentence.size() && std::isspace(static_cast<unsigned char>(sentence[offset]))) ++offset;
    if (sentence.compare(offset, 3, "If ") != 0) throw ParseError("expected 'If '", offset);
    auto then = sentence.find(", then ");
    if (then == std::string::npos) throw ParseError("expected ', then <action>'", sentence.size());
    auto by = sentence.rfind(" by ", then);
    throw ParseError("expected 'by <device>' before ', then'", by == std::string::npos ? then : by);
  }

  const std::string trigger_text = m[2].str();
  const std::size_t trigger_pos = static_cast<std::size_t>(m.position(2));
  const std::string device_text = m[3].str();
  const std::string action_text = m[4].str();
  const std::size_t action_pos = static_cast<std::size_t>(m.position(4));

  Applet a;
  a.id = std::move(id);
  a.trigger_device = DeviceId(device_text);
  const auto& info = devices.at(a.trigger_device);

  std::smatch t;
  if (detail::iequals(trigger_text, "Any new motion detected")) {
    a.attribute = "motion";
    a.trigger = DiscreteTrigger{"active"};
  } else if (std::regex_match(trigger_text, t, kNumeric)) {
    a.attribute = t[1].str();
    std::int64_t threshold = 0;
    try {
      threshold = std::stoll(t[3].str());
    } catch (const std::exception&) {
      throw ParseError("threshold is not a representable integer", trigger_pos + static_cast<std::size_t>(t.position(3)));
    }
    a.trigger = NumericTrigger{t[2].str() == "above" ? Comparator::Above : Comparator::Below, threshold};
  } else if (std::regex_match(trigger_text, t, kDiscrete)) {
    a.attribute = t[1].str();
    a.trigger = DiscreteTrigger{t[2].str()};
  } else {
    throw ParseError("unrecognised trigger clause '" + trigger_text + "'", trigger_pos);
  }

  if (a.attribute != info.attribute)
    throw DomainError("attribute '" + a.attribute + "' does not belong to device '" + device_text + "' (" + info.attribute + ")");

  if (const auto* n = std::get_if<NumericTrigger>(&a.trigger)) {
    if (!info.kind.is_numeric()) throw DomainError("numeric trigger on discrete device '" + device_text + "'");
    const auto& range = info.kind.as_numeric();
    if (!(n->threshold > range.min && n->threshold < range.max))
      throw DomainError("threshold " + std::to_string(n->threshold) + " outside (" + std::to_string(range.min) + ", " +
                        std::to_string(range.max) + ") of '" + device_text + "'");
  } else {
    const auto& d = std::get<DiscreteTrigger>(a.trigger);
    if (!info.kind.has_state(d.value))
      throw DomainError("'" + d.value + "' is not a state of '" + device_text + "'");
  }

  std::smatch act;
  if (std::regex_match(action_text, act, kDeviceAction)) {
    static const std::map<std::string, std::string> kVerb{
        {"Switch on", "on"}, {"Switch off", "off"}, {"Lock", "lock"}, {"Unlock", "unlock"}};
    a.command = kVerb.at(act[1].str());
    a.csv = *consequential_state(*a.command);
    a.actuator = DeviceId(act[2].str());
    const auto* target = devices.find(*a.actuator);
    if (target == nullptr) throw UnknownDeviceError(act[2].str());
    if (!target->kind.is_discrete() || !target->kind.has_state(*a.csv))
      throw DomainError("actuator '" + act[2].str() + "' has no state '" + *a.csv + "'");
  } else if (std::regex_match(action_text, act, kLogAction)) {
    a.external_action = action_text;
  } else {
    throw ParseError("unrecognised action clause '" + action_text + "'", action_pos);
  }
  return a;
}

// Canonical sentence for an applet. parse_description(render_description(a))
// reproduces every key-information item of `a`.
inline std::string render_description(const Applet& a) {
  std::string trigger;
  if (const auto* d = std::get_if<DiscreteTrigger>(&a.trigger)) {
    trigger = (a.attribute == "motion" && d->value == "active") ? "Any new motion detected"
                                                                : a.attribute + " is " + d->value;
  } else {
    const auto& n = std::get<NumericTrigger>(a.trigger);
    trigger = a.attribute + " is " + (n.comparator == Comparator::Above ? "above " : "below ") +
              std::to_string(n.threshold);
  }
  std::string action;
  if (a.actuator) {
    static const std::map<std::string, std::string> kPhrase{
        {"on", "Switch on"}, {"off", "Switch off"}, {"lock", "Lock"}, {"unlock", "Unlock"}};
    action = kPhrase.at(*a.command) + " " + a.actuator->str();
  } else {
    action = a.external_action.value_or("log");
  }
  return "If " + trigger + " by " + a.trigger_device.str() + ", then " + action;
}

// Reads one sentence per line; blank lines and '#' comments are skipped.
// Applet ids are "applet-<line>".
inline std::vector<Applet> parse_applet_file(std::istream& in, const DeviceRegistry& devices) {
  std::vector<Applet> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = detail::trim(line);
    if (body.empty() || body.front() == '#') continue;
    try {
      out.push_back(parse_description(line, devices, "applet-" + std::to_string(lineno)));
    } catch (const ParseError& e) {
      throw e.at_line(lineno);
    } catch (const DomainError& e) {
      throw DomainError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

// Registry file: `device_id attribute states=a,b,c` or
// `device_id attribute range=min..max [unit=U]`, '#' comments allowed.
inline DeviceRegistry parse_registry_file(std::istream& in) {
  DeviceRegistry reg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = detail::trim(line);
    if (body.empty() || body.front() == '#') continue;
    std::istringstream ss(body);
    std::string id, attribute, spec, extra;
    if (!(ss >> id >> attribute >> spec)) throw ParseError("expected 'device_id kind spec'", 0, lineno);
    std::string unit;
    if (ss >> extra) {
      if (extra.rfind("unit=", 0) != 0) throw ParseError("unexpected token '" + extra + "'", body.find(extra), lineno);
      unit = extra.substr(5);
    }
    try {
      if (spec.rfind("states=", 0) == 0) {
        std::vector<std::string> states;
        std::string tok;
        std::istringstream list(spec.substr(7));
        while (std::getline(list, tok, ',')) states.push_back(tok);
        reg.add(DeviceId(id), DeviceKind::discrete(std::move(states)), attribute);
      } else if (spec.rfind("range=", 0) == 0) {
        const auto r = spec.substr(6);
        const auto dots = r.find("..");
        if (dots == std::string::npos) throw ParseError("range must be min..max", body.find(spec) + 6, lineno);
        std::size_t used_lo = 0, used_hi = 0;
        const auto lo = std::stoll(r.substr(0, dots), &used_lo);
        const auto hi = std::stoll(r.substr(dots + 2), &used_hi);
        if (used_lo != dots || used_hi != r.size() - dots - 2)
          throw ParseError("range bounds must be integers", body.find(spec) + 6, lineno);
        reg.add(DeviceId(id), DeviceKind::numeric(lo, hi, unit), attribute);
      } else {
        throw ParseError("spec must be states=... or range=...", body.find(spec), lineno);
      }
    } catch (const std::invalid_argument&) {
      throw ParseError("range bounds must be integers", body.find(spec), lineno);
    } catch (const DomainError& e) {
      throw DomainError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return reg;
}

// ---------------------------------------------------------------------------
// Merged trigger tables

struct Action {
  DeviceId actuator;
  std::string command;
  std::string csv;
  friend bool operator==(const Action&, const Action&) = default;
};

// What one trigger value (or sub-range) causes. device_actions keeps applet
// order: the TA platform replies in that order and the last write wins.
struct ActionSet {
  std::vector<Action> device_actions;
  std::vector<std::string> external_actions;

  bool empty() const noexcept { return device_actions.empty() && external_actions.empty(); }
  friend bool operator==(const ActionSet&, const ActionSet&) = default;
};

struct DiscreteTriggerTable {
  DeviceId device;
  std::vector<std::string> states;
  std::map<std::string, ActionSet> rows;  // one per state; empty set = untrigger state

  bool is_untrigger(const std::string& state) const {
    auto it = rows.find(state);
    return it == rows.end() || it->second.empty();
  }
  std::vector<std::string> trigger_states() const {
    std::vector<std::string> out;
    for (const auto& s : states)
      if (!is_untrigger(s)) out.push_back(s);
    return out;
  }
};

struct SubRange {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  ActionSet actions;
  bool contains(std::int64_t v) const noexcept { return v >= lo && v <= hi; }
};

struct NumericTriggerTable {
  DeviceId device;
  std::int64_t min = 0;
  std::int64_t max = 0;
  std::vector<std::int64_t> boundaries;  // L_1 < ... < L_t; ranges split after each L_i
  std::vector<SubRange> ranges;          // t+1 sub-ranges partitioning [min, max]

  std::size_t index_of(std::int64_t v) const {
    if (v < min || v > max) throw DomainError("value " + std::to_string(v) + " outside [" + std::to_string(min) + ", " +
                                              std::to_string(max) + "] of '" + device.str() + "'");
    return static_cast<std::size_t>(std::lower_bound(boundaries.begin(), boundaries.end(), v) - boundaries.begin());
  }
  const SubRange& locate(std::int64_t v) const { return ranges[index_of(v)]; }
};

class TriggerTables {
 public:
  std::map<DeviceId, DiscreteTriggerTable> discrete;
  std::map<DeviceId, NumericTriggerTable> numeric;
  std::map<DeviceId, DeviceRole> roles;

  bool is_trigger_device(const DeviceId& d) const { return discrete.contains(d) || numeric.contains(d); }

  DeviceRole role(const DeviceId& d) const {
    auto it = roles.find(d);
    return it == roles.end() ? DeviceRole::IdleDevice : it->second;
  }

  std::size_t trigger_device_count() const noexcept { return discrete.size() + numeric.size(); }

  // Actions mapped from a value of a trigger device; nullptr for non-trigger
  // devices.
  const ActionSet* lookup(const DeviceId& device, const Value& v) const {
    if (auto it = discrete.find(device); it != discrete.end()) {
      if (v.is_numeric()) return &empty_;
      auto row = it->second.rows.find(v.as_label());
      return row == it->second.rows.end() ? &empty_ : &row->second;
    }
    if (auto it = numeric.find(device); it != numeric.end()) {
      if (!v.is_numeric()) return &empty_;
      return &it->second.locate(v.as_number()).actions;
    }
    return nullptr;
  }

 private:
  ActionSet empty_;
};

// Merges applets by trigger device into discrete/numeric tables and assigns
// every registered device a role.
inline TriggerTables merge_applets(std::span<const Applet> applets, const DeviceRegistry& devices) {
  std::map<DeviceId, std::vector<const Applet*>> by_device;
  std::set<DeviceId> actuators;
  for (const auto& a : applets) {
    const auto& info = devices.at(a.trigger_device);
    if (a.actuator) {
      devices.at(*a.actuator);
      actuators.insert(*a.actuator);
    }
    if (a.actuator.has_value() == a.external_action.has_value())
      throw ConsistencyError("applet '" + a.id + "' needs exactly one of actuator or external action");
    if (a.is_numeric() != info.kind.is_numeric())
      throw ConsistencyError("applet '" + a.id + "' trigger kind disagrees with device '" + a.trigger_device.str() + "'");
    auto& list = by_device[a.trigger_device];
    if (!list.empty() && list.front()->is_numeric() != a.is_numeric())
      throw ConsistencyError("applets on '" + a.trigger_device.str() + "' mix numeric and discrete triggers");
    list.push_back(&a);
  }

  auto add_action = [](ActionSet& set, const Applet& a) {
    if (a.actuator)
      set.device_actions.push_back(Action{*a.actuator, *a.command, *a.csv});
    else
      set.external_actions.push_back(*a.external_action);
  };

  TriggerTables out;
  for (const auto& [device, list] : by_device) {
    const auto& kind = devices.at(device).kind;
    if (kind.is_discrete()) {
      DiscreteTriggerTable table{device, kind.as_discrete().states, {}};
      for (const auto& s : table.states) {
        auto& row = table.rows[s];
        const auto v = Value::label(s);
        for (const auto* a : list)
          if (a->fires_on(v)) add_action(row, *a);
      }
      out.discrete.emplace(device, std::move(table));
    } else {
      const auto& range = kind.as_numeric();
      NumericTriggerTable table{device, range.min, range.max, {}, {}};
      for (const auto* a : list) {
        const auto& n = std::get<NumericTrigger>(a->trigger);
        table.boundaries.push_back(n.comparator == Comparator::Above ? n.threshold : n.threshold - 1);
      }
      std::sort(table.boundaries.begin(), table.boundaries.end());
      table.boundaries.erase(std::unique(table.boundaries.begin(), table.boundaries.end()), table.boundaries.end());
      std::int64_t lo = range.min;
      for (std::size_t i = 0; i <= table.boundaries.size(); ++i) {
        const std::int64_t hi = i < table.boundaries.size() ? table.boundaries[i] : range.max;
        SubRange sr{lo, hi, {}};
        // Every applet fires uniformly on a sub-range, so one probe decides it.
        const auto probe = Value::number(lo);
        for (const auto* a : list)
          if (a->fires_on(probe)) add_action(sr.actions, *a);
        table.ranges.push_back(std::move(sr));
        lo = hi + 1;
      }
      out.numeric.emplace(device, std::move(table));
    }
  }

  for (const auto& [id, info] : devices) {
    if (by_device.contains(id))
      out.roles[id] = DeviceRole::TriggerDevice;
    else if (actuators.contains(id))
      out.roles[id] = DeviceRole::Actuator;
    else
      out.roles[id] = DeviceRole::IdleDevice;
  }
  return out;
}

}  // namespace fnf
