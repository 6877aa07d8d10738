#pragma once

// Fixtures and independent oracles shared by the test binaries. Nothing here
// calls into the code under test beyond plain data types.

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fnf/fnf.hpp"

namespace fnf::test {

inline Event ev(Timestamp ts, const std::string& device, const std::string& attr, Value v,
                const std::string& user = "u1") {
  return Event{ts, UserId(user), DeviceId(device), attr, std::move(v), false};
}

inline Event lbl(Timestamp ts, const std::string& device, const std::string& attr, const std::string& v,
                 const std::string& user = "u1") {
  return ev(ts, device, attr, Value::label(v), user);
}

inline Event num(Timestamp ts, const std::string& device, const std::string& attr, std::int64_t v,
                 const std::string& user = "u1") {
  return ev(ts, device, attr, Value::number(v), user);
}

// A small home used across modules.
inline DeviceRegistry home_registry() {
  DeviceRegistry r;
  r.add(DeviceId("Motion_Sensor_A"), DeviceKind::discrete({"active", "inactive"}), "motion");
  r.add(DeviceId("Presence_1"), DeviceKind::discrete({"present", "unpresent"}), "presence");
  r.add(DeviceId("Door_1"), DeviceKind::discrete({"open", "closed"}), "contact");
  r.add(DeviceId("Temp_1"), DeviceKind::numeric(-20, 80, "C"), "temperature");
  r.add(DeviceId("Lux_1"), DeviceKind::numeric(0, 100000, "lux"), "illuminance");
  r.add(DeviceId("Humidity_1"), DeviceKind::numeric(0, 100, "%"), "humidity");
  r.add(DeviceId("Switch_A"), DeviceKind::discrete({"on", "off"}), "switch");
  r.add(DeviceId("Switch_B"), DeviceKind::discrete({"on", "off"}), "switch");
  r.add(DeviceId("Light_1"), DeviceKind::discrete({"on", "off"}), "switch");
  r.add(DeviceId("Lock_1"), DeviceKind::discrete({"locked", "unlocked"}), "lock");
  return r;
}

inline std::vector<Applet> parse_all(const std::vector<std::string>& lines, const DeviceRegistry& reg) {
  std::vector<Applet> out;
  for (std::size_t i = 0; i < lines.size(); ++i) out.push_back(parse_description(lines[i], reg, "a" + std::to_string(i)));
  return out;
}

// ---------------------------------------------------------------------------
// Oracles

// Does `a` fire on `v`? Written from the threshold wording directly:
// "above X" means strictly greater, "below X" strictly smaller.
inline bool oracle_fires(const Applet& a, const Value& v) {
  if (const auto* d = std::get_if<DiscreteTrigger>(&a.trigger)) return !v.is_numeric() && v.as_label() == d->value;
  const auto& n = std::get<NumericTrigger>(a.trigger);
  if (!v.is_numeric()) return false;
  const double x = static_cast<double>(v.as_number());
  return n.comparator == Comparator::Above ? x > static_cast<double>(n.threshold)
                                           : x < static_cast<double>(n.threshold);
}

inline std::string oracle_state_of(const std::string& command) {
  if (command == "lock") return "locked";
  if (command == "unlock") return "unlocked";
  return command;
}

// Identity pipeline: every event goes to an honest T, every reply is applied
// at the end of its second. Returns the commands that changed an actuator.
inline std::vector<Command> oracle_state_changes(const std::vector<Event>& trace, const std::vector<Applet>& applets) {
  std::map<std::pair<std::string, std::string>, std::string> state;
  std::vector<Command> out;
  std::size_t i = 0;
  while (i < trace.size()) {
    std::size_t j = i;
    std::vector<Command> replies;
    while (j < trace.size() && trace[j].ts == trace[i].ts) {
      const auto& e = trace[j];
      state[{e.user.str(), e.device.str()}] = e.value.to_string();
      for (const auto& a : applets)
        if (a.trigger_device == e.device && a.actuator && oracle_fires(a, e.value))
          replies.push_back(Command{e.ts, e.user, *a.actuator, *a.command});
      ++j;
    }
    for (const auto& c : replies) {
      auto& s = state[{c.user.str(), c.device.str()}];
      const auto next = oracle_state_of(c.command);
      if (s != next) {
        s = next;
        out.push_back(c);
      }
    }
    i = j;
  }
  return out;
}

// Which sub-range index of a numeric trigger device holds `v`: count the
// split points (X for above-X, X-1 for below-X) strictly below v.
inline std::size_t oracle_subrange(const std::vector<Applet>& applets, const DeviceId& dev, std::int64_t v) {
  std::set<std::int64_t> splits;
  for (const auto& a : applets)
    if (a.trigger_device == dev)
      if (const auto* n = std::get_if<NumericTrigger>(&a.trigger))
        splits.insert(n->comparator == Comparator::Above ? n->threshold : n->threshold - 1);
  std::size_t k = 0;
  for (auto s : splits)
    if (s < v) ++k;
  return k;
}

inline double oracle_pearson(const std::vector<double>& a, const std::vector<double>& b) {
  long double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= a.size();
  mb /= b.size();
  long double num = 0, da = 0, db = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - ma) * (b[i] - mb);
    da += (a[i] - ma) * (a[i] - ma);
    db += (b[i] - mb) * (b[i] - mb);
  }
  return static_cast<double>(num / std::sqrt(da * db));
}

// ---------------------------------------------------------------------------
// Random small worlds for property tests

struct World {
  DeviceRegistry devices;
  std::vector<Applet> applets;
  std::vector<DeviceId> sensors;
  std::vector<DeviceId> actuators;
};

inline World random_world(std::mt19937_64& rng, std::size_t max_applets = 6) {
  World w;
  const std::vector<std::string> discrete_sensors{"M1", "M2", "D1"};
  const std::vector<std::string> numeric_sensors{"T1", "T2"};
  for (const auto& s : discrete_sensors) {
    if (s[0] == 'M')
      w.devices.add(DeviceId(s), DeviceKind::discrete({"active", "inactive"}), "motion");
    else
      w.devices.add(DeviceId(s), DeviceKind::discrete({"open", "closed", "ajar"}), "contact");
    w.sensors.emplace_back(s);
  }
  for (const auto& s : numeric_sensors) {
    w.devices.add(DeviceId(s), DeviceKind::numeric(0, 40, "C"), "temperature");
    w.sensors.emplace_back(s);
  }
  for (const auto& a : {"S1", "S2", "S3"}) {
    w.devices.add(DeviceId(a), DeviceKind::discrete({"on", "off"}), "switch");
    w.actuators.emplace_back(a);
  }
  w.devices.add(DeviceId("K1"), DeviceKind::discrete({"locked", "unlocked"}), "lock");
  w.actuators.emplace_back("K1");
  w.devices.add(DeviceId("H1"), DeviceKind::discrete({"dry", "wet"}), "water");  // never in an applet

  std::uniform_int_distribution<std::size_t> count(0, max_applets);
  const auto n = count(rng);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& dev = w.sensors[std::uniform_int_distribution<std::size_t>(0, w.sensors.size() - 1)(rng)];
    const auto& act = w.actuators[std::uniform_int_distribution<std::size_t>(0, w.actuators.size() - 1)(rng)];
    std::string trigger;
    const auto& info = w.devices.at(dev);
    if (info.kind.is_numeric()) {
      const auto x = std::uniform_int_distribution<int>(1, 39)(rng);
      trigger = std::string("temperature is ") + (rng() % 2 ? "above " : "below ") + std::to_string(x);
    } else if (info.attribute == "motion") {
      trigger = rng() % 2 ? "Any new motion detected" : "motion is inactive";
    } else {
      const auto& st = info.kind.as_discrete().states;
      trigger = "contact is " + st[rng() % st.size()];
    }
    std::string action;
    if (act.str() == "K1")
      action = rng() % 2 ? "Lock K1" : "Unlock K1";
    else
      action = std::string(rng() % 2 ? "Switch on " : "Switch off ") + act.str();
    w.applets.push_back(parse_description("If " + trigger + " by " + dev.str() + ", then " + action, w.devices,
                                          "r" + std::to_string(i)));
  }
  return w;
}

// Up to `max_events` events over a few users and a short horizon, with
// sensor reports, manual actuator changes and idle-device noise.
inline std::vector<Event> random_trace(std::mt19937_64& rng, const World& w, std::size_t max_events = 500) {
  std::vector<Event> out;
  const auto n = std::uniform_int_distribution<std::size_t>(1, max_events)(rng);
  const Timestamp horizon = std::uniform_int_distribution<Timestamp>(5, 400)(rng);
  std::vector<DeviceId> all;
  for (const auto& [id, info] : w.devices) all.push_back(id);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ts = std::uniform_int_distribution<Timestamp>(0, horizon)(rng);
    const auto& dev = all[std::uniform_int_distribution<std::size_t>(0, all.size() - 1)(rng)];
    const auto& info = w.devices.at(dev);
    Value v;
    if (info.kind.is_numeric()) {
      v = Value::number(std::uniform_int_distribution<std::int64_t>(0, 40)(rng));
    } else {
      const auto& st = info.kind.as_discrete().states;
      v = Value::label(st[rng() % st.size()]);
    }
    out.push_back(Event{ts, UserId(rng() % 3 == 0 ? "u2" : "u1"), dev, info.attribute, v, false});
  }
  std::stable_sort(out.begin(), out.end(), [](const Event& a, const Event& b) { return a.ts < b.ts; });
  return out;
}

}  // namespace fnf::test
