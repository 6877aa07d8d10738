#pragma once

// Trace ingestion and synthesis: CASAS-style text logs, newline-delimited
// JSON event caches, and seeded multi-day traces generated from per-user
// rate profiles.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <iomanip>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fnf/applet_catalog.hpp"
#include "fnf/core_model.hpp"
#include "fnf/pattern.hpp"
#include "fnf/wire.hpp"

namespace fnf {

// ---------------------------------------------------------------------------
// CASAS text logs

enum class SensorClass { Motion, Door, Temperature, Switch, Battery, Ignored };

// Sensor-id prefix -> device class; the longest matching prefix wins.
struct SensorMapping {
  std::vector<std::pair<std::string, SensorClass>> rules;

  static SensorMapping casas_default() {
    return SensorMapping{{{"M", SensorClass::Motion},
                          {"MA", SensorClass::Motion},
                          {"D", SensorClass::Door},
                          {"T", SensorClass::Temperature},
                          {"L", SensorClass::Switch},
                          {"LL", SensorClass::Switch},
                          {"LS", SensorClass::Ignored},  // light-level sensors
                          {"BAT", SensorClass::Battery}}};
  }

  std::optional<SensorClass> classify(const std::string& sensor) const {
    std::optional<SensorClass> best;
    std::size_t best_len = 0;
    for (const auto& [prefix, cls] : rules) {
      if (sensor.rfind(prefix, 0) == 0 && prefix.size() > best_len) {
        best = cls;
        best_len = prefix.size();
      }
    }
    return best;
  }
};

inline const char* attribute_of(SensorClass c) {
  switch (c) {
    case SensorClass::Motion: return "motion";
    case SensorClass::Door: return "contact";
    case SensorClass::Temperature: return "temperature";
    case SensorClass::Switch: return "switch";
    default: return "";
  }
}

// Half-up rounding to an integer reading.
inline std::int64_t round_half_up(double x) { return static_cast<std::int64_t>(std::floor(x + 0.5)); }

struct CasasDate {
  int year = 1970;
  unsigned month = 1;
  unsigned day = 1;

  std::int64_t days_since_epoch() const {
    using namespace std::chrono;
    return sys_days{std::chrono::year{year} / std::chrono::month{month} / std::chrono::day{day}}
        .time_since_epoch()
        .count();
  }
  static CasasDate from_days(std::int64_t days) {
    using namespace std::chrono;
    year_month_day ymd{sys_days{std::chrono::days{days}}};
    return CasasDate{static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day())};
  }
  std::string str() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year, month, day);
    return buf;
  }
  friend bool operator==(const CasasDate&, const CasasDate&) = default;
};

struct CasasParseResult {
  std::vector<Event> events;
  CasasDate epoch;  // midnight of the first record's date is t = 0
  std::size_t lines = 0;
  std::size_t malformed = 0;
  std::size_t battery = 0;
  std::size_t ignored = 0;
  std::vector<std::string> warnings;
};

struct CasasOptions {
  SensorMapping mapping = SensorMapping::casas_default();
  double max_malformed_fraction = 0.01;
};

namespace detail {

inline std::optional<CasasDate> parse_date(const std::string& s) {
  int y = 0;
  unsigned m = 0, d = 0;
  char a = 0, b = 0;
  std::istringstream in(s);
  if (!(in >> y >> a >> m >> b >> d) || a != '-' || b != '-' || !in.eof()) return std::nullopt;
  if (!std::chrono::year_month_day{std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{d}}.ok())
    return std::nullopt;
  return CasasDate{y, m, d};
}

inline std::optional<std::int64_t> parse_time_of_day(const std::string& s) {
  unsigned h = 0, mi = 0, sec = 0;
  if (s.size() < 8 || s[2] != ':' || s[5] != ':') return std::nullopt;
  for (std::size_t i : {0u, 1u, 3u, 4u, 6u, 7u})
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return std::nullopt;
  h = static_cast<unsigned>(std::stoi(s.substr(0, 2)));
  mi = static_cast<unsigned>(std::stoi(s.substr(3, 2)));
  sec = static_cast<unsigned>(std::stoi(s.substr(6, 2)));
  if (s.size() > 8) {
    if (s[8] != '.') return std::nullopt;
    for (std::size_t i = 9; i < s.size(); ++i)
      if (!std::isdigit(static_cast<unsigned char>(s[i]))) return std::nullopt;
  }
  if (h > 23 || mi > 59 || sec > 60) return std::nullopt;
  return static_cast<std::int64_t>(h) * 3600 + mi * 60 + sec;  // sub-second part truncated
}

inline std::optional<Value> map_value(SensorClass cls, const std::string& raw) {
  switch (cls) {
    case SensorClass::Motion:
      if (raw == "ON") return Value::label("active");
      if (raw == "OFF") return Value::label("inactive");
      return std::nullopt;
    case SensorClass::Door:
      if (raw == "OPEN") return Value::label("open");
      if (raw == "CLOSE" || raw == "CLOSED") return Value::label("closed");
      return std::nullopt;
    case SensorClass::Switch:
      if (raw == "ON") return Value::label("on");
      if (raw == "OFF") return Value::label("off");
      return std::nullopt;
    case SensorClass::Temperature: {
      char* end = nullptr;
      const double x = std::strtod(raw.c_str(), &end);
      if (end == raw.c_str() || *end != '\0' || !std::isfinite(x)) return std::nullopt;
      return Value::number(round_half_up(x));
    }
    default: return std::nullopt;
  }
}

}  // namespace detail

// Parses `YYYY-MM-DD HH:MM:SS[.ffffff] SENSOR VALUE [annotation...]` lines.
// Malformed lines are skipped with a warning; more than
// `max_malformed_fraction` of them is a hard error.
inline CasasParseResult parse_casas(std::istream& in, const UserId& user, const CasasOptions& opts = {}) {
  CasasParseResult out;
  struct Raw {
    std::int64_t day;
    std::int64_t tod;
    std::string sensor;
    SensorClass cls;
    Value value;
  };
  std::vector<Raw> raws;
  std::string line;
  std::size_t lineno = 0;
  auto warn = [&](const std::string& msg) {
    ++out.malformed;
    if (out.warnings.size() < 100) out.warnings.push_back("line " + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++out.lines;
    std::istringstream ss(line);
    std::string date, time, sensor, value;
    if (!(ss >> date >> time >> sensor >> value)) {
      warn("expected date, time, sensor and value");
      continue;
    }
    const auto d = detail::parse_date(date);
    const auto t = detail::parse_time_of_day(time);
    if (!d || !t) {
      warn("bad timestamp '" + date + " " + time + "'");
      continue;
    }
    const auto cls = opts.mapping.classify(sensor);
    if (!cls) {
      warn("unmapped sensor '" + sensor + "'");
      continue;
    }
    if (*cls == SensorClass::Battery) {
      ++out.battery;
      continue;
    }
    if (*cls == SensorClass::Ignored) {
      ++out.ignored;
      continue;
    }
    auto v = detail::map_value(*cls, value);
    if (!v) {
      warn("bad value '" + value + "' for " + sensor);
      continue;
    }
    raws.push_back(Raw{d->days_since_epoch(), *t, sensor, *cls, std::move(*v)});
  }
  if (out.lines > 0 && static_cast<double>(out.malformed) > opts.max_malformed_fraction * static_cast<double>(out.lines))
    throw ParseError(std::to_string(out.malformed) + " of " + std::to_string(out.lines) + " lines malformed", 0);
  if (raws.empty()) return out;

  std::int64_t first_day = raws.front().day;
  for (const auto& r : raws) first_day = std::min(first_day, r.day);
  out.epoch = CasasDate::from_days(first_day);
  out.events.reserve(raws.size());
  for (auto& r : raws) {
    Event e;
    e.ts = (r.day - first_day) * kSecondsPerDay + r.tod;
    e.user = user;
    e.device = DeviceId(r.sensor);
    e.attribute = attribute_of(r.cls);
    e.value = std::move(r.value);
    out.events.push_back(std::move(e));
  }
  std::stable_sort(out.events.begin(), out.events.end(), [](const Event& a, const Event& b) { return a.ts < b.ts; });
  return out;
}

// Writes events back in CASAS form; t = 0 is midnight of `epoch`.
inline void write_casas(std::ostream& out, std::span<const Event> events, const CasasDate& epoch) {
  const auto base = epoch.days_since_epoch();
  for (const auto& e : events) {
    const auto day = day_of(e.ts);
    const auto tod = e.ts - day * kSecondsPerDay;
    std::string raw;
    if (e.value.is_numeric()) {
      raw = std::to_string(e.value.as_number());
    } else {
      const auto& l = e.value.as_label();
      if (l == "active" || l == "on") raw = "ON";
      else if (l == "inactive" || l == "off") raw = "OFF";
      else if (l == "open") raw = "OPEN";
      else if (l == "closed") raw = "CLOSE";
      else raw = l;
    }
    char clock[64];
    std::snprintf(clock, sizeof clock, "%02lld:%02lld:%02lld.000000", static_cast<long long>(tod / 3600),
                  static_cast<long long>((tod / 60) % 60), static_cast<long long>(tod % 60));
    out << CasasDate::from_days(base + day).str() << ' ' << clock << ' ' << e.device.str() << ' ' << raw << '\n';
  }
}

struct CasasRanges {
  std::int64_t temperature_min = -20;
  std::int64_t temperature_max = 80;
};

// Registry for every sensor seen in `events`, by sensor class.
inline DeviceRegistry casas_registry(std::span<const Event> events, const SensorMapping& mapping = SensorMapping::casas_default(),
                                     const CasasRanges& ranges = {}) {
  std::set<std::string> seen;
  for (const auto& e : events) seen.insert(e.device.str());
  DeviceRegistry reg;
  for (const auto& id : seen) {
    const auto cls = mapping.classify(id);
    if (!cls) continue;
    switch (*cls) {
      case SensorClass::Motion: reg.add(DeviceId(id), DeviceKind::discrete({"active", "inactive"}), "motion"); break;
      case SensorClass::Door: reg.add(DeviceId(id), DeviceKind::discrete({"open", "closed"}), "contact"); break;
      case SensorClass::Switch: reg.add(DeviceId(id), DeviceKind::discrete({"on", "off"}), "switch"); break;
      case SensorClass::Temperature:
        reg.add(DeviceId(id), DeviceKind::numeric(ranges.temperature_min, ranges.temperature_max, "C"), "temperature");
        break;
      default: break;
    }
  }
  return reg;
}

// One applet per switch, each driven by a distinct device drawn (seeded) from
// the motion/contact/temperature group: motion "active" and contact "open"
// switch on; temperature switches on above the sensor's trace mean.
inline std::vector<std::string> assign_casas_applets(const DeviceRegistry& devices, std::span<const Event> events,
                                                     std::uint64_t seed,
                                                     const SensorMapping& mapping = SensorMapping::casas_default()) {
  std::vector<DeviceId> switches, triggers;
  for (const auto& [id, info] : devices) {
    const auto cls = mapping.classify(id.str());
    if (!cls) continue;
    if (*cls == SensorClass::Switch) switches.push_back(id);
    if (*cls == SensorClass::Motion || *cls == SensorClass::Door || *cls == SensorClass::Temperature)
      triggers.push_back(id);
  }
  if (switches.empty()) return {};
  if (triggers.empty()) throw ConfigError("no motion, contact or temperature device to drive the switches");

  std::map<DeviceId, std::pair<double, std::size_t>> sums;
  for (const auto& e : events)
    if (e.value.is_numeric()) {
      auto& s = sums[e.device];
      s.first += static_cast<double>(e.value.as_number());
      ++s.second;
    }

  std::mt19937_64 rng(seed);
  std::shuffle(triggers.begin(), triggers.end(), rng);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < switches.size(); ++i) {
    const auto& trig = triggers[i % triggers.size()];
    const auto& info = devices.at(trig);
    std::string clause;
    if (info.attribute == "motion") {
      clause = "Any new motion detected";
    } else if (info.attribute == "contact") {
      clause = "contact is open";
    } else {
      const auto& range = info.kind.as_numeric();
      const auto it = sums.find(trig);
      const double mean = (it == sums.end() || it->second.second == 0)
                              ? 0.5 * static_cast<double>(range.min + range.max)
                              : it->second.first / static_cast<double>(it->second.second);
      auto threshold = static_cast<std::int64_t>(std::floor(mean));
      threshold = std::clamp(threshold, range.min + 1, range.max - 1);
      clause = info.attribute + " is above " + std::to_string(threshold);
    }
    out.push_back("If " + clause + " by " + trig.str() + ", then Switch on " + switches[i].str());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Newline-delimited JSON event cache

inline void write_ndjson(std::ostream& out, std::span<const Event> events) {
  for (const auto& e : events) out << wire::encode_event(e).dump() << '\n';
}

inline std::vector<Event> read_ndjson(std::istream& in) {
  std::vector<Event> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    auto e = j.is_discarded() ? std::nullopt : wire::decode_event(j);
    if (!e) throw ParseError("malformed event record", 0, lineno);
    out.push_back(std::move(*e));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic traces

// How a device reports when an arrival happens.
struct FollowUp {
  DeviceId device;
  Value value;
  std::int64_t delay = 0;  // seconds after the last burst event
};

struct EmissionRule {
  enum class Mode { Burst, Toggle, Random, Walk };
  Mode mode = Mode::Burst;
  std::vector<std::string> values;  // Burst: sequence; Toggle/Random: label set
  int repeat = 1;                   // Burst: sequence repetitions
  std::int64_t spacing = 10;        // Burst: seconds between events
  std::vector<FollowUp> follow;     // Burst: reports on other devices afterwards
  std::int64_t start = 0;           // Walk
  std::int64_t step = 1;
  std::int64_t min = 0;
  std::int64_t max = 0;
};

struct DeviceProfile {
  DeviceId device;
  std::vector<double> rates;  // arrivals per bucket per day
  EmissionRule emit;
};

struct UserProfile {
  UserId user;
  std::size_t buckets = 24;
  std::vector<DeviceProfile> devices;
};

namespace detail {

inline EmissionRule rule_from_json(const nlohmann::json& j) {
  EmissionRule r;
  const auto mode = j.value("mode", std::string("burst"));
  if (mode == "burst") r.mode = EmissionRule::Mode::Burst;
  else if (mode == "toggle") r.mode = EmissionRule::Mode::Toggle;
  else if (mode == "random") r.mode = EmissionRule::Mode::Random;
  else if (mode == "walk") r.mode = EmissionRule::Mode::Walk;
  else throw ConfigError("unknown emission mode '" + mode + "'");
  r.values = j.value("values", std::vector<std::string>{});
  r.repeat = j.value("repeat", 1);
  r.spacing = j.value("spacing", std::int64_t{10});
  r.start = j.value("start", std::int64_t{0});
  r.step = j.value("step", std::int64_t{1});
  r.min = j.value("min", std::int64_t{0});
  r.max = j.value("max", std::int64_t{0});
  if (j.contains("follow"))
    for (const auto& f : j.at("follow")) {
      const auto& v = f.at("value");
      r.follow.push_back(FollowUp{DeviceId(f.at("device").get<std::string>()),
                                  v.is_number_integer() ? Value::number(v.get<std::int64_t>())
                                                        : Value::label(v.get<std::string>()),
                                  f.value("delay", std::int64_t{0})});
    }
  if (r.mode != EmissionRule::Mode::Walk && r.values.empty()) throw ConfigError("emission rule needs 'values'");
  if (r.mode == EmissionRule::Mode::Walk && r.min >= r.max) throw ConfigError("walk needs min < max");
  if (r.repeat < 1 || r.spacing < 0) throw ConfigError("burst needs repeat >= 1 and spacing >= 0");
  return r;
}

inline nlohmann::json rule_to_json(const EmissionRule& r) {
  static const char* kModes[] = {"burst", "toggle", "random", "walk"};
  nlohmann::json j{{"mode", kModes[static_cast<int>(r.mode)]}};
  if (r.mode == EmissionRule::Mode::Walk) {
    j["start"] = r.start;
    j["step"] = r.step;
    j["min"] = r.min;
    j["max"] = r.max;
    return j;
  }
  j["values"] = r.values;
  if (r.mode == EmissionRule::Mode::Burst) {
    j["repeat"] = r.repeat;
    j["spacing"] = r.spacing;
    if (!r.follow.empty()) {
      auto arr = nlohmann::json::array();
      for (const auto& f : r.follow)
        arr.push_back({{"device", f.device.str()}, {"value", wire::encode_value(f.value)}, {"delay", f.delay}});
      j["follow"] = arr;
    }
  }
  return j;
}

}  // namespace detail

// Profile JSON:
//   {"user": "...", "buckets": 24,
//    "devices": [{"device": "M001", "rates": [24 numbers], "emit": {...}}]}
// emit: {"mode": "burst", "values": [...], "repeat": k, "spacing": s,
//        "follow": [{"device": "L001", "value": "off", "delay": 60}]}
//     | {"mode": "toggle" | "random", "values": [...]}
//     | {"mode": "walk", "start": x, "step": s, "min": lo, "max": hi}
inline UserProfile profile_from_json(const nlohmann::json& j) {
  UserProfile p;
  p.user = UserId(j.at("user").get<std::string>());
  p.buckets = j.value("buckets", std::size_t{24});
  for (const auto& d : j.at("devices")) {
    DeviceProfile dp{DeviceId(d.at("device").get<std::string>()), d.at("rates").get<std::vector<double>>(),
                     detail::rule_from_json(d.at("emit"))};
    if (dp.rates.size() != p.buckets) throw ConfigError("device '" + dp.device.str() + "' needs one rate per bucket");
    for (double r : dp.rates)
      if (!(r >= 0.0)) throw ConfigError("rates must be >= 0 for '" + dp.device.str() + "'");
    p.devices.push_back(std::move(dp));
  }
  return p;
}

inline nlohmann::json profile_to_json(const UserProfile& p) {
  nlohmann::json devices = nlohmann::json::array();
  for (const auto& d : p.devices)
    devices.push_back({{"device", d.device.str()}, {"rates", d.rates}, {"emit", detail::rule_to_json(d.emit)}});
  return {{"user", p.user.str()}, {"buckets", p.buckets}, {"devices", devices}};
}

// Shared base plus `scale` times a per-device rate perturbation (clamped at 0).
inline UserProfile perturbed_profile(const UserProfile& base, const std::map<DeviceId, std::vector<double>>& delta,
                                     double scale, UserId user) {
  UserProfile out = base;
  out.user = std::move(user);
  for (auto& d : out.devices) {
    auto it = delta.find(d.device);
    if (it == delta.end()) continue;
    if (it->second.size() != d.rates.size()) throw ConfigError("perturbation length mismatch for '" + d.device.str() + "'");
    for (std::size_t i = 0; i < d.rates.size(); ++i) d.rates[i] = std::max(0.0, d.rates[i] + scale * it->second[i]);
  }
  return out;
}

// Trace for one profile over `days` days. Arrivals per (device, bucket, day)
// are Poisson with the profile rate and uniform within the bucket.
inline std::vector<Event> generate_user_trace(const UserProfile& profile, const DeviceRegistry& devices, std::int64_t days,
                                              std::uint64_t seed) {
  if (days < 1) throw ConfigError("days must be >= 1");
  if (profile.buckets == 0 || kSecondsPerDay % static_cast<Timestamp>(profile.buckets) != 0)
    throw ConfigError("bucket count must divide a day");
  const Timestamp bucket_len = kSecondsPerDay / static_cast<Timestamp>(profile.buckets);
  const Timestamp horizon = days * kSecondsPerDay;

  struct Stamped {
    Event e;
    std::uint64_t order;
  };
  std::vector<Stamped> out;
  std::uint64_t order = 0;
  auto emit = [&](Timestamp ts, const DeviceId& dev, Value v) {
    if (ts >= horizon) return;
    const auto& info = devices.at(dev);
    Event e{ts, profile.user, dev, info.attribute, std::move(v), false};
    devices.validate(e.device, e.value);
    out.push_back(Stamped{std::move(e), order++});
  };

  for (std::size_t di = 0; di < profile.devices.size(); ++di) {
    const auto& dp = profile.devices[di];
    std::seed_seq seq{seed, static_cast<std::uint64_t>(di), static_cast<std::uint64_t>(0x5eed)};
    std::mt19937_64 rng(seq);
    std::vector<Timestamp> arrivals;
    for (std::int64_t day = 0; day < days; ++day) {
      for (std::size_t b = 0; b < profile.buckets; ++b) {
        if (dp.rates[b] <= 0.0) continue;
        std::poisson_distribution<int> count(dp.rates[b]);
        std::uniform_int_distribution<Timestamp> offset(0, bucket_len - 1);
        const int k = count(rng);
        for (int i = 0; i < k; ++i)
          arrivals.push_back(day * kSecondsPerDay + static_cast<Timestamp>(b) * bucket_len + offset(rng));
      }
    }
    std::sort(arrivals.begin(), arrivals.end());

    const auto& rule = dp.emit;
    std::size_t toggle = 0;
    std::int64_t walk = rule.start;
    for (auto t : arrivals) {
      switch (rule.mode) {
        case EmissionRule::Mode::Burst: {
          Timestamp ts = t;
          for (int r = 0; r < rule.repeat; ++r)
            for (const auto& label : rule.values) {
              emit(ts, dp.device, Value::label(label));
              ts += rule.spacing;
            }
          const Timestamp last = ts - rule.spacing;
          for (const auto& f : rule.follow) emit(last + f.delay, f.device, f.value);
          break;
        }
        case EmissionRule::Mode::Toggle:
          emit(t, dp.device, Value::label(rule.values[toggle++ % rule.values.size()]));
          break;
        case EmissionRule::Mode::Random: {
          std::uniform_int_distribution<std::size_t> pick(0, rule.values.size() - 1);
          emit(t, dp.device, Value::label(rule.values[pick(rng)]));
          break;
        }
        case EmissionRule::Mode::Walk: {
          std::uniform_int_distribution<std::int64_t> step(-rule.step, rule.step);
          walk = std::clamp(walk + step(rng), rule.min, rule.max);
          emit(t, dp.device, Value::number(walk));
          break;
        }
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Stamped& a, const Stamped& b) {
    return a.e.ts != b.e.ts ? a.e.ts < b.e.ts : a.order < b.order;
  });
  std::vector<Event> events;
  events.reserve(out.size());
  for (auto& s : out) events.push_back(std::move(s.e));
  return events;
}

// One trace per profile, deterministic under `seed`. Profiles must share the
// device layout.
inline std::vector<std::vector<Event>> generate_synthetic(std::span<const UserProfile> profiles,
                                                          const DeviceRegistry& devices, std::int64_t days,
                                                          std::uint64_t seed) {
  std::vector<std::vector<Event>> out;
  std::set<DeviceId> layout;
  for (std::size_t u = 0; u < profiles.size(); ++u) {
    std::set<DeviceId> mine;
    for (const auto& d : profiles[u].devices) mine.insert(d.device);
    if (u == 0)
      layout = mine;
    else if (mine != layout)
      throw ConfigError("profile '" + profiles[u].user.str() + "' does not share the device layout");
    out.push_back(generate_user_trace(profiles[u], devices, days, seed * 1000003ULL + u));
  }
  return out;
}

// Merges per-user traces into one time-ordered stream.
inline std::vector<Event> merge_traces(const std::vector<std::vector<Event>>& traces) {
  std::vector<Event> all;
  for (const auto& t : traces) all.insert(all.end(), t.begin(), t.end());
  std::stable_sort(all.begin(), all.end(), [](const Event& a, const Event& b) { return a.ts < b.ts; });
  return all;
}

}  // namespace fnf
