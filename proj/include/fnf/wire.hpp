#pragma once

// JSON wire formats between the gateway (S) and the TA platform (T).
//
//   batch    S -> T : [{"ts":..,"user":..,"device":..,"attribute":..,"value":..}, ...]
//   commands T -> S : [{"ts":..,"user":..,"device":..,"command":..}, ...]
//
// Real and pseudo events serialize identically; the pseudo flag never leaves
// the gateway.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fnf/core_model.hpp"

namespace fnf::wire {

using nlohmann::json;

inline json encode_value(const Value& v) { return v.is_numeric() ? json(v.as_number()) : json(v.as_label()); }

inline json encode_event(const Event& e) {
  return {{"ts", e.ts}, {"user", e.user.str()}, {"device", e.device.str()}, {"attribute", e.attribute},
          {"value", encode_value(e.value)}};
}

inline std::string encode_batch(std::span<const Event> batch) {
  json arr = json::array();
  for (const auto& e : batch) arr.push_back(encode_event(e));
  return arr.dump();
}

// Decodes one wire event; nullopt when a field is missing or mistyped.
inline std::optional<Event> decode_event(const json& j) {
  if (!j.is_object()) return std::nullopt;
  auto str = [&](const char* k) -> const std::string* {
    auto it = j.find(k);
    return (it != j.end() && it->is_string() && !it->get_ref<const std::string&>().empty())
               ? &it->get_ref<const std::string&>()
               : nullptr;
  };
  auto ts = j.find("ts");
  auto value = j.find("value");
  const auto* user = str("user");
  const auto* device = str("device");
  auto attr = j.find("attribute");
  if (ts == j.end() || !ts->is_number_integer() || user == nullptr || device == nullptr || attr == j.end() ||
      !attr->is_string() || value == j.end())
    return std::nullopt;
  Event e;
  e.ts = ts->get<Timestamp>();
  e.user = UserId(*user);
  e.device = DeviceId(*device);
  e.attribute = attr->get<std::string>();
  if (value->is_number_integer())
    e.value = Value::number(value->get<std::int64_t>());
  else if (value->is_string())
    e.value = Value::label(value->get<std::string>());
  else
    return std::nullopt;
  return e;
}

struct DecodedBatch {
  std::vector<Event> events;
  std::size_t malformed = 0;
};

// Throws ProtocolError when the text is not a JSON array; individual bad
// entries are counted and skipped.
inline DecodedBatch decode_batch(std::string_view text) {
  json arr = json::parse(text, nullptr, false);
  if (arr.is_discarded() || !arr.is_array()) throw ProtocolError("batch is not a JSON array");
  DecodedBatch out;
  out.events.reserve(arr.size());
  for (const auto& j : arr) {
    if (auto e = decode_event(j))
      out.events.push_back(std::move(*e));
    else
      ++out.malformed;
  }
  return out;
}

inline json encode_command(const Command& c) {
  return {{"ts", c.ts}, {"user", c.user.str()}, {"device", c.device.str()}, {"command", c.command}};
}

inline std::string encode_commands(std::span<const Command> cmds) {
  json arr = json::array();
  for (const auto& c : cmds) arr.push_back(encode_command(c));
  return arr.dump();
}

inline std::vector<Command> decode_commands(std::string_view text) {
  json arr = json::parse(text, nullptr, false);
  if (arr.is_discarded() || !arr.is_array()) throw ProtocolError("command list is not a JSON array");
  std::vector<Command> out;
  out.reserve(arr.size());
  for (const auto& j : arr) {
    try {
      out.push_back(Command{j.at("ts").get<Timestamp>(), UserId(j.at("user").get<std::string>()),
                            DeviceId(j.at("device").get<std::string>()), j.at("command").get<std::string>()});
    } catch (const std::exception& e) {
      throw ProtocolError(std::string("malformed command: ") + e.what());
    }
  }
  return out;
}

}  // namespace fnf::wire
