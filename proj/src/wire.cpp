#include "selftrack/wire.hpp"

#include <set>

#include "json.hpp"

namespace selftrack {

namespace {

using ojson = nlohmann::ordered_json;

std::set<std::string> keys_of(const ojson& j) {
  std::set<std::string> out;
  for (auto it = j.begin(); it != j.end(); ++it) out.insert(it.key());
  return out;
}

template <typename T>
T get_field(const ojson& j, const char* name) {
  try {
    return j.at(name).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("field '") + name + "': " + e.what());
  }
}

Hello hello_from(const ojson& j) {
  return Hello{get_field<std::string>(j, "device_id"), get_field<std::uint64_t>(j, "boot_id"),
               get_field<Millis>(j, "uptime_now_ms"), get_field<std::uint64_t>(j, "buffered_count"),
               get_field<bool>(j, "overflowed")};
}

SyncBatch batch_from(const ojson& j) {
  SyncBatch b{get_field<std::string>(j, "device_id"), {}};
  const auto& events = j.at("events");
  if (!events.is_array()) throw ParseError("events must be an array");
  const std::set<std::string> event_keys{"seq", "boot_id", "uptime_ms"};
  for (const auto& e : events) {
    if (!e.is_object() || keys_of(e) != event_keys) throw ParseError("malformed batch event");
    b.events.push_back({get_field<std::uint32_t>(e, "seq"), get_field<std::uint64_t>(e, "boot_id"),
                        get_field<Millis>(e, "uptime_ms")});
  }
  return b;
}

}  // namespace

std::string encode(const Hello& m) {
  ojson j;
  j["device_id"] = m.device_id;
  j["boot_id"] = m.boot_id;
  j["uptime_now_ms"] = m.uptime_now_ms;
  j["buffered_count"] = m.buffered_count;
  j["overflowed"] = m.overflowed;
  return j.dump();
}

std::string encode(const SyncBatch& m) {
  ojson j;
  j["device_id"] = m.device_id;
  j["events"] = ojson::array();
  for (const auto& e : m.events) {
    ojson ej;
    ej["seq"] = e.seq;
    ej["boot_id"] = e.boot_id;
    ej["uptime_ms"] = e.uptime_ms;
    j["events"].push_back(std::move(ej));
  }
  return j.dump();
}

std::string encode(const SyncAck& m) {
  ojson j;
  j["acked_through_seq"] = m.acked_through_seq;
  return j.dump();
}

std::string encode(const WireMessage& m) {
  return std::visit([](const auto& v) { return encode(v); }, m);
}

WireMessage decode_message(std::string_view line) {
  ojson j;
  try {
    j = ojson::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("message must be a JSON object");
  const auto keys = keys_of(j);
  if (keys == std::set<std::string>{"device_id", "boot_id", "uptime_now_ms", "buffered_count",
                                    "overflowed"})
    return hello_from(j);
  if (keys == std::set<std::string>{"device_id", "events"}) return batch_from(j);
  if (keys == std::set<std::string>{"acked_through_seq"})
    return SyncAck{get_field<std::int64_t>(j, "acked_through_seq")};
  throw ParseError("unrecognized message field set");
}

std::vector<WireMessage> decode_messages(std::string_view body) {
  std::vector<WireMessage> out;
  std::size_t pos = 0;
  while (pos <= body.size()) {
    auto nl = body.find('\n', pos);
    if (nl == std::string_view::npos) nl = body.size();
    auto line = body.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") != std::string_view::npos)
      out.push_back(decode_message(line));
    pos = nl + 1;
  }
  return out;
}

}  // namespace selftrack
