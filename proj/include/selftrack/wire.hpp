// Device<->host protocol messages and their line-delimited JSON encoding.
//
// Each message is one JSON object on one line carrying exactly its own
// fields (snake_case, in declaration order). Messages are told apart by
// their field sets; there is no type tag.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "selftrack/core.hpp"

namespace selftrack {

struct Hello {
  std::string device_id;
  std::uint64_t boot_id = 0;
  Millis uptime_now_ms = 0;
  std::uint64_t buffered_count = 0;
  bool overflowed = false;

  friend bool operator==(const Hello&, const Hello&) = default;
};

struct BatchEvent {
  std::uint32_t seq = 0;
  std::uint64_t boot_id = 0;
  Millis uptime_ms = 0;

  friend bool operator==(const BatchEvent&, const BatchEvent&) = default;
};

struct SyncBatch {
  std::string device_id;
  std::vector<BatchEvent> events;

  friend bool operator==(const SyncBatch&, const SyncBatch&) = default;
};

/// Sentinel for "nothing stored yet".
constexpr std::int64_t kNothingAcked = -1;

struct SyncAck {
  std::int64_t acked_through_seq = kNothingAcked;

  friend bool operator==(const SyncAck&, const SyncAck&) = default;
};

using WireMessage = std::variant<Hello, SyncBatch, SyncAck>;

std::string encode(const Hello& m);
std::string encode(const SyncBatch& m);
std::string encode(const SyncAck& m);
std::string encode(const WireMessage& m);

/// Parses one line. Throws ParseError on unknown or extra fields.
WireMessage decode_message(std::string_view line);

/// Parses every non-empty line of a line-delimited body.
std::vector<WireMessage> decode_messages(std::string_view body);

}  // namespace selftrack
