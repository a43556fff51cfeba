// Store-and-forward sync between a button device and the host: handshake
// anchors, cumulative acks, idempotent ingestion and a deterministic
// simulation of an unreliable link.

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "selftrack/core.hpp"
#include "selftrack/device.hpp"
#include "selftrack/store.hpp"
#include "selftrack/wire.hpp"

namespace selftrack {

/// (host wall time, device uptime) sampled together at handshake.
struct ClockAnchor {
  std::uint64_t boot_id = 0;
  Millis host_wall_ms = 0;
  Millis uptime_now_ms = 0;
};

/// Latest anchor per boot of one device.
using AnchorTable = std::map<std::uint64_t, ClockAnchor>;

struct MappedTime {
  Millis t_utc_ms = 0;
  Quality quality = Quality::receipt;

  friend bool operator==(const MappedTime&, const MappedTime&) = default;
};

MappedTime map_to_wall(const ClockAnchor& anchor, Millis uptime_ms);
/// Anchored when the table knows `boot_id`, otherwise the receipt time.
MappedTime map_to_wall(const AnchorTable& anchors, std::uint64_t boot_id, Millis uptime_ms,
                       Millis receipt_wall_ms);

struct IngestResult {
  std::vector<RawPress> new_presses;
  SyncAck ack;
  std::vector<OverflowGap> gaps;
};

/// Pure ingestion step. Events at or below `acked_through_seq` are skipped;
/// holes in the seq stream become OverflowGap records and are acked past.
/// Throws MalformedBatch when events are not strictly seq-ordered.
IngestResult host_ingest(const SyncBatch& batch, const AnchorTable& anchors,
                         std::int64_t acked_through_seq, Millis receipt_wall_ms);

/// Host endpoint. Ingestion is serialized per device; distinct devices
/// proceed concurrently.
class SyncHost {
 public:
  /// Ack state is rebuilt from what `store` already holds.
  explicit SyncHost(EventStore& store);

  /// Records the anchor for the hello's boot and returns the current ack.
  SyncAck on_hello(const Hello& hello, Millis host_wall_ms);
  IngestResult ingest(const SyncBatch& batch, Millis receipt_wall_ms);

  SyncAck ack_for(const std::string& device_id) const;
  std::optional<ClockAnchor> anchor(const std::string& device_id, std::uint64_t boot_id) const;

  EventStore& store() { return store_; }

 private:
  struct DeviceState {
    std::mutex mutex;
    std::int64_t acked_through_seq = kNothingAcked;
    AnchorTable anchors;
  };
  DeviceState& state_for(const std::string& device_id) const;

  EventStore& store_;
  mutable std::mutex devices_mutex_;
  mutable std::map<std::string, std::unique_ptr<DeviceState>> devices_;
};

// ---------------------------------------------------------------------------
// Link simulation

/// Half-open [start, end).
struct Interval {
  Millis start = 0;
  Millis end = 0;
};

struct LinkSchedule {
  /// Sorted, disjoint windows during which a connection can be held.
  std::vector<Interval> connected;
  double drop_probability = 0.0;
  /// Overrides drop_probability for host->device acks when set.
  std::optional<double> ack_drop_probability;
  Millis latency_min_ms = 20;
  Millis latency_max_ms = 200;
  std::uint64_t seed = 0;

  bool connected_at(Millis t) const;

  static LinkSchedule always_connected(Millis from, Millis to, std::uint64_t seed = 0);
  /// Each hour of [from, to) is independently down with `p_disconnect`;
  /// the link is always up during [to, to + tail_ms) so every schedule is
  /// eventually connected.
  static LinkSchedule random_hourly(std::uint64_t seed, Millis from, Millis to,
                                    double p_disconnect, double drop_probability,
                                    Millis tail_ms = kMillisPerHour);
};

/// What happens on the device side, in true simulation time.
struct DeviceScript {
  std::vector<Millis> press_times;   // non-decreasing
  std::vector<Millis> reboot_times;  // non-decreasing
};

struct SessionOptions {
  std::size_t max_batch = 64;
  Millis retransmit_timeout_ms = 1000;
  /// Keep an encoded copy of every message in the transcript.
  bool record_messages = false;
};

struct Transcript {
  std::uint64_t connections = 0;
  std::uint64_t batches_sent = 0;
  std::uint64_t batches_delivered = 0;
  std::uint64_t acks_sent = 0;
  std::uint64_t acks_delivered = 0;
  std::uint64_t messages_dropped = 0;
  std::uint64_t presses_stored = 0;
  /// Every seq that reached the host in some delivered batch, whether or
  /// not the host kept it. Kept by the link, not the host.
  std::set<std::uint32_t> delivered_seqs;
  /// True press time per seq, as pressed on the device.
  std::map<std::uint32_t, Millis> true_time_of_seq;
  /// "<t> <direction> <json>" per message when record_messages is set.
  std::vector<std::string> messages;
};

/// Drives handshake, batches and acks over `link` while processing the
/// device script, until `until_ms`. Deterministic in (link.seed, inputs).
Transcript run_session(ButtonDevice& device, SyncHost& host, const LinkSchedule& link,
                       const DeviceScript& script, Millis until_ms,
                       const SessionOptions& options = {});

}  // namespace selftrack
