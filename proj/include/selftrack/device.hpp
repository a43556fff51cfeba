// Simulated smartbutton firmware: a drifting uptime clock, a persisted
// sequence counter and a bounded store-and-forward buffer.

#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "selftrack/core.hpp"
#include "selftrack/wire.hpp"

namespace selftrack {

/// A press as held in the device buffer (before the host assigns wall time).
struct BufferedPress {
  std::uint32_t seq = 0;
  std::uint64_t boot_id = 0;
  Millis uptime_ms = 0;
};

class ButtonDevice {
 public:
  static constexpr std::size_t kDefaultCapacity = 4096;

  /// `boot_true_ms` is the simulation's true time of the first boot. All
  /// later times passed in must not precede it.
  ButtonDevice(std::string device_id, int drift_ppm, Millis boot_true_ms,
               std::size_t capacity = kDefaultCapacity);

  /// Uptime the drifting clock reads at true time `true_ms`.
  Millis uptime_at(Millis true_ms) const;

  /// Records a press. On a full buffer the oldest press is evicted and the
  /// overflow flag raised.
  const BufferedPress& press(Millis true_ms);

  /// Restart: boot id increments, uptime restarts from zero at `true_ms`;
  /// buffer and sequence counter survive.
  void reboot(Millis true_ms);

  /// Up to `max_n` oldest unacked presses. Does not consume the buffer.
  SyncBatch drain_batch(std::size_t max_n) const;

  Hello hello(Millis true_ms) const;

  /// Drops every buffered press with seq <= ack.acked_through_seq.
  void apply_ack(const SyncAck& ack);

  const std::string& device_id() const { return device_id_; }
  std::uint64_t boot_id() const { return boot_id_; }
  std::uint32_t next_seq() const { return next_seq_; }
  int drift_ppm() const { return drift_ppm_; }
  std::size_t capacity() const { return capacity_; }
  bool overflowed() const { return overflowed_; }
  const std::deque<BufferedPress>& buffer() const { return buffer_; }
  /// Seqs evicted by overflow, in eviction order.
  const std::vector<std::uint32_t>& evicted() const { return evicted_; }

 private:
  std::string device_id_;
  int drift_ppm_;
  std::size_t capacity_;
  std::uint64_t boot_id_ = 0;
  Millis boot_true_ms_;
  std::uint32_t next_seq_ = 0;
  std::deque<BufferedPress> buffer_;
  bool overflowed_ = false;
  std::vector<std::uint32_t> evicted_;
};

}  // namespace selftrack
