#include "selftrack/device.hpp"

#include <algorithm>
#include <utility>

namespace selftrack {

ButtonDevice::ButtonDevice(std::string device_id, int drift_ppm, Millis boot_true_ms,
                           std::size_t capacity)
    : device_id_(std::move(device_id)),
      drift_ppm_(drift_ppm),
      capacity_(std::max<std::size_t>(capacity, 1)),
      boot_true_ms_(boot_true_ms) {}

Millis ButtonDevice::uptime_at(Millis true_ms) const {
  const Millis elapsed = std::max<Millis>(true_ms - boot_true_ms_, 0);
  // elapsed * (1 + drift * 1e-6), floored, in exact integer arithmetic.
  const Millis scaled = elapsed * drift_ppm_;
  Millis correction = scaled / 1'000'000;
  if (scaled % 1'000'000 != 0 && scaled < 0) --correction;
  return elapsed + correction;
}

const BufferedPress& ButtonDevice::press(Millis true_ms) {
  if (buffer_.size() >= capacity_) {
    evicted_.push_back(buffer_.front().seq);
    buffer_.pop_front();
    overflowed_ = true;
  }
  buffer_.push_back({next_seq_++, boot_id_, uptime_at(true_ms)});
  return buffer_.back();
}

void ButtonDevice::reboot(Millis true_ms) {
  ++boot_id_;
  boot_true_ms_ = true_ms;
}

SyncBatch ButtonDevice::drain_batch(std::size_t max_n) const {
  SyncBatch batch{device_id_, {}};
  const auto n = std::min(max_n, buffer_.size());
  batch.events.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = buffer_[i];
    batch.events.push_back({p.seq, p.boot_id, p.uptime_ms});
  }
  return batch;
}

Hello ButtonDevice::hello(Millis true_ms) const {
  return Hello{device_id_, boot_id_, uptime_at(true_ms), buffer_.size(), overflowed_};
}

void ButtonDevice::apply_ack(const SyncAck& ack) {
  while (!buffer_.empty() &&
         static_cast<std::int64_t>(buffer_.front().seq) <= ack.acked_through_seq) {
    buffer_.pop_front();
  }
}

}  // namespace selftrack
