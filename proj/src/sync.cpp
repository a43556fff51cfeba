#include "selftrack/sync.hpp"

#include <algorithm>
#include <limits>
#include <variant>

namespace selftrack {

MappedTime map_to_wall(const ClockAnchor& anchor, Millis uptime_ms) {
  return {anchor.host_wall_ms - (anchor.uptime_now_ms - uptime_ms), Quality::anchored};
}

MappedTime map_to_wall(const AnchorTable& anchors, std::uint64_t boot_id, Millis uptime_ms,
                       Millis receipt_wall_ms) {
  if (auto it = anchors.find(boot_id); it != anchors.end()) return map_to_wall(it->second, uptime_ms);
  return {receipt_wall_ms, Quality::receipt};
}

IngestResult host_ingest(const SyncBatch& batch, const AnchorTable& anchors,
                         std::int64_t acked_through_seq, Millis receipt_wall_ms) {
  for (std::size_t i = 1; i < batch.events.size(); ++i) {
    if (batch.events[i].seq <= batch.events[i - 1].seq)
      throw MalformedBatch("batch events are not strictly seq-ordered");
  }
  IngestResult result;
  std::int64_t ack = acked_through_seq;
  for (const auto& e : batch.events) {
    const auto seq = static_cast<std::int64_t>(e.seq);
    if (seq <= ack) continue;
    if (seq > ack + 1) {
      // The device sends its buffer head first, so a hole can only be
      // presses it evicted before they were delivered.
      result.gaps.push_back({batch.device_id, static_cast<std::uint32_t>(ack + 1),
                             static_cast<std::uint32_t>(seq - 1), receipt_wall_ms});
    }
    const auto mapped = map_to_wall(anchors, e.boot_id, e.uptime_ms, receipt_wall_ms);
    result.new_presses.push_back(
        {batch.device_id, e.boot_id, e.seq, e.uptime_ms, mapped.t_utc_ms, mapped.quality});
    ack = seq;
  }
  result.ack = SyncAck{ack};
  return result;
}

// ---------------------------------------------------------------------------
// SyncHost

SyncHost::SyncHost(EventStore& store) : store_(store) {
  for (const auto& id : store_.devices()) state_for(id).acked_through_seq = store_.max_seq(id);
  for (const auto& gap : store_.overflow_gaps()) {
    auto& st = state_for(gap.device_id);
    st.acked_through_seq = std::max<std::int64_t>(st.acked_through_seq, gap.last_seq);
  }
}

SyncHost::DeviceState& SyncHost::state_for(const std::string& device_id) const {
  std::lock_guard lock(devices_mutex_);
  auto& slot = devices_[device_id];
  if (!slot) slot = std::make_unique<DeviceState>();
  return *slot;
}

SyncAck SyncHost::on_hello(const Hello& hello, Millis host_wall_ms) {
  auto& st = state_for(hello.device_id);
  std::lock_guard lock(st.mutex);
  st.anchors[hello.boot_id] = ClockAnchor{hello.boot_id, host_wall_ms, hello.uptime_now_ms};
  return SyncAck{st.acked_through_seq};
}

IngestResult SyncHost::ingest(const SyncBatch& batch, Millis receipt_wall_ms) {
  auto& st = state_for(batch.device_id);
  std::lock_guard lock(st.mutex);
  auto result = host_ingest(batch, st.anchors, st.acked_through_seq, receipt_wall_ms);
  // Durable before acking.
  for (const auto& gap : result.gaps) store_.append_gap(gap);
  store_.append_presses(result.new_presses);
  st.acked_through_seq = result.ack.acked_through_seq;
  return result;
}

SyncAck SyncHost::ack_for(const std::string& device_id) const {
  auto& st = state_for(device_id);
  std::lock_guard lock(st.mutex);
  return SyncAck{st.acked_through_seq};
}

std::optional<ClockAnchor> SyncHost::anchor(const std::string& device_id,
                                            std::uint64_t boot_id) const {
  auto& st = state_for(device_id);
  std::lock_guard lock(st.mutex);
  if (auto it = st.anchors.find(boot_id); it != st.anchors.end()) return it->second;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// LinkSchedule

bool LinkSchedule::connected_at(Millis t) const {
  auto it = std::upper_bound(connected.begin(), connected.end(), t,
                             [](Millis v, const Interval& iv) { return v < iv.start; });
  if (it == connected.begin()) return false;
  --it;
  return t < it->end;
}

LinkSchedule LinkSchedule::always_connected(Millis from, Millis to, std::uint64_t seed) {
  LinkSchedule s;
  s.connected.push_back({from, to});
  s.seed = seed;
  return s;
}

LinkSchedule LinkSchedule::random_hourly(std::uint64_t seed, Millis from, Millis to,
                                         double p_disconnect, double drop_probability,
                                         Millis tail_ms) {
  LinkSchedule s;
  s.seed = seed;
  s.drop_probability = drop_probability;
  Rng rng(seed ^ 0x6c696e6b5f736368ULL);
  auto add = [&s](Millis a, Millis b) {
    if (!s.connected.empty() && s.connected.back().end == a) {
      s.connected.back().end = b;
    } else {
      s.connected.push_back({a, b});
    }
  };
  for (Millis t = from; t < to; t += kMillisPerHour) {
    if (!rng.bernoulli(p_disconnect)) add(t, std::min(t + kMillisPerHour, to));
  }
  add(to, to + tail_ms);
  return s;
}

// ---------------------------------------------------------------------------
// Session simulation

namespace {

constexpr Millis kNever = std::numeric_limits<Millis>::max();

struct BatchMsg {
  std::uint64_t epoch;
  std::uint64_t id;
  SyncBatch batch;
};

struct AckMsg {
  std::uint64_t epoch;
  std::uint64_t reply_to;  // 0 for the handshake reply
  SyncAck ack;
};

class Session {
 public:
  Session(ButtonDevice& device, SyncHost& host, const LinkSchedule& link,
          const SessionOptions& options)
      : device_(device), host_(host), link_(link), options_(options), rng_(link.seed) {}

  Transcript run(const DeviceScript& script, Millis until_ms) {
    std::size_t press_i = 0, reboot_i = 0;
    for (;;) {
      const Millis t_link = next_transition();
      const Millis t_batch = to_host_.empty() ? kNever : to_host_.begin()->first;
      const Millis t_ack = to_device_.empty() ? kNever : to_device_.begin()->first;
      const Millis t_press =
          press_i < script.press_times.size() ? script.press_times[press_i] : kNever;
      const Millis t_reboot =
          reboot_i < script.reboot_times.size() ? script.reboot_times[reboot_i] : kNever;
      const Millis t = std::min({t_link, t_batch, t_ack, t_press, t_reboot, timer_});
      if (t == kNever || t > until_ms) break;

      if (t == t_link) {
        on_transition(t);
      } else if (t == t_batch) {
        auto node = to_host_.extract(to_host_.begin());
        on_batch_arrival(t, node.mapped());
      } else if (t == t_ack) {
        auto node = to_device_.extract(to_device_.begin());
        on_ack_arrival(t, node.mapped());
      } else if (t == t_press) {
        const auto& p = device_.press(t);
        transcript_.true_time_of_seq[p.seq] = t;
        ++press_i;
        maybe_send(t);
      } else if (t == t_reboot) {
        device_.reboot(t);
        ++reboot_i;
        if (up_) {
          ++epoch_;
          awaiting_ = false;
          timer_ = kNever;
          handshake(t);
        }
      } else {
        timer_ = kNever;
        if (awaiting_ && up_) {
          awaiting_ = false;
          maybe_send(t);
        }
      }
    }
    return std::move(transcript_);
  }

 private:
  Millis next_transition() const {
    if (window_ >= link_.connected.size()) return kNever;
    return up_ ? link_.connected[window_].end : link_.connected[window_].start;
  }

  void on_transition(Millis t) {
    if (!up_) {
      up_ = true;
      ++epoch_;
      handshake(t);
    } else {
      up_ = false;
      ++window_;
      ++epoch_;
      awaiting_ = false;
      timer_ = kNever;
    }
  }

  void handshake(Millis t) {
    ++transcript_.connections;
    const Hello hello = device_.hello(t);
    record(t, "D>H", encode(hello));
    send_ack(t, host_.on_hello(hello, t), 0);
    maybe_send(t);
  }

  // Returns the arrival time, or nullopt when the message is lost.
  std::optional<Millis> transmit(Millis t, double drop_probability) {
    const bool dropped = rng_.bernoulli(drop_probability);
    const Millis latency = rng_.uniform_int(link_.latency_min_ms, link_.latency_max_ms);
    if (dropped) {
      ++transcript_.messages_dropped;
      return std::nullopt;
    }
    return t + latency;
  }

  void send_ack(Millis t, const SyncAck& ack, std::uint64_t reply_to) {
    ++transcript_.acks_sent;
    record(t, "H>D", encode(ack));
    if (auto arrival = transmit(t, link_.ack_drop_probability.value_or(link_.drop_probability)))
      to_device_.emplace(*arrival, AckMsg{epoch_, reply_to, ack});
  }

  void maybe_send(Millis t) {
    if (!up_ || awaiting_ || device_.buffer().empty()) return;
    auto batch = device_.drain_batch(options_.max_batch);
    const std::uint64_t id = next_msg_id_++;
    ++transcript_.batches_sent;
    record(t, "D>H", encode(batch));
    if (auto arrival = transmit(t, link_.drop_probability))
      to_host_.emplace(*arrival, BatchMsg{epoch_, id, std::move(batch)});
    awaiting_ = true;
    awaiting_id_ = id;
    timer_ = t + options_.retransmit_timeout_ms;
  }

  bool still_live(std::uint64_t epoch) {
    if (up_ && epoch == epoch_) return true;
    ++transcript_.messages_dropped;
    return false;
  }

  void on_batch_arrival(Millis t, const BatchMsg& msg) {
    if (!still_live(msg.epoch)) return;
    ++transcript_.batches_delivered;
    for (const auto& e : msg.batch.events) transcript_.delivered_seqs.insert(e.seq);
    const auto result = host_.ingest(msg.batch, t);
    transcript_.presses_stored += result.new_presses.size();
    send_ack(t, result.ack, msg.id);
  }

  void on_ack_arrival(Millis t, const AckMsg& msg) {
    if (!still_live(msg.epoch)) return;
    ++transcript_.acks_delivered;
    device_.apply_ack(msg.ack);
    if (awaiting_ && msg.reply_to == awaiting_id_) {
      awaiting_ = false;
      timer_ = kNever;
    }
    maybe_send(t);
  }

  void record(Millis t, const char* direction, const std::string& json) {
    if (!options_.record_messages) return;
    transcript_.messages.push_back(std::to_string(t) + " " + direction + " " + json);
  }

  ButtonDevice& device_;
  SyncHost& host_;
  const LinkSchedule& link_;
  const SessionOptions& options_;
  Rng rng_;
  Transcript transcript_;

  std::size_t window_ = 0;
  bool up_ = false;
  std::uint64_t epoch_ = 0;
  std::multimap<Millis, BatchMsg> to_host_;
  std::multimap<Millis, AckMsg> to_device_;
  bool awaiting_ = false;
  std::uint64_t awaiting_id_ = 0;
  std::uint64_t next_msg_id_ = 1;
  Millis timer_ = kNever;
};

}  // namespace

Transcript run_session(ButtonDevice& device, SyncHost& host, const LinkSchedule& link,
                       const DeviceScript& script, Millis until_ms, const SessionOptions& options) {
  Session session(device, host, link, options);
  return session.run(script, until_ms);
}

}  // namespace selftrack
