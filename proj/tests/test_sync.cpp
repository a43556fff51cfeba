#include <algorithm>
#include <set>
#include <thread>

#include "doctest.h"
#include "selftrack/sync.hpp"

using namespace selftrack;

namespace {

constexpr Millis kTen = 10 * kMillisPerHour;

SyncBatch batch_of(const std::string& id, std::initializer_list<std::uint32_t> seqs) {
  SyncBatch b{id, {}};
  for (auto s : seqs) b.events.push_back({s, 0, static_cast<Millis>(s) * 1000});
  return b;
}

}  // namespace

TEST_CASE("map_to_wall") {
  const ClockAnchor anchor{0, kTen, 3'600'000};
  // One minute before the handshake uptime is one minute before 10:00.
  CHECK(map_to_wall(anchor, 3'540'000) ==
        MappedTime{kTen - 60'000, Quality::anchored});
  CHECK(map_to_wall(anchor, 3'600'000).t_utc_ms == kTen);

  AnchorTable anchors{{1, ClockAnchor{1, kTen, 500}}};
  CHECK(map_to_wall(anchors, 1, 400, 0) == MappedTime{kTen - 100, Quality::anchored});
  // No anchor for boot 0: fall back to the receipt time.
  CHECK(map_to_wall(anchors, 0, 400, 777) == MappedTime{777, Quality::receipt});
}

TEST_CASE("host_ingest skips what is already acked") {
  const auto first = host_ingest(batch_of("d", {0, 1, 2, 3, 4}), {}, kNothingAcked, 0);
  CHECK(first.new_presses.size() == 5);
  CHECK(first.ack.acked_through_seq == 4);

  const auto resent = host_ingest(batch_of("d", {0, 1, 2, 3, 4}), {}, 4, 0);
  CHECK(resent.new_presses.empty());
  CHECK(resent.ack.acked_through_seq == 4);
  CHECK(resent.gaps.empty());

  const auto overlapping = host_ingest(batch_of("d", {3, 4, 5, 6, 7}), {}, 4, 0);
  REQUIRE(overlapping.new_presses.size() == 3);
  CHECK(overlapping.new_presses.front().seq == 5);
  CHECK(overlapping.ack.acked_through_seq == 7);
}

TEST_CASE("host_ingest records a hole as an overflow gap") {
  const auto r = host_ingest(batch_of("d", {9, 10}), {}, 4, 1234);
  CHECK(r.new_presses.size() == 2);
  CHECK(r.ack.acked_through_seq == 10);
  REQUIRE(r.gaps.size() == 1);
  CHECK(r.gaps[0] == OverflowGap{"d", 5, 8, 1234});

  // Replay a device that produces that hole: 0..4 acked, then 5..10 pressed
  // into a two-slot buffer while offline.
  ButtonDevice small("d", 0, 0, 2);
  for (int i = 0; i < 11; ++i) small.press(100 * (i + 1));
  small.apply_ack(SyncAck{4});
  const auto replay = host_ingest(small.drain_batch(64), {}, 4, 1234);
  std::vector<std::uint32_t> lost;
  for (auto s : small.evicted())
    if (s > 4) lost.push_back(s);
  REQUIRE(replay.gaps.size() == 1);
  CHECK(lost.front() == replay.gaps[0].first_seq);
  CHECK(lost.back() == replay.gaps[0].last_seq);
  CHECK(lost.size() == replay.gaps[0].last_seq - replay.gaps[0].first_seq + 1);
}

TEST_CASE("host_ingest rejects unordered batches") {
  CHECK_THROWS_AS(host_ingest(batch_of("d", {3, 2}), {}, kNothingAcked, 0), MalformedBatch);
  CHECK_THROWS_AS(host_ingest(batch_of("d", {3, 3}), {}, kNothingAcked, 0), MalformedBatch);
}

TEST_CASE("SyncHost rebuilds its ack from the store") {
  EventStore store;
  {
    SyncHost host(store);
    host.on_hello(Hello{"d", 0, 10'000, 3, false}, 50'000);
    host.ingest(batch_of("d", {0, 1, 2}), 50'100);
    CHECK(host.ack_for("d").acked_through_seq == 2);
    CHECK(host.anchor("d", 0)->host_wall_ms == 50'000);
  }
  SyncHost again(store);
  CHECK(again.ack_for("d").acked_through_seq == 2);
  CHECK(again.ack_for("other").acked_through_seq == kNothingAcked);
  CHECK(again.ingest(batch_of("d", {1, 2}), 0).new_presses.empty());
  CHECK(store.press_count() == 3);
}

TEST_CASE("always-connected session delivers everything once") {
  EventStore store;
  SyncHost host(store);
  ButtonDevice dev("d", 0, 0);
  const auto link = LinkSchedule::always_connected(0, 100'000);
  const auto tr = run_session(dev, host, link, {{1000, 1500, 2000}, {}}, 100'000);
  CHECK(store.press_count() == 3);
  CHECK(dev.buffer().empty());
  CHECK(tr.presses_stored == 3);
  for (const auto& p : store.presses()) {
    CHECK(p.quality == Quality::anchored);
    CHECK(p.t_utc_ms == tr.true_time_of_seq.at(p.seq));
  }
}

TEST_CASE("lost acks cause retransmission but no duplicates") {
  EventStore store;
  SyncHost host(store);
  ButtonDevice dev("d", 0, 0);
  auto link = LinkSchedule::always_connected(0, 60'000);
  link.ack_drop_probability = 1.0;
  const auto tr = run_session(dev, host, link, {{1000, 1500, 2000}, {}}, 60'000);
  CHECK(tr.batches_sent > 1);
  CHECK(tr.acks_delivered == 0);
  CHECK(store.press_count() == 3);
  CHECK(dev.buffer().size() == 3);
  CHECK(host.ack_for("d").acked_through_seq == 2);
}

TEST_CASE("presses from a boot never anchored fall back to receipt time") {
  EventStore store;
  SyncHost host(store);
  ButtonDevice dev("d", 0, 0);
  // The link first comes up after the reboot, so boot 0 has no anchor.
  LinkSchedule link;
  link.connected.push_back({20'000, 40'000});
  const auto tr = run_session(dev, host, link, {{1000, 2000, 12'000}, {10'000}}, 40'000);
  const auto presses = store.presses();
  REQUIRE(presses.size() == 3);
  for (const auto& p : presses) {
    if (p.boot_id == 0) {
      CHECK(p.quality == Quality::receipt);
      CHECK(p.t_utc_ms >= 20'000);
    } else {
      CHECK(p.quality == Quality::anchored);
      CHECK(p.t_utc_ms == tr.true_time_of_seq.at(p.seq));
    }
  }
}

TEST_CASE("random schedules store exactly the undelivered-loss complement") {
  Rng rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const auto seed = rng.next();
    EventStore store;
    SyncHost host(store);
    const auto capacity = static_cast<std::size_t>(rng.uniform_int(4, 64));
    ButtonDevice dev("d", static_cast<int>(rng.uniform_int(-200, 200)), 0, capacity);
    DeviceScript script;
    Millis t = 0;
    const Millis horizon = 5 * kMillisPerDay;
    while ((t += rng.uniform_int(1000, 4 * kMillisPerHour)) < horizon)
      script.press_times.push_back(t);
    if (rng.bernoulli(0.5)) script.reboot_times.push_back(horizon / 2);
    const auto link = LinkSchedule::random_hourly(seed, 0, horizon, 0.3, 0.1);
    SessionOptions opt;
    opt.record_messages = true;
    const auto tr = run_session(dev, host, link, script, horizon + kMillisPerHour, opt);

    std::set<std::uint32_t> lost;
    for (auto s : dev.evicted())
      if (!tr.delivered_seqs.count(s)) lost.insert(s);
    std::set<std::uint32_t> stored;
    for (const auto& p : store.presses()) CHECK(stored.insert(p.seq).second);
    CHECK(dev.buffer().empty());
    CHECK(stored.size() + lost.size() == script.press_times.size());
    for (auto s : lost) CHECK_FALSE(stored.count(s));

    std::set<std::uint32_t> gap_seqs;
    for (const auto& g : store.overflow_gaps())
      for (auto s = g.first_seq; s <= g.last_seq; ++s) gap_seqs.insert(s);
    CHECK(gap_seqs == lost);

    // Acks the host sends never go backwards.
    std::int64_t last_ack = kNothingAcked;
    for (const auto& line : tr.messages) {
      if (line.find(" H>D ") == std::string::npos) continue;
      const auto msg = decode_message(line.substr(line.find('{')));
      const auto ack = std::get<SyncAck>(msg).acked_through_seq;
      CHECK(ack >= last_ack);
      last_ack = ack;
    }
  }
}

TEST_CASE("concurrent ingestion keeps one row per seq") {
  EventStore store;
  SyncHost host(store);
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&host, i] {
      const std::string id = "dev" + std::to_string(i % 2);
      for (std::uint32_t start = 0; start < 200; start += 10) {
        SyncBatch b{id, {}};
        for (std::uint32_t s = start; s < start + 20; ++s) b.events.push_back({s, 0, 0});
        host.ingest(b, 0);
      }
    });
  }
  for (auto& th : threads) th.join();
  CHECK(store.press_count() == 2 * 210);
  CHECK(host.ack_for("dev0").acked_through_seq == 209);
  CHECK(store.overflow_gaps().empty());
}
