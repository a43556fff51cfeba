#include "doctest.h"
#include "selftrack/wire.hpp"

using namespace selftrack;

TEST_CASE("messages encode as one snake_case object per line") {
  CHECK(encode(Hello{"b1", 2, 3600000, 4, false}) ==
        R"({"device_id":"b1","boot_id":2,"uptime_now_ms":3600000,"buffered_count":4,"overflowed":false})");
  CHECK(encode(SyncBatch{"b1", {{5, 0, 100}, {6, 1, 7}}}) ==
        R"({"device_id":"b1","events":[{"seq":5,"boot_id":0,"uptime_ms":100},{"seq":6,"boot_id":1,"uptime_ms":7}]})");
  CHECK(encode(SyncAck{7}) == R"({"acked_through_seq":7})");
  CHECK(encode(SyncAck{}) == R"({"acked_through_seq":-1})");
}

TEST_CASE("decode is the inverse of encode for random messages") {
  Rng rng(11);
  for (int i = 0; i < 300; ++i) {
    std::vector<WireMessage> msgs;
    msgs.push_back(Hello{"dev-" + std::to_string(rng.uniform_int(0, 99)),
                         static_cast<std::uint64_t>(rng.uniform_int(0, 9)), rng.uniform_int(0, 1'000'000'000),
                         static_cast<std::uint64_t>(rng.uniform_int(0, 4096)), rng.bernoulli(0.5)});
    SyncBatch b{"dev", {}};
    std::uint32_t seq = static_cast<std::uint32_t>(rng.uniform_int(0, 1000));
    for (int k = rng.uniform_int(0, 5); k > 0; --k)
      b.events.push_back({seq++, static_cast<std::uint64_t>(rng.uniform_int(0, 3)), rng.uniform_int(0, 1 << 30)});
    msgs.push_back(b);
    msgs.push_back(SyncAck{rng.uniform_int(-1, 100000)});
    std::string body;
    for (const auto& m : msgs) body += encode(m) + "\n";
    CHECK(decode_messages(body) == msgs);
  }
}

TEST_CASE("decode rejects unknown or partial field sets") {
  CHECK_THROWS_AS(decode_message(R"({"acked_through_seq":1,"extra":2})"), ParseError);
  CHECK_THROWS_AS(decode_message(R"({"device_id":"x"})"), ParseError);
  CHECK_THROWS_AS(decode_message(R"({"device_id":"x","events":[{"seq":1}]})"), ParseError);
  CHECK_THROWS_AS(decode_message(R"({"acked_through_seq":"one"})"), ParseError);
  CHECK_THROWS_AS(decode_message("not json"), ParseError);
  CHECK(decode_messages("\n\r\n").empty());
}
