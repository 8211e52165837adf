#include <algorithm>
#include <random>

#include "doctest.h"
#include "dualfeed/playout_buffer.hpp"

using namespace dualfeed;

namespace {

// Fast feed delivers seq t + 70 at tick t, the slow one trails by `lead`.
// Both start at seq 40.
PlayoutBuffer steady(Tick until, PacketSeq lead = 4, std::uint32_t lag = 1) {
  PlayoutBuffer buf(lag);
  for (Tick t = -30; t <= until; ++t) {
    buf.insert(t + 70, FeedId::F1);
    if (t + 70 - lead >= 40) buf.insert(t + 70 - lead, FeedId::F2);
    buf.tick();
  }
  return buf;
}

}  // namespace

TEST_SUITE("playout") {

TEST_CASE("waits for both feeds and the lag") {
  PlayoutBuffer buf(1);
  buf.insert(10, FeedId::F1);
  buf.insert(11, FeedId::F1);
  CHECK(buf.tick().kind == PlayoutResult::Kind::Waiting);
  buf.insert(10, FeedId::F2);
  CHECK(buf.tick().kind == PlayoutResult::Kind::Waiting);
  buf.insert(11, FeedId::F2);
  buf.insert(12, FeedId::F1);
  const PlayoutResult r = buf.tick();
  CHECK(r.kind == PlayoutResult::Kind::Played);
  CHECK(r.seq == 10);
  CHECK(buf.started());
}

TEST_CASE("t=0 state plays the slow head next") {
  PlayoutBuffer buf = steady(0);
  CHECK(buf.head(FeedId::F1) == PacketSeq{70});
  CHECK(buf.head(FeedId::F2) == PacketSeq{66});
  CHECK(buf.last_played() == PacketSeq{65});
  REQUIRE(buf.play_next() == 66);
  const PlayoutResult r = buf.tick();
  CHECK(r.kind == PlayoutResult::Kind::Played);
  CHECK(r.seq == 66);
  CHECK(buf.stored() == std::vector<PacketSeq>{67, 68, 69, 70});
}

TEST_CASE("five ticks from the t=-5 state") {
  PlayoutBuffer buf = steady(-5);
  CHECK(buf.last_played() == PacketSeq{60});
  for (Tick t = -4; t <= 0; ++t) {
    buf.insert(t + 70, FeedId::F1);
    buf.insert(t + 66, FeedId::F2);
    const PlayoutResult r = buf.tick();
    CHECK(r.kind == PlayoutResult::Kind::Played);
    CHECK(r.seq == t + 65);
  }
}

TEST_CASE("duplicates and late packets") {
  PlayoutBuffer buf = steady(0);
  CHECK(buf.insert(68, FeedId::F2) == InsertOutcome::Duplicate);
  CHECK(buf.insert(60, FeedId::F2) == InsertOutcome::Late);
  CHECK(buf.insert(71, FeedId::F1) == InsertOutcome::Stored);
  CHECK(buf.occupancy() == 6);
}

TEST_CASE("underrun leaves the pointer in place") {
  PlayoutBuffer buf(1);
  buf.insert(0, FeedId::F1);
  buf.insert(0, FeedId::F2);
  buf.insert(1, FeedId::F2);
  buf.insert(1, FeedId::F1);
  REQUIRE(buf.tick().kind == PlayoutResult::Kind::Played);
  REQUIRE(buf.tick().kind == PlayoutResult::Kind::Played);
  const PlayoutResult r = buf.tick();
  CHECK(r.kind == PlayoutResult::Kind::Underrun);
  CHECK(r.seq == 2);
  CHECK(buf.play_next() == 2);
  CHECK(buf.underruns() == 1);
  buf.insert(2, FeedId::F2);
  CHECK(buf.tick().seq == 2);
}

TEST_CASE("does not start ahead of a hole") {
  PlayoutBuffer buf(1);
  // F1 is missing 5; the slow F2 has only reached 4.
  for (PacketSeq s : {3, 4, 6, 7}) buf.insert(s, FeedId::F1);
  buf.insert(3, FeedId::F2);
  buf.insert(4, FeedId::F2);
  CHECK(buf.tick().kind == PlayoutResult::Kind::Waiting);
  buf.insert(5, FeedId::F2);
  const PlayoutResult r = buf.tick();
  CHECK(r.kind == PlayoutResult::Kind::Played);
  CHECK(r.seq == 4);
}

TEST_CASE("zero lag is rejected") { CHECK_THROWS_AS(PlayoutBuffer(0), std::invalid_argument); }

TEST_CASE("played sequence increases by one without repeats") {
  std::mt19937_64 rng(11);
  for (int run = 0; run < 50; ++run) {
    const std::uint32_t lag = 1 + static_cast<std::uint32_t>(rng() % 6);
    PlayoutBuffer buf(lag);
    const PacketSeq lead = static_cast<PacketSeq>(rng() % 8);
    std::optional<PacketSeq> prev;
    for (PacketSeq t = 0; t < 400; ++t) {
      // Each feed drops packets now and then and may deliver out of order.
      if (rng() % 10 != 0) buf.insert(t, FeedId::F1);
      if (t >= lead && rng() % 10 != 0) buf.insert(t - lead, FeedId::F2);
      if (rng() % 20 == 0) buf.insert(t - static_cast<PacketSeq>(rng() % 12), FeedId::F2);
      const PlayoutResult r = buf.tick();
      if (r.kind != PlayoutResult::Kind::Played) continue;
      if (prev) REQUIRE(r.seq == *prev + 1);
      prev = r.seq;
    }
  }
}

}  // TEST_SUITE
