#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "dualfeed/types.hpp"

namespace dualfeed {

enum class InsertOutcome : std::uint8_t { Stored, Duplicate, Late };

struct PlayoutResult {
  enum class Kind : std::uint8_t { Played, Underrun, Waiting };
  Kind kind = Kind::Waiting;
  PacketSeq seq = 0;
};

/// Single deduplicating buffer fed by both feeds; the player drains it one
/// packet per tick.
///
/// Playout starts on the first tick at which both feeds have delivered and the
/// slower feed's head is `playout_lag` packets past the first packet kept,
/// with nothing missing from there up to the faster head; the play pointer
/// then starts `playout_lag` behind the slower head and
/// advances by one per successful tick. A missing packet is an underrun and
/// the pointer stays put.
class PlayoutBuffer {
 public:
  explicit PlayoutBuffer(std::uint32_t playout_lag = 1);

  InsertOutcome insert(PacketSeq seq, FeedId via);
  PlayoutResult tick();

  bool started() const { return started_; }
  /// Next sequence to hand to the player (lowest retained sequence before start).
  PacketSeq play_next() const { return base_; }
  std::optional<PacketSeq> head(FeedId feed) const { return heads_[slot(feed)]; }
  bool contains(PacketSeq seq) const;
  std::vector<PacketSeq> stored() const;
  std::size_t occupancy() const { return count_; }
  std::size_t max_occupancy() const { return max_occupancy_; }
  std::uint64_t underruns() const { return underruns_; }
  std::uint64_t played() const { return played_; }
  std::optional<PacketSeq> last_played() const { return last_played_; }
  std::uint32_t playout_lag() const { return lag_; }

 private:
  static constexpr std::size_t kMaxPreroll = 4096;

  std::size_t index(PacketSeq seq) const { return static_cast<std::size_t>(seq) & (bits_.size() - 1); }
  void grow_to(std::size_t span);
  void drop_front();
  bool try_start();

  std::uint32_t lag_;
  bool started_ = false;
  bool has_base_ = false;
  PacketSeq base_ = 0;
  std::vector<std::uint8_t> bits_;
  std::size_t count_ = 0;
  std::size_t max_occupancy_ = 0;
  std::uint64_t underruns_ = 0;
  std::uint64_t played_ = 0;
  std::optional<PacketSeq> last_played_;
  std::array<std::optional<PacketSeq>, 2> heads_;
};

}  // namespace dualfeed
