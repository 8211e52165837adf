#include "dualfeed/playout_buffer.hpp"

#include <algorithm>
#include <stdexcept>

namespace dualfeed {

PlayoutBuffer::PlayoutBuffer(std::uint32_t playout_lag) : lag_(playout_lag), bits_(16, 0) {
  if (playout_lag == 0) throw std::invalid_argument("playout_lag must be at least 1");
}

bool PlayoutBuffer::contains(PacketSeq seq) const {
  if (!has_base_ || seq < base_) return false;
  if (static_cast<std::size_t>(seq - base_) >= bits_.size()) return false;
  return bits_[index(seq)] != 0;
}

std::vector<PacketSeq> PlayoutBuffer::stored() const {
  std::vector<PacketSeq> out;
  if (!has_base_) return out;
  out.reserve(count_);
  for (std::size_t off = 0; off < bits_.size() && out.size() < count_; ++off) {
    const PacketSeq seq = base_ + static_cast<PacketSeq>(off);
    if (bits_[index(seq)]) out.push_back(seq);
  }
  return out;
}

void PlayoutBuffer::grow_to(std::size_t span) {
  std::size_t size = bits_.size();
  while (size < span) size *= 2;
  if (size == bits_.size()) return;
  std::vector<std::uint8_t> next(size, 0);
  for (std::size_t off = 0; off < bits_.size(); ++off) {
    const PacketSeq seq = base_ + static_cast<PacketSeq>(off);
    next[static_cast<std::size_t>(seq) & (size - 1)] = bits_[index(seq)];
  }
  bits_ = std::move(next);
}

void PlayoutBuffer::drop_front() {
  auto& bit = bits_[index(base_)];
  if (bit) {
    bit = 0;
    --count_;
  }
  ++base_;
}

InsertOutcome PlayoutBuffer::insert(PacketSeq seq, FeedId via) {
  auto& head = heads_[slot(via)];
  if (!head || seq > *head) head = seq;

  if (!has_base_) {
    has_base_ = true;
    base_ = seq;
  }
  if (seq < base_) return InsertOutcome::Late;

  std::size_t offset = static_cast<std::size_t>(seq - base_);
  if (!started_ && offset >= kMaxPreroll) {
    // Pre-roll only needs the recent window; slide it forward.
    while (static_cast<std::size_t>(seq - base_) >= kMaxPreroll) drop_front();
    offset = static_cast<std::size_t>(seq - base_);
  }
  if (offset >= bits_.size()) grow_to(offset + 1);

  auto& bit = bits_[index(seq)];
  if (bit) return InsertOutcome::Duplicate;
  bit = 1;
  ++count_;
  if (started_) max_occupancy_ = std::max(max_occupancy_, count_);
  return InsertOutcome::Stored;
}

bool PlayoutBuffer::try_start() {
  if (!heads_[0] || !heads_[1]) return false;
  const PacketSeq slow_head = std::min(*heads_[0], *heads_[1]);
  const PacketSeq fast_head = std::max(*heads_[0], *heads_[1]);
  const PacketSeq first = slow_head - static_cast<PacketSeq>(lag_);
  if (first < base_) return false;
  // A hole ahead of the start point that neither feed can still fill would
  // stall playout for good, so wait until it falls behind.
  for (PacketSeq s = first; s <= fast_head; ++s) {
    if (!contains(s)) return false;
  }
  while (base_ < first) drop_front();
  started_ = true;
  max_occupancy_ = std::max(max_occupancy_, count_);
  return true;
}

PlayoutResult PlayoutBuffer::tick() {
  if (!started_ && !try_start()) return {PlayoutResult::Kind::Waiting, base_};
  if (!contains(base_)) {
    ++underruns_;
    return {PlayoutResult::Kind::Underrun, base_};
  }
  const PacketSeq seq = base_;
  drop_front();
  ++played_;
  last_played_ = seq;
  return {PlayoutResult::Kind::Played, seq};
}

}  // namespace dualfeed
