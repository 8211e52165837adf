#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string_view>

namespace dualfeed {

/// Simulation time in integer ticks. One media packet leaves the source per
/// tick on each feed.
using Tick = std::int64_t;

inline constexpr Tick kNever = std::numeric_limits<Tick>::min();

/// Media packet sequence number. Both feeds carry the same sequence.
using PacketSeq = std::int64_t;

struct NodeId {
  std::uint32_t value = 0;

  constexpr auto operator<=>(const NodeId&) const = default;
};

inline constexpr NodeId kSourceId{0};

std::ostream& operator<<(std::ostream& os, NodeId id);

/// The two identical copies of the stream, each distributed over its own tree.
enum class FeedId : std::uint8_t { F1 = 0, F2 = 1 };

inline constexpr std::array<FeedId, 2> kFeeds{FeedId::F1, FeedId::F2};

constexpr FeedId other(FeedId f) { return f == FeedId::F1 ? FeedId::F2 : FeedId::F1; }
constexpr std::size_t slot(FeedId f) { return static_cast<std::size_t>(f); }

std::string_view to_string(FeedId f);
std::optional<FeedId> parse_feed(std::string_view text);
std::ostream& operator<<(std::ostream& os, FeedId f);

/// Recovery policy applied to an orphaned subtree after its parent fails.
enum class Strategy : std::uint8_t {
  Hold,       // subtree refuses feed requests for the transition window
  Unpublish,  // subtree withdraws its advertisements until re-fed
  Ine,        // subtree advertisements tagged ineligible for the window
};

std::string_view to_string(Strategy s);
std::optional<Strategy> parse_strategy(std::string_view text);

}  // namespace dualfeed

template <>
struct std::hash<dualfeed::NodeId> {
  std::size_t operator()(dualfeed::NodeId id) const noexcept {
    return std::hash<std::uint32_t>{}(id.value);
  }
};
