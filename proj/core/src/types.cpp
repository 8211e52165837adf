#include "dualfeed/types.hpp"

namespace dualfeed {

std::ostream& operator<<(std::ostream& os, NodeId id) {
  if (id == kSourceId) return os << 'S';
  return os << id.value;
}

std::string_view to_string(FeedId f) { return f == FeedId::F1 ? "F1" : "F2"; }

std::optional<FeedId> parse_feed(std::string_view text) {
  if (text == "F1" || text == "f1" || text == "f-1") return FeedId::F1;
  if (text == "F2" || text == "f2" || text == "f-2") return FeedId::F2;
  return std::nullopt;
}

std::ostream& operator<<(std::ostream& os, FeedId f) { return os << to_string(f); }

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::Hold:
      return "HOLD";
    case Strategy::Unpublish:
      return "UNPUBLISH";
    case Strategy::Ine:
      return "INE";
  }
  return "?";
}

std::optional<Strategy> parse_strategy(std::string_view text) {
  if (text == "HOLD") return Strategy::Hold;
  if (text == "UNPUBLISH") return Strategy::Unpublish;
  if (text == "INE") return Strategy::Ine;
  return std::nullopt;
}

}  // namespace dualfeed
