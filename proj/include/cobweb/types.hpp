#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace cobweb {

using WordId = std::uint32_t;
using NodeId = std::uint32_t;

inline constexpr NodeId kNoNode = static_cast<NodeId>(-1);

// The three slots an instance can fill: the word itself plus the words
// observed on either side of it.
enum class Attr : std::uint8_t { anchor = 0, context_before = 1, context_after = 2 };

inline constexpr std::size_t kAttrCount = 3;

inline constexpr std::array<Attr, kAttrCount> kAllAttrs = {
    Attr::anchor, Attr::context_before, Attr::context_after};

inline const char* attr_name(Attr a) {
  switch (a) {
    case Attr::anchor: return "anchor";
    case Attr::context_before: return "context-before";
    case Attr::context_after: return "context-after";
  }
  return "?";
}

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace cobweb
