#pragma once

#include <map>

#include "cobweb/types.hpp"

namespace cobweb {

// One training or test example: an anchor word plus weighted context words.
// Context weights decay with the number of tokens sitting between the word
// and the anchor (weight 1/(d+1)); repeated words accumulate their weights.
// The anchor slot holds a single word with weight 1, or is empty for a
// masked test instance.
struct Instance {
  std::array<std::map<WordId, double>, kAttrCount> values;

  std::map<WordId, double>& at(Attr a) { return values[static_cast<std::size_t>(a)]; }
  const std::map<WordId, double>& at(Attr a) const {
    return values[static_cast<std::size_t>(a)];
  }

  bool has(Attr a) const { return !at(a).empty(); }

  bool empty() const {
    for (const auto& m : values)
      if (!m.empty()) return false;
    return true;
  }

  void add(Attr a, WordId w, double weight) { at(a)[w] += weight; }

  void set_anchor(WordId w) {
    at(Attr::anchor).clear();
    at(Attr::anchor)[w] = 1.0;
  }
};

}  // namespace cobweb
