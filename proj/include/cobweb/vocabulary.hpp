#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cobweb/types.hpp"

namespace cobweb {

// Token <-> dense id table. Ids are assigned in insertion order and never
// change, so they double as stable serialization indices.
class Vocabulary {
 public:
  WordId intern(const std::string& token) {
    auto it = ids_.find(token);
    if (it != ids_.end()) return it->second;
    WordId id = static_cast<WordId>(tokens_.size());
    tokens_.push_back(token);
    ids_.emplace(token, id);
    return id;
  }

  std::optional<WordId> find(const std::string& token) const {
    auto it = ids_.find(token);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

  bool contains(WordId id) const { return id < tokens_.size(); }

  const std::string& token(WordId id) const {
    if (id >= tokens_.size()) throw Error("unknown word id " + std::to_string(id));
    return tokens_[id];
  }

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, WordId> ids_;
};

}  // namespace cobweb
