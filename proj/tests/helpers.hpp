#pragma once

// Shared builders for tests: small vocabularies, instances, and trees
// assembled through the public mutation primitives.

#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "cobweb/concept_tree.hpp"

namespace testutil {

using cobweb::Attr;
using cobweb::ConceptTree;
using cobweb::Instance;
using cobweb::NodeId;
using cobweb::TreeConfig;
using cobweb::Vocabulary;
using cobweb::WordId;

inline Vocabulary make_vocab(std::size_t n) {
  Vocabulary v;
  for (std::size_t i = 0; i < n; ++i) v.intern("w" + std::to_string(i));
  return v;
}

struct WordWeight {
  Attr attr;
  WordId word;
  double weight;
};

inline Instance make_instance(std::initializer_list<WordWeight> words) {
  Instance inst;
  for (const WordWeight& ww : words) inst.add(ww.attr, ww.word, ww.weight);
  return inst;
}

inline Instance anchor_only(WordId w) {
  Instance inst;
  inst.set_anchor(w);
  return inst;
}

// Root plus one leaf child per instance, counts flowing root -> leaf the way
// learning does.
inline std::vector<NodeId> add_leaves(ConceptTree& tree,
                                      const std::vector<Instance>& insts) {
  std::vector<NodeId> leaves;
  for (const Instance& inst : insts) {
    tree.incorporate_counts(tree.root_id(), inst);
    NodeId leaf = tree.create_child(tree.root_id());
    tree.incorporate_counts(leaf, inst);
    leaves.push_back(leaf);
  }
  return leaves;
}

}  // namespace testutil
