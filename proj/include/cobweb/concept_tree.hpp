#pragma once

#include <cstdint>
#include <map>
#include <unordered_map>
#include <vector>

#include "cobweb/config.hpp"
#include "cobweb/instance.hpp"
#include "cobweb/vocabulary.hpp"

namespace cobweb {

// Per-attribute weighted word tallies plus running aggregates that make
// entropy and squared-probability mass O(1) to read. The aggregates are
// maintained on every tally write and can be rebuilt from the tallies in
// sorted order (refresh), which is what load-time reconstruction does.
struct AttrStats {
  std::map<WordId, double> tallies;
  double total = 0.0;       // sum of tallies
  double sum_nlogn = 0.0;   // sum of t * ln(t)
  double sum_sq = 0.0;      // sum of t * t
  std::int64_t presence = 0;  // instances that carried this attribute

  void add_word(WordId w, double weight);
  void refresh();

  std::size_t distinct() const { return tallies.size(); }
  double tally(WordId w) const {
    auto it = tallies.find(w);
    return it == tallies.end() ? 0.0 : it->second;
  }
};

struct ConceptNode {
  NodeId id = kNoNode;
  NodeId parent = kNoNode;
  std::vector<NodeId> children;
  std::int64_t count = 0;  // instances stored at or below this node
  std::array<AttrStats, kAttrCount> attrs;

  bool is_leaf() const { return children.empty(); }
  AttrStats& attr(Attr a) { return attrs[static_cast<std::size_t>(a)]; }
  const AttrStats& attr(Attr a) const { return attrs[static_cast<std::size_t>(a)]; }
};

// Entropy of the unsmoothed word distribution held in `s`: zero when fewer
// than two distinct words carry mass, otherwise ln(N) - sum(t ln t)/N.
double attr_entropy(const AttrStats& s);

// Sum over words of squared unsmoothed probability; zero for an empty slot.
double attr_sq_prob_mass(const AttrStats& s);

// A probabilistic concept hierarchy over word/context instances. Nodes are
// addressed by stable ids; parent/child links are id-based so the whole tree
// is plainly copyable, which the hypothetical-edit test oracles rely on.
class ConceptTree {
 public:
  ConceptTree() : ConceptTree(TreeConfig{}, Vocabulary{}) {}
  ConceptTree(TreeConfig cfg, Vocabulary vocab);

  const TreeConfig& config() const { return cfg_; }
  const Vocabulary& vocabulary() const { return vocab_; }

  NodeId root_id() const { return root_; }
  std::size_t node_count() const { return nodes_.size(); }
  bool has_node(NodeId id) const { return nodes_.count(id) != 0; }
  const ConceptNode& node(NodeId id) const;
  ConceptNode& node_mut(NodeId id);

  // True until the first instance is incorporated anywhere.
  bool empty() const;

  // Distinct words ever observed under `a` (read off the root tallies);
  // this is the smoothing support size for that attribute.
  std::size_t attr_vocab_size(Attr a) const {
    return node(root_).attr(a).distinct();
  }

  // --- probabilities and utilities ------------------------------------

  // P(node | its parent): instance_count ratio; 1 for the root.
  double node_prob(NodeId id) const;

  // P(word | node, attr). Unsmoothed: tally / attr total (0 when the slot is
  // empty). Smoothed: (tally + alpha) / (total + alpha * V_a) with V_a the
  // attribute vocabulary size at the root.
  double attr_word_prob(NodeId id, Attr a, WordId w, bool smoothed) const;

  double attribute_entropy(NodeId id, Attr a) const;

  // Expected entropy across attributes, each weighted by how often the
  // attribute is present in the node's instances.
  double node_uncertainty(NodeId id) const;

  // Entropy-based category utility relative to the parent.
  double cu_info(NodeId id) const;

  // Squared-probability category utility relative to the parent.
  double cu_probabilistic(NodeId id) const;

  // Whichever variant the tree is configured with.
  double category_utility(NodeId id) const;

  // --- mutation primitives ---------------------------------------------

  // Adds the instance's weighted words into the node (tallies, attribute
  // presence, instance_count). Errors on unknown node or out-of-vocabulary
  // word ids.
  void incorporate_counts(NodeId id, const Instance& inst);

  NodeId create_child(NodeId parent);

  // Replaces children `a` and `b` of `parent` with a fresh node holding
  // their combined counts; a and b become the new node's children.
  NodeId merge_children(NodeId parent, NodeId a, NodeId b);

  // Removes `child` of `parent`, promoting the grandchildren in order.
  void split_child(NodeId parent, NodeId child);

  // Turns a non-matching leaf into an internal node: one new child copies
  // the old leaf, a second new child holds `inst`, and the instance is then
  // incorporated into the (now internal) node itself. Returns the new leaf.
  NodeId fringe_expand(NodeId leaf, const Instance& inst);

  // --- maintenance -------------------------------------------------------

  // Recomputes every node's derived aggregates from its tallies in sorted
  // order. Persistence calls this before writing so that a tree that went
  // through save/load and one that is about to be saved agree bit-for-bit.
  void refresh_derived();

  // Full-tree structural and numeric sweep: single root, acyclic reachable
  // links, parent/child agreement, non-negative tallies, attribute presence
  // bounded by instance_count, and parent counts/tallies equal to the sum of
  // their children within `tol` (relative for tallies above 1, since their
  // rounding grows with magnitude). Throws Error describing the first
  // failure.
  void check_invariants(double tol = 1e-9) const;

  // Pre-order walk of node ids following child order.
  std::vector<NodeId> preorder() const;

  // Used by the loader, which rebuilds trees from node records.
  static ConceptTree from_parts(TreeConfig cfg, Vocabulary vocab,
                                std::vector<ConceptNode> nodes, NodeId root);

 private:
  NodeId new_node_id() { return next_id_++; }

  TreeConfig cfg_;
  Vocabulary vocab_;
  std::unordered_map<NodeId, ConceptNode> nodes_;
  NodeId root_ = 0;
  NodeId next_id_ = 0;
};

}  // namespace cobweb
