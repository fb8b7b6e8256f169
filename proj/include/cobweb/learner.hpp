#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "cobweb/concept_tree.hpp"

namespace cobweb {

// Hypothetical edits to the partition under one parent. Instances are held
// by pointer; callers keep them alive for the duration of the call.
struct EditNone {};
struct EditAdd {
  NodeId child;
  const Instance* instance;
};
struct EditCreate {
  const Instance* instance;
};
struct EditMerge {
  NodeId first;
  NodeId second;
  const Instance* instance;
};
struct EditSplit {
  NodeId child;
};
using HypotheticalEdit =
    std::variant<EditNone, EditAdd, EditCreate, EditMerge, EditSplit>;

enum class OpKind : std::uint8_t { add, create, merge, split };

const char* to_string(OpKind k);

struct OperationChoice {
  OpKind kind;
  NodeId best_child = kNoNode;   // target of add, first of merge, or split victim
  NodeId second_child = kNoNode;  // second of merge
  double score = 0.0;             // partition utility of the chosen edit
};

// Mean category utility over the children `parent` would have after the
// edit, computed against the parent's post-edit state. The tree itself is
// never touched; all hypothetical quantities are derived arithmetically,
// matching what materializing the edit on a copy would produce.
double partition_utility(const ConceptTree& tree, NodeId parent,
                         const HypotheticalEdit& edit);

// Partition utility of adding `inst` to each child in turn, in child order.
std::vector<double> score_children_for_add(const ConceptTree& tree, NodeId parent,
                                           const Instance& inst);

// Picks among add/create/merge/split for an internal node. Merge needs at
// least three children (merging both children of a two-child node would
// recreate the parent's own partition and never terminate); split needs the
// best child to be internal. Ties are broken in that fixed order.
OperationChoice choose_operation(const ConceptTree& tree, NodeId parent,
                                 const Instance& inst);

// Incorporates one instance: descends from the root applying the chosen
// operation at each level until the instance comes to rest in a leaf, whose
// id is returned. An empty tree stores the instance in the root; a matching
// leaf absorbs it; a non-matching leaf is fringe-expanded.
NodeId learn(ConceptTree& tree, const Instance& inst);

// True when the leaf's per-instance tally profile matches `inst` within
// `tol` on every attribute.
bool leaf_matches_instance(const ConceptNode& leaf, const Instance& inst,
                           double tol = 1e-9);

}  // namespace cobweb
