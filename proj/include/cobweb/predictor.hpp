#pragma once

#include <map>
#include <span>
#include <vector>

#include "cobweb/concept_tree.hpp"

namespace cobweb {

struct ScoredNode {
  NodeId id;
  double score;
};

// Result of a best-first walk: nodes in the order they were expanded, plus
// whatever was still waiting on the frontier when the walk stopped. The
// frontier holds exactly the not-yet-expanded children of expanded nodes.
struct ExpansionState {
  std::vector<ScoredNode> expanded;
  std::vector<ScoredNode> frontier;  // ordered best-first, ties by node id
  int n_max = 0;
};

struct NodeWeight {
  NodeId id;
  double score;   // collocation score
  double weight;  // softmax share of the mixture
};

struct PredictionResult {
  std::map<WordId, double> distribution;
  int expanded_node_count = 0;
  std::vector<NodeWeight> per_node_scores;  // in expansion order
};

// Log collocation score of `node` for `inst`: log P(node | inst) +
// log P(inst | node), with the posterior normalized over `frontier_context`
// (callers pass the sibling set the node competes in) and the likelihood
// using smoothed word probabilities weighted by the instance's context
// weights. Errors when the instance carries no observed words.
double collocation(const ConceptTree& tree, NodeId node, const Instance& inst,
                   std::span<const NodeId> frontier_context);

// Collocation scores for every member of `context`, sharing one normalizer.
std::vector<double> collocation_scores(const ConceptTree& tree,
                                       std::span<const NodeId> context,
                                       const Instance& inst);

// Expands up to n_max nodes best-first from the root: repeatedly pops the
// best-scoring frontier node (ties toward the smaller id), appending its
// children to the frontier scored within their sibling set.
ExpansionState expand_best_first(const ConceptTree& tree, const Instance& inst,
                                 int n_max);

// Mixture prediction over the expanded nodes: weights are a softmax over
// the collocation scores (sign per configuration) and the distribution is
// the weighted sum of each node's smoothed word distribution for `attr`,
// covering the attribute's root vocabulary.
PredictionResult predict_multi(const ConceptTree& tree, const Instance& inst,
                               Attr attr, int n_max);

// Greedy root-to-leaf descent, at each level moving into the child whose
// hypothetical add yields the highest partition utility. Read-only.
std::vector<NodeId> categorize_greedy(const ConceptTree& tree,
                                      const Instance& inst);

// The node on the path with the highest category utility (configured
// variant), excluding the root; ties go to the shallower node. A one-node
// path yields the root itself.
NodeId basic_level(const ConceptTree& tree, std::span<const NodeId> path);

// Smoothed word distribution of a single node for `attr`.
PredictionResult predict_single(const ConceptTree& tree, NodeId node, Attr attr);

// Index of the highest-probability option (ties toward the lowest index).
// Options missing from the vocabulary score 0; if none are in the
// vocabulary the item is unanswerable and an Error is thrown.
std::size_t score_options(const PredictionResult& result,
                          std::span<const std::string> options,
                          const Vocabulary& vocab);

}  // namespace cobweb
