#pragma once

// Independent reference implementations used to check the library's
// incremental arithmetic. Everything here recomputes from first principles
// (or materializes edits on deep copies); nothing reuses the library's
// cached aggregates.

#include <cmath>
#include <map>
#include <span>
#include <vector>

#include "cobweb/concept_tree.hpp"
#include "cobweb/learner.hpp"
#include "cobweb/predictor.hpp"

namespace oracle {

using cobweb::Attr;
using cobweb::AttrStats;
using cobweb::ConceptNode;
using cobweb::ConceptTree;
using cobweb::Instance;
using cobweb::NodeId;
using cobweb::WordId;

// -ln sum over words of p ln p, p = tally / total, straight from the map.
inline double entropy_direct(const std::map<WordId, double>& tallies) {
  double total = 0.0;
  for (const auto& [w, t] : tallies) total += t;
  if (total <= 0.0 || tallies.size() < 2) return 0.0;
  double h = 0.0;
  for (const auto& [w, t] : tallies) {
    const double p = t / total;
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

inline double sq_mass_direct(const std::map<WordId, double>& tallies) {
  double total = 0.0;
  for (const auto& [w, t] : tallies) total += t;
  if (total <= 0.0) return 0.0;
  double s = 0.0;
  for (const auto& [w, t] : tallies) {
    const double p = t / total;
    s += p * p;
  }
  return s;
}

inline double uncertainty_direct(const ConceptTree& tree, NodeId id) {
  const ConceptNode& n = tree.node(id);
  double u = 0.0;
  for (Attr a : cobweb::kAllAttrs) {
    const AttrStats& s = n.attr(a);
    if (s.presence == 0) continue;
    u += (static_cast<double>(s.presence) / static_cast<double>(n.count)) *
         entropy_direct(s.tallies);
  }
  return u;
}

inline double cu_info_direct(const ConceptTree& tree, NodeId id) {
  const ConceptNode& n = tree.node(id);
  const ConceptNode& p = tree.node(n.parent);
  const double pc =
      static_cast<double>(n.count) / static_cast<double>(p.count);
  return pc * (uncertainty_direct(tree, n.parent) - uncertainty_direct(tree, id));
}

inline double cu_prob_direct(const ConceptTree& tree, NodeId id) {
  const ConceptNode& n = tree.node(id);
  const ConceptNode& p = tree.node(n.parent);
  const double pc =
      static_cast<double>(n.count) / static_cast<double>(p.count);
  double child_mass = 0.0, parent_mass = 0.0;
  for (Attr a : cobweb::kAllAttrs) {
    child_mass += sq_mass_direct(n.attr(a).tallies);
    parent_mass += sq_mass_direct(p.attr(a).tallies);
  }
  return pc * (child_mass - parent_mass);
}

inline double cu_direct(const ConceptTree& tree, NodeId id) {
  return tree.config().cu_variant == cobweb::CuVariant::info
             ? cu_info_direct(tree, id)
             : cu_prob_direct(tree, id);
}

// Applies `edit` to `copy` using the public mutation primitives, exactly the
// way learning would. Returns the edited parent (children included).
inline NodeId materialize_edit(ConceptTree& copy, NodeId parent,
                               const cobweb::HypotheticalEdit& edit) {
  using namespace cobweb;
  if (const auto* add = std::get_if<EditAdd>(&edit)) {
    copy.incorporate_counts(parent, *add->instance);
    copy.incorporate_counts(add->child, *add->instance);
  } else if (const auto* create = std::get_if<EditCreate>(&edit)) {
    copy.incorporate_counts(parent, *create->instance);
    NodeId fresh = copy.create_child(parent);
    copy.incorporate_counts(fresh, *create->instance);
  } else if (const auto* merge = std::get_if<EditMerge>(&edit)) {
    copy.incorporate_counts(parent, *merge->instance);
    NodeId merged = copy.merge_children(parent, merge->first, merge->second);
    copy.incorporate_counts(merged, *merge->instance);
  } else if (const auto* split = std::get_if<EditSplit>(&edit)) {
    copy.split_child(parent, split->child);
  }
  return parent;
}

// Deep-copy materialization of the edit followed by a from-scratch read of
// the resulting partition: mean category utility over the parent's children
// computed with the library's own per-node accessors. Because the copy goes
// through the same tally updates the live arithmetic simulates, the result
// must match partition_utility bit for bit.
inline double partition_utility_materialized(const ConceptTree& tree,
                                             NodeId parent,
                                             const cobweb::HypotheticalEdit& edit) {
  ConceptTree copy = tree;
  materialize_edit(copy, parent, edit);
  const ConceptNode& p = copy.node(parent);
  double sum = 0.0;
  for (NodeId c : p.children) sum += copy.category_utility(c);
  return sum / static_cast<double>(p.children.size());
}

// Same materialization, but category utility recomputed from raw tallies —
// a fully independent check, compared within a tolerance.
inline double partition_utility_from_scratch(const ConceptTree& tree,
                                             NodeId parent,
                                             const cobweb::HypotheticalEdit& edit) {
  ConceptTree copy = tree;
  materialize_edit(copy, parent, edit);
  const ConceptNode& p = copy.node(parent);
  double sum = 0.0;
  for (NodeId c : p.children) sum += cu_direct(copy, c);
  return sum / static_cast<double>(p.children.size());
}

// Exhaustive rival to choose_operation: scores every add target, every
// merge pair, every split victim, and create, all via copy-based
// materialization, applying the same priority order within `tie_eps`.
struct ExhaustiveChoice {
  cobweb::OpKind kind;
  NodeId best_child = cobweb::kNoNode;
  NodeId second_child = cobweb::kNoNode;
  double score = 0.0;
};

inline ExhaustiveChoice choose_operation_exhaustive(const ConceptTree& tree,
                                                    NodeId parent,
                                                    const Instance& inst,
                                                    double tie_eps = 1e-12) {
  using namespace cobweb;
  const ConceptNode& p = tree.node(parent);
  // best / second-best add targets, first index winning ties
  std::size_t best_i = 0;
  std::size_t second_i = p.children.size();
  std::vector<double> add_scores;
  for (std::size_t i = 0; i < p.children.size(); ++i) {
    add_scores.push_back(partition_utility_materialized(
        tree, parent, EditAdd{p.children[i], &inst}));
  }
  for (std::size_t i = 1; i < add_scores.size(); ++i)
    if (add_scores[i] > add_scores[best_i]) best_i = i;
  for (std::size_t i = 0; i < add_scores.size(); ++i) {
    if (i == best_i) continue;
    if (second_i == p.children.size() || add_scores[i] > add_scores[second_i])
      second_i = i;
  }

  std::vector<ExhaustiveChoice> candidates;
  candidates.push_back({OpKind::add, p.children[best_i], kNoNode,
                        add_scores[best_i]});
  candidates.push_back(
      {OpKind::create, kNoNode, kNoNode,
       partition_utility_materialized(tree, parent, EditCreate{&inst})});
  // Mirrors the learner's rule: a merge must leave a sibling outside the
  // pair, so two-child nodes offer no merge candidate.
  if (p.children.size() >= 3 && second_i < p.children.size()) {
    candidates.push_back(
        {OpKind::merge, p.children[best_i], p.children[second_i],
         partition_utility_materialized(
             tree, parent,
             EditMerge{p.children[best_i], p.children[second_i], &inst})});
  }
  if (!tree.node(p.children[best_i]).is_leaf()) {
    candidates.push_back(
        {OpKind::split, p.children[best_i], kNoNode,
         partition_utility_materialized(tree, parent,
                                        EditSplit{p.children[best_i]})});
  }

  ExhaustiveChoice best = candidates.front();
  for (std::size_t i = 1; i < candidates.size(); ++i)
    if (candidates[i].score > best.score + tie_eps) best = candidates[i];
  return best;
}

// Re-scores a finished choice through copy-based materialization, using the
// same orientation the choice reports.
inline double replay_choice_score(const ConceptTree& tree, NodeId parent,
                                  const Instance& inst,
                                  const cobweb::OperationChoice& choice) {
  using namespace cobweb;
  switch (choice.kind) {
    case OpKind::add:
      return partition_utility_materialized(tree, parent,
                                            EditAdd{choice.best_child, &inst});
    case OpKind::create:
      return partition_utility_materialized(tree, parent, EditCreate{&inst});
    case OpKind::merge:
      return partition_utility_materialized(
          tree, parent,
          EditMerge{choice.best_child, choice.second_child, &inst});
    case OpKind::split:
      return partition_utility_materialized(tree, parent,
                                            EditSplit{choice.best_child});
  }
  return 0.0;
}

// True when the optimum is isolated: the best add target leads the runner-up
// add, and the winning candidate leads every rival candidate, both by more
// than `margin`. Near-ties below the margin leave the argmax legitimately
// ambiguous between the one-pass scorer and full re-evaluation, so exact
// identity of the picked ids is only guaranteed on decisive cases.
inline bool choice_is_decisive(const ConceptTree& tree, NodeId parent,
                               const Instance& inst, double margin) {
  using namespace cobweb;
  const ConceptNode& p = tree.node(parent);
  std::vector<double> add_scores;
  for (NodeId c : p.children)
    add_scores.push_back(
        partition_utility_materialized(tree, parent, EditAdd{c, &inst}));
  std::size_t best_i = 0;
  for (std::size_t i = 1; i < add_scores.size(); ++i)
    if (add_scores[i] > add_scores[best_i]) best_i = i;
  std::size_t second_i = add_scores.size();
  for (std::size_t i = 0; i < add_scores.size(); ++i) {
    if (i == best_i) continue;
    if (second_i == add_scores.size() || add_scores[i] > add_scores[second_i])
      second_i = i;
  }
  if (second_i < add_scores.size() &&
      add_scores[best_i] - add_scores[second_i] <= margin)
    return false;

  std::vector<double> rivals;
  rivals.push_back(add_scores[best_i]);
  rivals.push_back(
      partition_utility_materialized(tree, parent, EditCreate{&inst}));
  if (p.children.size() >= 3 && second_i < add_scores.size())
    rivals.push_back(partition_utility_materialized(
        tree, parent,
        EditMerge{p.children[best_i], p.children[second_i], &inst}));
  if (!tree.node(p.children[best_i]).is_leaf())
    rivals.push_back(partition_utility_materialized(
        tree, parent, EditSplit{p.children[best_i]}));

  std::size_t top = 0;
  for (std::size_t i = 1; i < rivals.size(); ++i)
    if (rivals[i] > rivals[top]) top = i;
  for (std::size_t i = 0; i < rivals.size(); ++i)
    if (i != top && rivals[top] - rivals[i] <= margin) return false;
  return true;
}

// Brute-force best-first expansion: a plain vector frontier re-scanned on
// every pop, children scored with the library's collocation within their
// sibling set. Selection prefers the higher score, then the smaller id.
inline cobweb::ExpansionState expand_best_first_bruteforce(
    const ConceptTree& tree, const Instance& inst, int n_max) {
  using cobweb::ScoredNode;
  cobweb::ExpansionState state;
  state.n_max = n_max;
  std::vector<ScoredNode> frontier;
  {
    const NodeId root = tree.root_id();
    const std::vector<NodeId> ctx{root};
    frontier.push_back({root, cobweb::collocation(tree, root, inst, ctx)});
  }
  while (!frontier.empty() &&
         state.expanded.size() < static_cast<std::size_t>(n_max)) {
    std::size_t pick = 0;
    for (std::size_t i = 1; i < frontier.size(); ++i) {
      if (frontier[i].score > frontier[pick].score ||
          (frontier[i].score == frontier[pick].score &&
           frontier[i].id < frontier[pick].id))
        pick = i;
    }
    const ScoredNode chosen = frontier[pick];
    frontier.erase(frontier.begin() + static_cast<std::ptrdiff_t>(pick));
    state.expanded.push_back(chosen);
    const ConceptNode& n = tree.node(chosen.id);
    if (!n.is_leaf()) {
      const std::vector<double> scores =
          cobweb::collocation_scores(tree, n.children, inst);
      for (std::size_t i = 0; i < n.children.size(); ++i)
        frontier.push_back({n.children[i], scores[i]});
    }
  }
  // drain what's left, best-first, to mirror ExpansionState.frontier
  while (!frontier.empty()) {
    std::size_t pick = 0;
    for (std::size_t i = 1; i < frontier.size(); ++i) {
      if (frontier[i].score > frontier[pick].score ||
          (frontier[i].score == frontier[pick].score &&
           frontier[i].id < frontier[pick].id))
        pick = i;
    }
    state.frontier.push_back(frontier[pick]);
    frontier.erase(frontier.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return state;
}

}  // namespace oracle
