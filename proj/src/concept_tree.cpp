#include "cobweb/concept_tree.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <unordered_set>

namespace cobweb {

namespace {

inline double nlogn(double t) { return t > 0.0 ? t * std::log(t) : 0.0; }

std::string node_label(NodeId id) { return "node " + std::to_string(id); }

}  // namespace

void AttrStats::add_word(WordId w, double weight) {
  double& slot = tallies[w];
  const double old = slot;
  slot = old + weight;
  total += weight;
  sum_nlogn += nlogn(slot) - nlogn(old);
  sum_sq += slot * slot - old * old;
}

void AttrStats::refresh() {
  total = 0.0;
  sum_nlogn = 0.0;
  sum_sq = 0.0;
  for (const auto& [w, t] : tallies) {
    (void)w;
    total += t;
    sum_nlogn += nlogn(t);
    sum_sq += t * t;
  }
}

double attr_entropy(const AttrStats& s) {
  if (s.distinct() <= 1 || s.total <= 0.0) return 0.0;
  return std::log(s.total) - s.sum_nlogn / s.total;
}

double attr_sq_prob_mass(const AttrStats& s) {
  if (s.total <= 0.0) return 0.0;
  return s.sum_sq / (s.total * s.total);
}

ConceptTree::ConceptTree(TreeConfig cfg, Vocabulary vocab)
    : cfg_(cfg), vocab_(std::move(vocab)) {
  ConceptNode root;
  root.id = new_node_id();
  root_ = root.id;
  nodes_.emplace(root.id, std::move(root));
}

const ConceptNode& ConceptTree::node(NodeId id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw Error("unknown " + node_label(id));
  return it->second;
}

ConceptNode& ConceptTree::node_mut(NodeId id) {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw Error("unknown " + node_label(id));
  return it->second;
}

bool ConceptTree::empty() const {
  const ConceptNode& r = node(root_);
  return r.count == 0 && r.is_leaf();
}

double ConceptTree::node_prob(NodeId id) const {
  const ConceptNode& n = node(id);
  if (n.parent == kNoNode) return 1.0;
  const ConceptNode& p = node(n.parent);
  if (p.count <= 0) throw Error(node_label(p.id) + " has no instances");
  return static_cast<double>(n.count) / static_cast<double>(p.count);
}

double ConceptTree::attr_word_prob(NodeId id, Attr a, WordId w, bool smoothed) const {
  if (!vocab_.contains(w))
    throw Error("word id " + std::to_string(w) + " is not in the vocabulary");
  const AttrStats& s = node(id).attr(a);
  if (!smoothed) {
    if (s.total <= 0.0) return 0.0;
    return s.tally(w) / s.total;
  }
  const double va = static_cast<double>(attr_vocab_size(a));
  const double denom = s.total + cfg_.alpha * va;
  if (denom <= 0.0) return 0.0;
  return (s.tally(w) + cfg_.alpha) / denom;
}

double ConceptTree::attribute_entropy(NodeId id, Attr a) const {
  return attr_entropy(node(id).attr(a));
}

double ConceptTree::node_uncertainty(NodeId id) const {
  const ConceptNode& n = node(id);
  if (n.count <= 0) throw Error(node_label(id) + " is empty");
  double u = 0.0;
  for (Attr a : kAllAttrs) {
    const AttrStats& s = n.attr(a);
    if (s.presence == 0) continue;
    const double p_attr =
        static_cast<double>(s.presence) / static_cast<double>(n.count);
    u += p_attr * attr_entropy(s);
  }
  return u;
}

double ConceptTree::cu_info(NodeId id) const {
  const ConceptNode& n = node(id);
  if (n.parent == kNoNode)
    throw Error("category utility is undefined for the root");
  return node_prob(id) * (node_uncertainty(n.parent) - node_uncertainty(id));
}

double ConceptTree::cu_probabilistic(NodeId id) const {
  const ConceptNode& n = node(id);
  if (n.parent == kNoNode)
    throw Error("category utility is undefined for the root");
  const ConceptNode& p = node(n.parent);
  double child_mass = 0.0;
  double parent_mass = 0.0;
  for (Attr a : kAllAttrs) {
    child_mass += attr_sq_prob_mass(n.attr(a));
    parent_mass += attr_sq_prob_mass(p.attr(a));
  }
  return node_prob(id) * (child_mass - parent_mass);
}

double ConceptTree::category_utility(NodeId id) const {
  return cfg_.cu_variant == CuVariant::info ? cu_info(id) : cu_probabilistic(id);
}

void ConceptTree::incorporate_counts(NodeId id, const Instance& inst) {
  ConceptNode& n = node_mut(id);
  for (Attr a : kAllAttrs) {
    const auto& words = inst.at(a);
    if (words.empty()) continue;
    AttrStats& s = n.attr(a);
    for (const auto& [w, weight] : words) {
      if (!vocab_.contains(w))
        throw Error("word id " + std::to_string(w) + " is not in the vocabulary");
      s.add_word(w, weight);
    }
    s.presence += 1;
  }
  n.count += 1;
}

NodeId ConceptTree::create_child(NodeId parent) {
  ConceptNode& p = node_mut(parent);
  ConceptNode child;
  child.id = new_node_id();
  child.parent = parent;
  p.children.push_back(child.id);
  NodeId id = child.id;
  nodes_.emplace(id, std::move(child));
  return id;
}

NodeId ConceptTree::merge_children(NodeId parent, NodeId a, NodeId b) {
  if (a == b) throw Error("cannot merge a node with itself");
  ConceptNode& p = node_mut(parent);
  auto in_parent = [&](NodeId c) {
    return std::find(p.children.begin(), p.children.end(), c) != p.children.end();
  };
  if (!in_parent(a) || !in_parent(b))
    throw Error("merge children must both belong to " + node_label(parent));

  ConceptNode merged;
  merged.id = new_node_id();
  merged.parent = parent;
  merged.children = {a, b};
  for (NodeId src : {a, b}) {
    const ConceptNode& s = node(src);
    merged.count += s.count;
    for (Attr attr : kAllAttrs) {
      AttrStats& dst = merged.attr(attr);
      const AttrStats& from = s.attr(attr);
      for (const auto& [w, t] : from.tallies) dst.add_word(w, t);
      dst.presence += from.presence;
    }
  }

  NodeId merged_id = merged.id;
  nodes_.emplace(merged_id, std::move(merged));
  ConceptNode& p2 = node_mut(parent);  // re-fetch: emplace may rehash
  p2.children.erase(
      std::remove_if(p2.children.begin(), p2.children.end(),
                     [&](NodeId c) { return c == a || c == b; }),
      p2.children.end());
  p2.children.push_back(merged_id);
  node_mut(a).parent = merged_id;
  node_mut(b).parent = merged_id;
  return merged_id;
}

void ConceptTree::split_child(NodeId parent, NodeId child) {
  ConceptNode& p = node_mut(parent);
  auto it = std::find(p.children.begin(), p.children.end(), child);
  if (it == p.children.end())
    throw Error(node_label(child) + " is not a child of " + node_label(parent));
  const ConceptNode& c = node(child);
  if (c.is_leaf()) throw Error("cannot split leaf " + node_label(child));

  std::vector<NodeId> grandchildren = c.children;
  p.children.erase(it);
  for (NodeId g : grandchildren) {
    p.children.push_back(g);
    node_mut(g).parent = parent;
  }
  nodes_.erase(child);
}

NodeId ConceptTree::fringe_expand(NodeId leaf, const Instance& inst) {
  {
    const ConceptNode& n = node(leaf);
    if (!n.is_leaf()) throw Error(node_label(leaf) + " is not a leaf");
  }
  // Copy of the old leaf keeps its counts; the node itself becomes internal
  // (and keeps its id and position under its parent).
  NodeId copy_id = create_child(leaf);
  {
    const ConceptNode& src = node(leaf);
    ConceptNode& copy = node_mut(copy_id);
    copy.count = src.count;
    copy.attrs = src.attrs;
  }
  NodeId fresh = create_child(leaf);
  incorporate_counts(fresh, inst);
  incorporate_counts(leaf, inst);
  return fresh;
}

void ConceptTree::refresh_derived() {
  for (auto& [id, n] : nodes_) {
    (void)id;
    for (Attr a : kAllAttrs) n.attr(a).refresh();
  }
}

void ConceptTree::check_invariants(double tol) const {
  const ConceptNode& root = node(root_);
  if (root.parent != kNoNode) throw Error("root must have no parent");

  std::unordered_set<NodeId> seen;
  std::deque<NodeId> queue{root_};
  while (!queue.empty()) {
    NodeId id = queue.front();
    queue.pop_front();
    if (!seen.insert(id).second)
      throw Error(node_label(id) + " is reachable twice (cycle or shared child)");
    const ConceptNode& n = node(id);

    if (n.count < 0) throw Error(node_label(id) + " has negative instance_count");
    for (Attr a : kAllAttrs) {
      const AttrStats& s = n.attr(a);
      if (s.presence < 0 || s.presence > n.count)
        throw Error(node_label(id) + " has attribute presence outside [0, count]");
      for (const auto& [w, t] : s.tallies) {
        if (!vocab_.contains(w))
          throw Error(node_label(id) + " references unknown word id " +
                      std::to_string(w));
        if (t <= 0.0)
          throw Error(node_label(id) + " has non-positive tally for word " +
                      std::to_string(w));
      }
    }

    if (!n.is_leaf()) {
      std::int64_t child_count = 0;
      std::array<std::map<WordId, double>, kAttrCount> sums;
      for (NodeId c : n.children) {
        const ConceptNode& ch = node(c);  // throws on dangling reference
        if (ch.parent != id)
          throw Error(node_label(c) + " does not point back to parent " +
                      node_label(id));
        child_count += ch.count;
        for (Attr a : kAllAttrs)
          for (const auto& [w, t] : ch.attr(a).tallies)
            sums[static_cast<std::size_t>(a)][w] += t;
        queue.push_back(c);
      }
      if (child_count != n.count)
        throw Error(node_label(id) + " instance_count " + std::to_string(n.count) +
                    " != children sum " + std::to_string(child_count));
      for (Attr a : kAllAttrs) {
        const auto& expect = sums[static_cast<std::size_t>(a)];
        const AttrStats& s = n.attr(a);
        if (expect.size() != s.tallies.size())
          throw Error(node_label(id) + " " + attr_name(a) +
                      " word set differs from children");
        for (const auto& [w, t] : expect) {
          // Large tallies accumulate rounding proportional to their size, so
          // the tolerance scales with magnitude.
          if (std::abs(s.tally(w) - t) > tol * std::max(1.0, std::abs(t)))
            throw Error(node_label(id) + " " + attr_name(a) + " tally for word " +
                        std::to_string(w) + " drifts from children sum");
        }
      }
    }
  }
  if (seen.size() != nodes_.size())
    throw Error("tree holds unreachable nodes");
}

std::vector<NodeId> ConceptTree::preorder() const {
  std::vector<NodeId> order;
  order.reserve(nodes_.size());
  std::vector<NodeId> stack{root_};
  while (!stack.empty()) {
    NodeId id = stack.back();
    stack.pop_back();
    order.push_back(id);
    const ConceptNode& n = node(id);
    for (auto it = n.children.rbegin(); it != n.children.rend(); ++it)
      stack.push_back(*it);
  }
  return order;
}

ConceptTree ConceptTree::from_parts(TreeConfig cfg, Vocabulary vocab,
                                    std::vector<ConceptNode> nodes, NodeId root) {
  ConceptTree tree(cfg, std::move(vocab));
  tree.nodes_.clear();
  NodeId max_id = 0;
  for (auto& n : nodes) {
    max_id = std::max(max_id, n.id);
    NodeId id = n.id;
    if (!tree.nodes_.emplace(id, std::move(n)).second)
      throw Error("duplicate node id " + std::to_string(id));
  }
  tree.root_ = root;
  tree.next_id_ = max_id + 1;
  tree.refresh_derived();
  return tree;
}

}  // namespace cobweb
