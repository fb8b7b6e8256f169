#include "cobweb/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "cobweb/learner.hpp"

namespace cobweb {

namespace {

// log P(inst | node) under smoothed per-attribute word probabilities, with
// each context word's weight acting as an exponent on its probability.
double log_likelihood(const ConceptTree& tree, const ConceptNode& n,
                      const Instance& inst) {
  const double alpha = tree.config().alpha;
  double ll = 0.0;
  for (Attr a : kAllAttrs) {
    const auto& words = inst.at(a);
    if (words.empty()) continue;
    const AttrStats& s = n.attr(a);
    const double denom =
        s.total + alpha * static_cast<double>(tree.attr_vocab_size(a));
    if (denom <= 0.0) continue;  // attribute never observed anywhere
    for (const auto& [w, weight] : words)
      ll += weight * std::log((s.tally(w) + alpha) / denom);
  }
  return ll;
}

void require_observed(const Instance& inst) {
  if (inst.empty())
    throw Error("instance has no observed words; nothing to predict from");
}

void require_trained(const ConceptTree& tree) {
  if (tree.node(tree.root_id()).count <= 0)
    throw Error("the tree holds no instances");
}

struct FrontierOrder {
  bool operator()(const ScoredNode& a, const ScoredNode& b) const {
    if (a.score != b.score) return a.score < b.score;  // max-heap on score
    return a.id > b.id;                                // then smaller id first
  }
};

std::map<WordId, double> smoothed_distribution(const ConceptTree& tree,
                                               const ConceptNode& n, Attr a) {
  std::map<WordId, double> dist;
  const AttrStats& root_stats = tree.node(tree.root_id()).attr(a);
  const double va = static_cast<double>(root_stats.distinct());
  if (va == 0.0) return dist;
  const double alpha = tree.config().alpha;
  const AttrStats& s = n.attr(a);
  const double denom = s.total + alpha * va;
  for (const auto& [w, t] : root_stats.tallies) {
    (void)t;
    dist[w] = (s.tally(w) + alpha) / denom;
  }
  return dist;
}

}  // namespace

std::vector<double> collocation_scores(const ConceptTree& tree,
                                       std::span<const NodeId> context,
                                       const Instance& inst) {
  require_observed(inst);
  require_trained(tree);
  if (context.empty()) throw Error("empty frontier context");

  const double log_root =
      std::log(static_cast<double>(tree.node(tree.root_id()).count));
  std::vector<double> ll(context.size());
  std::vector<double> joint(context.size());
  for (std::size_t i = 0; i < context.size(); ++i) {
    const ConceptNode& n = tree.node(context[i]);
    ll[i] = log_likelihood(tree, n, inst);
    joint[i] = std::log(static_cast<double>(n.count)) - log_root + ll[i];
  }
  const double peak = *std::max_element(joint.begin(), joint.end());
  double sum = 0.0;
  for (double j : joint) sum += std::exp(j - peak);
  const double lse = peak + std::log(sum);

  std::vector<double> scores(context.size());
  for (std::size_t i = 0; i < context.size(); ++i)
    scores[i] = (joint[i] - lse) + ll[i];
  return scores;
}

double collocation(const ConceptTree& tree, NodeId node, const Instance& inst,
                   std::span<const NodeId> frontier_context) {
  const std::vector<double> scores =
      collocation_scores(tree, frontier_context, inst);
  for (std::size_t i = 0; i < frontier_context.size(); ++i)
    if (frontier_context[i] == node) return scores[i];
  throw Error("node " + std::to_string(node) + " is not in the frontier context");
}

ExpansionState expand_best_first(const ConceptTree& tree, const Instance& inst,
                                 int n_max) {
  if (n_max < 1) throw Error("n_max must be at least 1");
  require_observed(inst);
  require_trained(tree);

  ExpansionState state;
  state.n_max = n_max;

  std::priority_queue<ScoredNode, std::vector<ScoredNode>, FrontierOrder> frontier;
  {
    const NodeId root = tree.root_id();
    const std::array<NodeId, 1> ctx{root};
    frontier.push({root, collocation_scores(tree, ctx, inst)[0]});
  }

  while (!frontier.empty() &&
         state.expanded.size() < static_cast<std::size_t>(n_max)) {
    const ScoredNode top = frontier.top();
    frontier.pop();
    state.expanded.push_back(top);
    const ConceptNode& n = tree.node(top.id);
    if (n.children.empty()) continue;
    const std::vector<double> scores =
        collocation_scores(tree, n.children, inst);
    for (std::size_t i = 0; i < n.children.size(); ++i)
      frontier.push({n.children[i], scores[i]});
  }

  state.frontier.reserve(frontier.size());
  while (!frontier.empty()) {
    state.frontier.push_back(frontier.top());
    frontier.pop();
  }
  return state;
}

PredictionResult predict_multi(const ConceptTree& tree, const Instance& inst,
                               Attr attr, int n_max) {
  const ExpansionState state = expand_best_first(tree, inst, n_max);

  // Weights and mixture are accumulated in node-id order so the result does
  // not depend on how equal-scoring nodes happened to leave the frontier.
  std::vector<ScoredNode> by_id = state.expanded;
  std::sort(by_id.begin(), by_id.end(),
            [](const ScoredNode& a, const ScoredNode& b) { return a.id < b.id; });

  const double sign =
      tree.config().softmax_sign == SoftmaxSign::positive ? 1.0 : -1.0;
  double peak = -std::numeric_limits<double>::infinity();
  for (const ScoredNode& sn : by_id) peak = std::max(peak, sign * sn.score);
  std::vector<double> weights(by_id.size());
  double z = 0.0;
  for (std::size_t i = 0; i < by_id.size(); ++i) {
    weights[i] = std::exp(sign * by_id[i].score - peak);
    z += weights[i];
  }
  for (double& w : weights) w /= z;

  PredictionResult out;
  out.expanded_node_count = static_cast<int>(state.expanded.size());

  if (by_id.size() == 1) {
    out.distribution = smoothed_distribution(tree, tree.node(by_id[0].id), attr);
  } else {
    const AttrStats& root_stats = tree.node(tree.root_id()).attr(attr);
    const double va = static_cast<double>(root_stats.distinct());
    if (va > 0.0) {
      const double alpha = tree.config().alpha;
      // Every word shares the smoothing floor of each node; per-node tallies
      // are then layered on top so the cost is the expanded nodes' tally
      // mass, not |expanded| * vocabulary.
      double floor = 0.0;
      std::vector<double> inv_denom(by_id.size());
      for (std::size_t i = 0; i < by_id.size(); ++i) {
        const AttrStats& s = tree.node(by_id[i].id).attr(attr);
        inv_denom[i] = 1.0 / (s.total + alpha * va);
        floor += weights[i] * alpha * inv_denom[i];
      }
      for (const auto& [w, t] : root_stats.tallies) {
        (void)t;
        out.distribution[w] = floor;
      }
      for (std::size_t i = 0; i < by_id.size(); ++i) {
        const AttrStats& s = tree.node(by_id[i].id).attr(attr);
        for (const auto& [w, t] : s.tallies)
          out.distribution[w] += weights[i] * t * inv_denom[i];
      }
    }
  }

  std::map<NodeId, double> weight_of;
  for (std::size_t i = 0; i < by_id.size(); ++i)
    weight_of[by_id[i].id] = weights[i];
  out.per_node_scores.reserve(state.expanded.size());
  for (const ScoredNode& sn : state.expanded)
    out.per_node_scores.push_back({sn.id, sn.score, weight_of[sn.id]});
  return out;
}

std::vector<NodeId> categorize_greedy(const ConceptTree& tree,
                                      const Instance& inst) {
  require_observed(inst);
  require_trained(tree);
  std::vector<NodeId> path{tree.root_id()};
  while (!tree.node(path.back()).is_leaf()) {
    const NodeId current = path.back();
    const std::vector<double> scores =
        score_children_for_add(tree, current, inst);
    const ConceptNode& n = tree.node(current);
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
      if (scores[i] > scores[best]) best = i;
    path.push_back(n.children[best]);
  }
  return path;
}

NodeId basic_level(const ConceptTree& tree, std::span<const NodeId> path) {
  if (path.empty()) throw Error("empty categorization path");
  if (path.size() == 1) return path[0];
  NodeId best = path[1];
  double best_cu = tree.category_utility(best);
  for (std::size_t i = 2; i < path.size(); ++i) {
    const double cu = tree.category_utility(path[i]);
    if (cu > best_cu) {  // strict: ties stay with the shallower node
      best = path[i];
      best_cu = cu;
    }
  }
  return best;
}

PredictionResult predict_single(const ConceptTree& tree, NodeId node, Attr attr) {
  PredictionResult out;
  out.distribution = smoothed_distribution(tree, tree.node(node), attr);
  out.expanded_node_count = 1;
  out.per_node_scores.push_back({node, 0.0, 1.0});
  return out;
}

std::size_t score_options(const PredictionResult& result,
                          std::span<const std::string> options,
                          const Vocabulary& vocab) {
  if (options.empty()) throw Error("no options to score");
  bool any_known = false;
  std::size_t best = 0;
  double best_p = -1.0;
  for (std::size_t i = 0; i < options.size(); ++i) {
    double p = 0.0;
    if (auto id = vocab.find(options[i])) {
      any_known = true;
      auto it = result.distribution.find(*id);
      if (it != result.distribution.end()) p = it->second;
    }
    if (p > best_p) {
      best_p = p;
      best = i;
    }
  }
  if (!any_known)
    throw Error("unanswerable: no option is in the vocabulary");
  return best;
}

}  // namespace cobweb
