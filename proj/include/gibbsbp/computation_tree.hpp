#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "gibbsbp/lbp.hpp"
#include "gibbsbp/model.hpp"
#include "gibbsbp/numeric.hpp"

namespace gibbsbp {

/// The depth-n non-backtracking unrolling of the Markov graph from a root.
/// Tree nodes are stored in BFS order (root first, children in ascending
/// original-node order), which makes the node numbering canonical for a
/// given (model, root, depth). Holds a pointer to the model it was built
/// from; the model must outlive the tree.
class ComputationTree {
 public:
  struct Node {
    int original;  // the map back to the model's node index
    int parent;    // tree index, -1 at the root
    int depth;
    std::vector<int> children;
    std::vector<double> self_potential;  // lifted; filled by lift_potentials
  };

  ComputationTree(const PairwiseModel& model, int root, int depth, std::size_t node_cap)
      : model_(&model), depth_(depth) {
    if (root < 0 || root >= model.num_nodes()) throw Error(errc::unknown_node, "unknown root node");
    if (depth < 0) throw Error(errc::bad_argument, "tree depth must be nonnegative");
    nodes_.push_back({root, -1, 0, {}, {}});
    for (std::size_t t = 0; t < nodes_.size(); ++t) {
      if (nodes_[t].depth == depth) continue;
      int i = nodes_[t].original;
      int back = nodes_[t].parent < 0 ? -1 : nodes_[nodes_[t].parent].original;
      for (int j : model.neighbors(i)) {
        if (j == back) continue;  // never backtrack
        if (nodes_.size() >= node_cap)
          throw Error(errc::cap_exceeded,
                      "computation tree exceeds " + std::to_string(node_cap) + " nodes");
        nodes_[t].children.push_back(static_cast<int>(nodes_.size()));
        nodes_.push_back({j, static_cast<int>(t), nodes_[t].depth + 1, {}, {}});
      }
    }
  }

  const PairwiseModel& model() const { return *model_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  int depth() const { return depth_; }
  bool lifted() const { return !nodes_.front().self_potential.empty(); }

  /// Fills the lifted self-potentials from an initial message set; see
  /// lift_potentials below for the contract.
  void lift(const MessageSet& init) {
    const PairwiseModel& model = *model_;
    if (init.size() != model.num_directed_edges())
      throw Error(errc::malformed_message, "initial message set does not match the model");
    for (auto& n : nodes_) {
      n.self_potential = model.node_potential(n.original);
      if (n.depth != depth_) continue;
      int i = n.original;
      int away = n.parent < 0 ? -1 : nodes_[n.parent].original;
      for (int k : model.neighbors(i)) {
        if (k == away) continue;
        const auto& m0 = init[model.directed_index(k, i)];
        for (int x = 0; x < model.num_states(i); ++x) {
          if (!(m0[x] > 0.0))
            throw Error(errc::nonpositive_message,
                        "boundary lift requires strictly positive initial messages");
          n.self_potential[x] -= std::log(m0[x]);
        }
      }
    }
  }

  /// Lifted pair potential on the tree edge between a non-root node and its
  /// parent, read from the original model under the node map.
  double edge_energy(int t, int x_node, int x_parent) const {
    const Node& n = nodes_[t];
    return model_->pair_energy(n.original, nodes_[n.parent].original, x_node, x_parent);
  }

 private:
  const PairwiseModel* model_;
  std::vector<Node> nodes_;
  int depth_;
};

inline ComputationTree build_computation_tree(const PairwiseModel& model, int root, int depth,
                                              std::size_t node_cap = 1'000'000) {
  return ComputationTree(model, root, depth, node_cap);
}

/// Copies self-potentials onto the tree under the node map and adds the
/// boundary term -sum_k ln m0_(k,i) to every node at the full depth, the sum
/// running over the original neighbors away from the tree parent. A depth-0
/// tree is a single root carrying the boundary product over all of its
/// neighbors, so its marginal reproduces the belief at time 0. Initial
/// messages must be strictly positive.
inline ComputationTree lift_potentials(ComputationTree tree, const MessageSet& init) {
  tree.lift(init);
  return tree;
}

/// Exact root marginal of the lifted tree measure via one leaves-to-root
/// sum-product sweep (exact on trees). Children always carry larger BFS
/// indices than their parents, so a reverse index scan is an upward pass.
inline std::vector<double> tree_root_marginal(const ComputationTree& tree) {
  if (!tree.lifted()) throw Error(errc::bad_argument, "tree potentials have not been lifted");
  const PairwiseModel& model = tree.model();
  const auto& nodes = tree.nodes();
  std::vector<std::vector<double>> up(nodes.size());
  std::vector<double> base, out_log, terms;
  for (int t = static_cast<int>(nodes.size()) - 1; t >= 0; --t) {
    const auto& n = nodes[t];
    int ki = model.num_states(n.original);
    base.assign(n.self_potential.begin(), n.self_potential.end());
    for (auto& x : base) x = -x;
    for (int c : n.children)
      for (int x = 0; x < ki; ++x) base[x] += std::log(up[c][x]);
    if (n.parent < 0) return normalize_from_log(base);
    int kp = model.num_states(nodes[n.parent].original);
    out_log.assign(kp, 0.0);
    terms.resize(ki);
    for (int y = 0; y < kp; ++y) {
      for (int x = 0; x < ki; ++x) terms[x] = -tree.edge_energy(t, x, y) + base[x];
      out_log[y] = log_sum_exp(terms);
    }
    up[t] = normalize_from_log(out_log);
  }
  throw Error(errc::numerical_failure, "tree has no root");  // unreachable
}

/// Brute-force root marginal over all tree configurations; the independent
/// cross-check for the sweep above on small trees.
inline std::vector<double> tree_root_marginal_bruteforce(const ComputationTree& tree,
                                                         std::uint64_t max_configurations = 1 << 20) {
  if (!tree.lifted()) throw Error(errc::bad_argument, "tree potentials have not been lifted");
  const PairwiseModel& model = tree.model();
  const auto& nodes = tree.nodes();
  std::vector<int> radices(nodes.size());
  std::uint64_t count = 1;
  for (std::size_t t = 0; t < nodes.size(); ++t) {
    radices[t] = model.num_states(nodes[t].original);
    if (count > max_configurations / radices[t])
      throw Error(errc::cap_exceeded, "lifted tree too large for brute force");
    count *= radices[t];
  }
  int k_root = radices[0];
  std::vector<std::vector<double>> log_weights(k_root);
  Configuration config(nodes.size(), 0);
  do {
    double h = 0.0;
    for (std::size_t t = 0; t < nodes.size(); ++t) {
      h += nodes[t].self_potential[config[t]];
      if (nodes[t].parent >= 0)
        h += tree.edge_energy(static_cast<int>(t), config[t], config[nodes[t].parent]);
    }
    log_weights[config[0]].push_back(-h);
  } while ([&] {
    for (int t = static_cast<int>(config.size()) - 1; t >= 0; --t) {
      if (++config[t] < radices[t]) return true;
      config[t] = 0;
    }
    return false;
  }());
  std::vector<double> log_marginal(k_root);
  for (int x = 0; x < k_root; ++x) log_marginal[x] = log_sum_exp(log_weights[x]);
  return normalize_from_log(log_marginal);
}

struct EquivalenceResult {
  double tv_gap = 0.0;
  bool pass = false;
};

/// Runs n synchronous LBP rounds from the given initialization, then checks
/// that the belief at the root equals the root marginal of the depth-n
/// lifted computation tree built from the same initialization.
inline EquivalenceResult equivalence_check(const PairwiseModel& model, int root, int depth,
                                           const MessageSet& init, double threshold = 1e-9,
                                           std::size_t node_cap = 1'000'000) {
  MessageSet msgs = init;
  for (int n = 0; n < depth; ++n) msgs = update_round(model, msgs);
  std::vector<double> lbp_belief = beliefs(model, msgs)[root];
  ComputationTree tree = lift_potentials(build_computation_tree(model, root, depth, node_cap), init);
  std::vector<double> tree_marginal = tree_root_marginal(tree);
  double gap = tv_distance(lbp_belief, tree_marginal);
  return {gap, gap <= threshold};
}

/// DOT rendering of the tree, nodes labeled by their original node names.
inline std::string to_dot(const ComputationTree& tree) {
  const PairwiseModel& model = tree.model();
  std::string out = "graph computation_tree {\n";
  const auto& nodes = tree.nodes();
  for (std::size_t t = 0; t < nodes.size(); ++t) {
    out += "  t" + std::to_string(t) + " [label=\"" + model.node_name(nodes[t].original) + "\"];\n";
  }
  for (std::size_t t = 0; t < nodes.size(); ++t)
    if (nodes[t].parent >= 0)
      out += "  t" + std::to_string(nodes[t].parent) + " -- t" + std::to_string(t) + ";\n";
  out += "}\n";
  return out;
}

}  // namespace gibbsbp
