#pragma once

#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "gibbsbp/lbp.hpp"
#include "gibbsbp/model.hpp"
#include "gibbsbp/numeric.hpp"

namespace gibbsbp {

/// Per-edge transfer matrices
///   Q_{i,j}(x,y) = exp(-(phi_ij(x,y) + phi_i(x)/deg(i) + phi_j(y)/deg(j))),
/// which absorb the pair potential and an equal split of each endpoint's
/// self-potential. Isolated nodes carry no transfer matrix.
class TransferMatrices {
 public:
  explicit TransferMatrices(const PairwiseModel& model) : model_(&model) {
    q_.reserve(model.num_edges());
    for (int e = 0; e < model.num_edges(); ++e) {
      auto [u, v] = model.edge_endpoints(e);
      Matrix q(model.num_states(u), model.num_states(v));
      for (int x = 0; x < q.rows(); ++x)
        for (int y = 0; y < q.cols(); ++y)
          q(x, y) = std::exp(-(model.edge_potential(e)(x, y) +
                               model.node_potential(u)[x] / model.degree(u) +
                               model.node_potential(v)[y] / model.degree(v)));
      q_.push_back(std::move(q));
    }
  }

  const PairwiseModel& model() const { return *model_; }

  /// Matrix for edge e, rows indexed by the first stored endpoint's state.
  const Matrix& edge_matrix(int e) const { return q_[e]; }

  /// Orientation-aware entry: q(i,j,xi,xj) == q(j,i,xj,xi).
  double q(int i, int j, int xi, int xj) const {
    int e = model_->edge_between(i, j);
    if (e < 0) throw Error(errc::bad_argument, "no edge between requested nodes");
    return i == model_->edge_endpoints(e).first ? q_[e](xi, xj) : q_[e](xj, xi);
  }

 private:
  const PairwiseModel* model_;
  std::vector<Matrix> q_;
};

inline TransferMatrices transfer_matrices(const PairwiseModel& model) {
  return TransferMatrices(model);
}

/// One strictly positive measure per directed edge, l_(i,j) living on the
/// sender i's states. Any positive scaling represents the same law; the
/// stored form is normalized to sum 1 as the canonical representative.
class BoundaryLaw {
 public:
  BoundaryLaw(const PairwiseModel& model, std::vector<std::vector<double>> raw) {
    if (static_cast<int>(raw.size()) != model.num_directed_edges())
      throw Error(errc::bad_argument, "expected one boundary-law vector per directed edge");
    for (int d = 0; d < model.num_directed_edges(); ++d) {
      int from = model.directed_edge(d).from;
      if (static_cast<int>(raw[d].size()) != model.num_states(from))
        throw Error(errc::shape_mismatch, "boundary-law length does not match sender state count");
      for (double x : raw[d])
        if (!(x > 0.0) || !std::isfinite(x))
          throw Error(errc::nonpositive_message, "boundary-law entries must be positive and finite");
      normalize_in_place(raw[d]);
    }
    law_ = std::move(raw);
  }

  const std::vector<double>& operator[](int d) const { return law_[d]; }
  int size() const { return static_cast<int>(law_.size()); }

  bool operator==(const BoundaryLaw&) const = default;

 private:
  std::vector<std::vector<double>> law_;
};

/// Converts an LBP fixed point into a boundary law:
///   l_(i,j)(x) = eta[ exp(-phi_i(x) * (deg(i)-1)/deg(i)) * prod_{k in di\j} m_(k,i)(x) ].
///
/// Why this exponent: substituting l into the right side of the boundary-law
/// equation (see boundary_law_residual) gives, per factor k,
///   sum_{x_k} Q_{k,i}(x_k,x) l_(k,i)(x_k)
///     prop exp(-phi_i(x)/deg(i)) * sum_{x_k} exp(-(phi_ki(x_k,x) + phi_k(x_k))) prod_{l in dk\i} m_(l,k)(x_k)
/// because Q's split term phi_k/deg(k) and l_(k,i)'s exponent
/// (deg(k)-1)/deg(k) recombine into the full phi_k. At a message fixed point
/// the sum is proportional to m_(k,i)(x), so the product over the deg(i)-1
/// factors k reproduces exp(-phi_i(x)*(deg(i)-1)/deg(i)) * prod m_(k,i)(x),
/// which is l_(i,j)(x) again. The residual check below enforces this.
inline BoundaryLaw messages_to_boundary_law(const PairwiseModel& model, const MessageSet& msgs) {
  if (msgs.size() != model.num_directed_edges())
    throw Error(errc::malformed_message, "message set does not match the model");
  std::vector<std::vector<double>> law(model.num_directed_edges());
  std::vector<double> log_l;
  for (int d = 0; d < model.num_directed_edges(); ++d) {
    auto [i, j] = model.directed_edge(d);
    int ki = model.num_states(i);
    double frac = static_cast<double>(model.degree(i) - 1) / model.degree(i);
    log_l.assign(ki, 0.0);
    for (int x = 0; x < ki; ++x) log_l[x] = -model.node_potential(i)[x] * frac;
    for (int k : model.neighbors(i)) {
      if (k == j) continue;
      const auto& m = msgs[model.directed_index(k, i)];
      for (int x = 0; x < ki; ++x) {
        if (!(m[x] > 0.0))
          throw Error(errc::nonpositive_message, "conversion requires strictly positive messages");
        log_l[x] += std::log(m[x]);
      }
    }
    law[d] = normalize_from_log(log_l);
  }
  return BoundaryLaw(model, std::move(law));
}

/// Max TV deviation, over directed edges, between the stored law and the
/// right-hand side of the boundary-law fixed-point equation
///   l_(i,j)(x) = eta prod_{k in di\j} sum_{x_k} Q_{k,i}(x_k, x) l_(k,i)(x_k).
/// Zero exactly at a boundary law (up to the scaling freedom, which the
/// canonical normalization removes).
inline double boundary_law_residual(const PairwiseModel& model, const BoundaryLaw& law) {
  TransferMatrices q(model);
  double residual = 0.0;
  std::vector<double> log_rhs;
  for (int d = 0; d < model.num_directed_edges(); ++d) {
    auto [i, j] = model.directed_edge(d);
    int ki = model.num_states(i);
    log_rhs.assign(ki, 0.0);
    for (int k : model.neighbors(i)) {
      if (k == j) continue;
      const auto& l_ki = law[model.directed_index(k, i)];
      for (int x = 0; x < ki; ++x) {
        double sum = 0.0;
        for (int xk = 0; xk < model.num_states(k); ++xk) sum += q.q(k, i, xk, x) * l_ki[xk];
        log_rhs[x] += std::log(sum);
      }
    }
    residual = std::max(residual, tv_distance(law[d], normalize_from_log(log_rhs)));
  }
  return residual;
}

struct ChainMarginal {
  std::vector<int> nodes;  // region plus boundary, ascending node index
  std::vector<double> probabilities;  // over the nodes' joint states, last node fastest
};

/// Joint distribution over a connected region and its boundary, built from a
/// boundary law: boundary factors l_(k, k_in) at each boundary node (k_in
/// its unique neighbor inside the region) times transfer matrices on every
/// edge touching the region, normalized. Callers should first confirm the
/// law's residual is small; the construction is only meaningful near a
/// boundary law.
inline ChainMarginal chain_marginal(const PairwiseModel& model, const BoundaryLaw& law,
                                    const std::vector<int>& lambda,
                                    std::uint64_t max_configurations = std::uint64_t{1} << 24) {
  if (lambda.empty()) throw Error(errc::bad_argument, "region must be non-empty");
  std::set<int> inside;
  for (int i : lambda) {
    if (i < 0 || i >= model.num_nodes()) throw Error(errc::unknown_node, "node index out of range");
    if (!inside.insert(i).second) throw Error(errc::bad_argument, "duplicate node in region");
  }
  // connectivity in the Markov graph
  std::vector<int> stack{*inside.begin()};
  std::set<int> seen{*inside.begin()};
  while (!stack.empty()) {
    int i = stack.back();
    stack.pop_back();
    for (int j : model.neighbors(i))
      if (inside.count(j) && seen.insert(j).second) stack.push_back(j);
  }
  if (seen.size() != inside.size())
    throw Error(errc::disconnected_region, "region is not connected in the Markov graph");

  // boundary nodes and their unique inside neighbor
  std::vector<std::pair<int, int>> boundary;  // (k, k_in)
  std::set<int> support(inside.begin(), inside.end());
  for (int i : lambda)
    for (int k : model.neighbors(i)) {
      if (inside.count(k)) continue;
      if (support.insert(k).second) {
        boundary.emplace_back(k, i);
      } else {
        for (auto& [node, in] : boundary)
          if (node == k && in != i)
            throw Error(errc::ambiguous_boundary,
                        "boundary node '" + model.node_name(k) +
                            "' has several neighbors inside the region");
      }
    }

  ChainMarginal out;
  out.nodes.assign(support.begin(), support.end());
  std::vector<int> position(model.num_nodes(), -1);
  std::vector<int> radices(out.nodes.size());
  std::uint64_t count = 1;
  for (std::size_t k = 0; k < out.nodes.size(); ++k) {
    position[out.nodes[k]] = static_cast<int>(k);
    radices[k] = model.num_states(out.nodes[k]);
    if (count > max_configurations / radices[k])
      throw Error(errc::cap_exceeded, "chain marginal region too large to enumerate");
    count *= radices[k];
  }
  std::vector<int> touching;
  for (int e = 0; e < model.num_edges(); ++e) {
    auto [u, v] = model.edge_endpoints(e);
    if (inside.count(u) || inside.count(v)) touching.push_back(e);
  }

  TransferMatrices q(model);
  std::vector<double> log_weights(count);
  Configuration sub(out.nodes.size(), 0);
  std::size_t idx = 0;
  do {
    double acc = 0.0;
    for (const auto& [k, k_in] : boundary)
      acc += std::log(law[model.directed_index(k, k_in)][sub[position[k]]]);
    for (int e : touching) {
      auto [u, v] = model.edge_endpoints(e);
      acc += std::log(q.edge_matrix(e)(sub[position[u]], sub[position[v]]));
    }
    log_weights[idx++] = acc;
  } while ([&] {
    for (int t = static_cast<int>(sub.size()) - 1; t >= 0; --t) {
      if (++sub[t] < radices[t]) return true;
      sub[t] = 0;
    }
    return false;
  }());
  out.probabilities = normalize_from_log(log_weights);
  return out;
}

}  // namespace gibbsbp
