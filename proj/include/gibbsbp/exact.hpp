#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "gibbsbp/model.hpp"
#include "gibbsbp/numeric.hpp"

namespace gibbsbp {

struct ExactOptions {
  std::uint64_t max_configurations = std::uint64_t{1} << 24;
};

namespace detail {

/// Odometer step over mixed-radix configurations, last index fastest.
/// Returns false once the configuration wraps back to all zeros.
inline bool next_configuration(Configuration& config, const std::vector<int>& radices) {
  for (int i = static_cast<int>(config.size()) - 1; i >= 0; --i) {
    if (++config[i] < radices[i]) return true;
    config[i] = 0;
  }
  return false;
}

inline std::vector<int> node_radices(const PairwiseModel& model, const std::vector<int>& nodes) {
  std::vector<int> r(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) r[i] = model.num_states(nodes[i]);
  return r;
}

inline std::uint64_t radix_product(const std::vector<int>& radices, std::uint64_t saturate_at) {
  std::uint64_t n = 1;
  for (int k : radices) {
    if (n > saturate_at / static_cast<std::uint64_t>(k)) return saturate_at + 1;
    n *= static_cast<std::uint64_t>(k);
  }
  return n;
}

inline void require_within_cap(std::uint64_t count, std::uint64_t cap, const char* what) {
  if (count > cap)
    throw Error(errc::cap_exceeded, std::string(what) + " needs more than " + std::to_string(cap) +
                                        " configurations");
}

inline std::vector<int> checked_node_set(const PairwiseModel& model, const std::vector<int>& nodes) {
  if (nodes.empty()) throw Error(errc::bad_argument, "node set must be non-empty");
  std::set<int> seen;
  for (int i : nodes) {
    if (i < 0 || i >= model.num_nodes()) throw Error(errc::unknown_node, "node index out of range");
    if (!seen.insert(i).second) throw Error(errc::bad_argument, "duplicate node in node set");
  }
  return nodes;
}

}  // namespace detail

/// The exact finite Gibbs measure mu(w) = exp(-H(w)) * lambda(w) / Z, with
/// lambda the uniform probability measure on each state space. The choice of
/// lambda's mass only shifts the reported log-partition value; all
/// distributions produced here are normalized either way.
class ExactDistribution {
 public:
  explicit ExactDistribution(const PairwiseModel& model, ExactOptions opts = {})
      : model_(&model) {
    std::uint64_t count = model.configuration_count(opts.max_configurations);
    detail::require_within_cap(count, opts.max_configurations, "exact enumeration");
    log_lambda_ = 0.0;
    for (int i = 0; i < model.num_nodes(); ++i) log_lambda_ -= std::log(model.num_states(i));
    std::vector<double> log_weights;
    log_weights.reserve(count);
    Configuration config(model.num_nodes(), 0);
    std::vector<int> radices = detail::node_radices(model, all_nodes());
    do {
      log_weights.push_back(-energy(model, config));
    } while (detail::next_configuration(config, radices));
    log_partition_ = log_sum_exp(log_weights) + log_lambda_;
  }

  const PairwiseModel& model() const { return *model_; }
  double log_partition() const { return log_partition_; }

  double log_probability(const Configuration& config) const {
    return -energy(*model_, config) + log_lambda_ - log_partition_;
  }
  double probability(const Configuration& config) const { return std::exp(log_probability(config)); }

 private:
  std::vector<int> all_nodes() const {
    std::vector<int> ids(model_->num_nodes());
    for (int i = 0; i < model_->num_nodes(); ++i) ids[i] = i;
    return ids;
  }

  const PairwiseModel* model_;
  double log_partition_ = 0.0;
  double log_lambda_ = 0.0;
};

inline double log_partition(const PairwiseModel& model, ExactOptions opts = {}) {
  return ExactDistribution(model, opts).log_partition();
}

/// Exact marginal of the Gibbs measure on the given node set, enumerated in
/// the callers' node order with the last node's state varying fastest.
inline std::vector<double> marginal(const PairwiseModel& model, const std::vector<int>& nodes,
                                    ExactOptions opts = {}) {
  detail::checked_node_set(model, nodes);
  std::uint64_t count = model.configuration_count(opts.max_configurations);
  detail::require_within_cap(count, opts.max_configurations, "exact marginal");

  std::vector<int> all(model.num_nodes());
  for (int i = 0; i < model.num_nodes(); ++i) all[i] = i;
  std::vector<int> radices = detail::node_radices(model, all);
  std::vector<int> sub_radices = detail::node_radices(model, nodes);
  std::uint64_t sub_count = detail::radix_product(sub_radices, opts.max_configurations);
  detail::require_within_cap(sub_count, opts.max_configurations, "exact marginal");

  // Accumulate exp(-H - max_shift) per sub-configuration, then normalize.
  std::vector<double> log_weights(count);
  Configuration config(model.num_nodes(), 0);
  std::size_t idx = 0;
  double hi = -std::numeric_limits<double>::infinity();
  do {
    log_weights[idx] = -energy(model, config);
    hi = std::max(hi, log_weights[idx]);
    ++idx;
  } while (detail::next_configuration(config, radices));

  std::vector<double> acc(sub_count, 0.0);
  std::fill(config.begin(), config.end(), 0);
  idx = 0;
  do {
    std::uint64_t sub = 0;
    for (std::size_t k = 0; k < nodes.size(); ++k)
      sub = sub * static_cast<std::uint64_t>(sub_radices[k]) + config[nodes[k]];
    acc[sub] += std::exp(log_weights[idx] - hi);
    ++idx;
  } while (detail::next_configuration(config, radices));
  normalize_in_place(acc);
  return acc;
}

/// Boundary of a node set in the Markov graph.
inline std::vector<int> boundary_of(const PairwiseModel& model, const std::vector<int>& nodes) {
  std::set<int> inside(nodes.begin(), nodes.end());
  std::set<int> bd;
  for (int i : nodes)
    for (int j : model.neighbors(i))
      if (!inside.count(j)) bd.insert(j);
  return {bd.begin(), bd.end()};
}

/// Gibbs distribution in `lambda` with fixed boundary: proportional to
/// exp(-H_lambda) over the region's configurations, where H_lambda sums all
/// potentials touching the region; edges crossing the boundary read the
/// fixed boundary states. Enumerated over `lambda` in caller order, last
/// node fastest.
inline std::vector<double> conditional_gibbs(const PairwiseModel& model,
                                             const std::vector<int>& lambda,
                                             const PartialConfiguration& boundary,
                                             ExactOptions opts = {}) {
  detail::checked_node_set(model, lambda);
  std::set<int> inside(lambda.begin(), lambda.end());
  for (int b : boundary_of(model, lambda)) {
    auto it = boundary.find(b);
    if (it == boundary.end())
      throw Error(errc::missing_boundary, "boundary value missing for node '" + model.node_name(b) + "'");
    if (it->second < 0 || it->second >= model.num_states(b))
      throw Error(errc::state_out_of_range, "boundary state out of range at '" + model.node_name(b) + "'");
  }

  std::vector<int> radices = detail::node_radices(model, lambda);
  std::uint64_t count = detail::radix_product(radices, opts.max_configurations);
  detail::require_within_cap(count, opts.max_configurations, "conditional Gibbs");

  // Edges contributing to H_lambda: at least one endpoint inside.
  std::vector<int> touching;
  for (int e = 0; e < model.num_edges(); ++e) {
    auto [u, v] = model.edge_endpoints(e);
    if (inside.count(u) || inside.count(v)) touching.push_back(e);
  }
  std::vector<int> position(model.num_nodes(), -1);
  for (std::size_t k = 0; k < lambda.size(); ++k) position[lambda[k]] = static_cast<int>(k);

  std::vector<double> log_weights(count);
  Configuration sub(lambda.size(), 0);
  std::size_t idx = 0;
  do {
    double h = 0.0;
    for (std::size_t k = 0; k < lambda.size(); ++k) h += model.node_potential(lambda[k])[sub[k]];
    for (int e : touching) {
      auto [u, v] = model.edge_endpoints(e);
      int xu = position[u] >= 0 ? sub[position[u]] : boundary.at(u);
      int xv = position[v] >= 0 ? sub[position[v]] : boundary.at(v);
      h += model.edge_potential(e)(xu, xv);
    }
    log_weights[idx++] = -h;
  } while (detail::next_configuration(sub, radices));
  return normalize_from_log(log_weights);
}

/// Max deviation of the DLR identity mu*gamma_lambda = mu over a canonical
/// cylinder basis: every single-node value event plus every configuration of
/// the region itself. A correct oracle returns ~0 on any finite model; this
/// exists as a self-consistency check of the exact and conditional kernels.
inline double dlr_residual(const PairwiseModel& model, const std::vector<int>& lambda,
                           ExactOptions opts = {}) {
  detail::checked_node_set(model, lambda);
  std::uint64_t count = model.configuration_count(opts.max_configurations);
  detail::require_within_cap(count, opts.max_configurations, "DLR residual");

  ExactDistribution mu(model, opts);
  std::vector<int> all(model.num_nodes());
  for (int i = 0; i < model.num_nodes(); ++i) all[i] = i;
  std::vector<int> radices = detail::node_radices(model, all);
  std::vector<int> sub_radices = detail::node_radices(model, lambda);
  std::uint64_t sub_count = detail::radix_product(sub_radices, opts.max_configurations);
  detail::require_within_cap(sub_count, opts.max_configurations, "DLR residual");

  std::vector<int> bd = boundary_of(model, lambda);
  std::vector<int> position(model.num_nodes(), -1);
  for (std::size_t k = 0; k < lambda.size(); ++k) position[lambda[k]] = static_cast<int>(k);

  // gamma tables memoized per distinct boundary restriction, together with
  // their per-node marginals over the region.
  struct GammaTable {
    std::vector<double> table;                       // over region configurations
    std::vector<std::vector<double>> node_marginal;  // per region position
  };
  std::map<std::vector<int>, GammaTable> gamma_cache;
  auto gamma_for = [&](const Configuration& config) -> const GammaTable& {
    std::vector<int> key(bd.size());
    for (std::size_t k = 0; k < bd.size(); ++k) key[k] = config[bd[k]];
    auto it = gamma_cache.find(key);
    if (it != gamma_cache.end()) return it->second;
    PartialConfiguration boundary;
    for (std::size_t k = 0; k < bd.size(); ++k) boundary[bd[k]] = key[k];
    GammaTable g{conditional_gibbs(model, lambda, boundary, opts), {}};
    g.node_marginal.resize(lambda.size());
    for (std::size_t k = 0; k < lambda.size(); ++k)
      g.node_marginal[k].assign(sub_radices[k], 0.0);
    Configuration z(lambda.size(), 0);
    std::uint64_t zi = 0;
    do {
      for (std::size_t k = 0; k < lambda.size(); ++k) g.node_marginal[k][z[k]] += g.table[zi];
      ++zi;
    } while (detail::next_configuration(z, sub_radices));
    return gamma_cache.emplace(std::move(key), std::move(g)).first->second;
  };

  // Accumulators: mu(A) and (mu gamma)(A) for each basis event A.
  std::vector<std::vector<double>> mu_node(model.num_nodes()), mug_node(model.num_nodes());
  for (int i = 0; i < model.num_nodes(); ++i) {
    mu_node[i].assign(model.num_states(i), 0.0);
    mug_node[i].assign(model.num_states(i), 0.0);
  }
  std::vector<double> mu_region(sub_count, 0.0), mug_region(sub_count, 0.0);

  Configuration config(model.num_nodes(), 0);
  do {
    double p = mu.probability(config);
    const GammaTable& gamma = gamma_for(config);

    std::uint64_t sub = 0;
    for (std::size_t k = 0; k < lambda.size(); ++k)
      sub = sub * static_cast<std::uint64_t>(sub_radices[k]) + config[lambda[k]];
    mu_region[sub] += p;
    for (std::uint64_t z = 0; z < sub_count; ++z) mug_region[z] += p * gamma.table[z];

    for (int i = 0; i < model.num_nodes(); ++i) {
      mu_node[i][config[i]] += p;
      if (position[i] < 0)
        mug_node[i][config[i]] += p;  // kernel leaves nodes outside the region fixed
      else
        for (int x = 0; x < model.num_states(i); ++x)
          mug_node[i][x] += p * gamma.node_marginal[position[i]][x];
    }
  } while (detail::next_configuration(config, radices));

  double residual = 0.0;
  for (int i = 0; i < model.num_nodes(); ++i)
    for (int x = 0; x < model.num_states(i); ++x)
      residual = std::max(residual, std::abs(mug_node[i][x] - mu_node[i][x]));
  for (std::uint64_t z = 0; z < sub_count; ++z)
    residual = std::max(residual, std::abs(mug_region[z] - mu_region[z]));
  return residual;
}

}  // namespace gibbsbp
