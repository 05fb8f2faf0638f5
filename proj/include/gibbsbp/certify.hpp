#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "gibbsbp/computation_tree.hpp"
#include "gibbsbp/lbp.hpp"
#include "gibbsbp/model.hpp"

namespace gibbsbp {

/// Dobrushin-style convergence certificate. For a pairwise model the
/// per-node influence sum is sum_{j in di} delta(phi_ij); self-potentials
/// contribute nothing. The condition max_i sum < 2 (strict) certifies a
/// unique limit, hence convergence from every initialization. The rate
/// constant c = e^2 * max-sum feeds the geometric bound gap(n) <= k e^{-n}
/// with k = (1-c)^{-1}; k is only reported when c < 1, since the formula
/// turns negative on [1,2) and cannot bound a nonnegative gap. That regime
/// is flagged as inapplicable rather than papered over.
struct Certificate {
  std::vector<double> node_sums;
  double max_sum = 0.0;
  bool certified = false;
  double rate_constant = 0.0;  // c = e^2 * max_sum, always reported
  bool rate_bound_applicable = false;  // c < 1
  std::optional<double> rate_prefactor;  // k = 1/(1-c), present iff applicable
};

inline Certificate dobrushin_certificate(const PairwiseModel& model) {
  Certificate cert;
  cert.node_sums.assign(model.num_nodes(), 0.0);
  for (int e = 0; e < model.num_edges(); ++e) {
    auto [u, v] = model.edge_endpoints(e);
    double delta = oscillation(model.edge_potential(e));
    cert.node_sums[u] += delta;
    cert.node_sums[v] += delta;
  }
  cert.max_sum = 0.0;
  for (double s : cert.node_sums) cert.max_sum = std::max(cert.max_sum, s);
  cert.certified = cert.max_sum < 2.0;
  cert.rate_constant = std::exp(2.0) * cert.max_sum;
  cert.rate_bound_applicable = cert.rate_constant < 1.0;
  if (cert.rate_bound_applicable) cert.rate_prefactor = 1.0 / (1.0 - cert.rate_constant);
  return cert;
}

/// (c, k) as above; k absent when the bound is inapplicable.
inline std::pair<double, std::optional<double>> rate_constant(const PairwiseModel& model) {
  Certificate cert = dobrushin_certificate(model);
  return {cert.rate_constant, cert.rate_prefactor};
}

struct RatePoint {
  int depth = 0;
  double gap = 0.0;  // max-norm difference at the root
};

/// Empirical companion to the rate bound: for each depth n, the max-norm gap
/// between the root marginal of the depth-n lifted computation tree (uniform
/// initialization) and the LBP limit belief at the root. The limit belief
/// stands in for the idealized limiting marginal; it is a computable proxy,
/// not the same object. Requires LBP to converge from the uniform start.
inline std::vector<RatePoint> empirical_rate(const PairwiseModel& model, int root,
                                             const std::vector<int>& depths,
                                             const LbpOptions& opts = {},
                                             std::size_t node_cap = 1'000'000) {
  if (root < 0 || root >= model.num_nodes()) throw Error(errc::unknown_node, "unknown root node");
  MessageSet init = init_messages(model, InitMode::uniform);
  ConvergenceReport report = run(model, init, opts);
  if (report.status != LbpStatus::converged)
    throw Error(errc::not_converged, "LBP did not converge; no limit belief to compare against");
  const std::vector<double>& limit = report.beliefs[root];

  std::vector<RatePoint> points;
  points.reserve(depths.size());
  for (int n : depths) {
    ComputationTree tree = lift_potentials(build_computation_tree(model, root, n, node_cap), init);
    std::vector<double> tm = tree_root_marginal(tree);
    double gap = 0.0;
    for (std::size_t x = 0; x < tm.size(); ++x) gap = std::max(gap, std::abs(tm[x] - limit[x]));
    points.push_back({n, gap});
  }
  return points;
}

}  // namespace gibbsbp
