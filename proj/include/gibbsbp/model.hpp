#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gibbsbp {

/// Error kinds surfaced by the library. The CLI maps these onto exit codes.
enum class errc {
  self_loop,
  duplicate_edge,
  duplicate_node,
  shape_mismatch,
  non_finite,
  bad_state_count,
  unknown_node,
  incomplete_configuration,
  state_out_of_range,
  malformed_message,
  nonpositive_message,
  missing_boundary,
  disconnected_region,
  ambiguous_boundary,
  cap_exceeded,
  numerical_failure,
  not_converged,
  bad_argument,
};

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

/// Dense row-major matrix of energies.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {
    if (rows < 1 || cols < 1) throw Error(errc::bad_argument, "matrix dimensions must be positive");
  }

  static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty() || rows.front().empty())
      throw Error(errc::shape_mismatch, "matrix rows must be non-empty");
    Matrix m(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
    for (int r = 0; r < m.rows_; ++r) {
      if (static_cast<int>(rows[r].size()) != m.cols_)
        throw Error(errc::shape_mismatch, "ragged matrix rows");
      for (int c = 0; c < m.cols_; ++c) m(r, c) = rows[r][c];
    }
    return m;
  }

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  std::span<const double> entries() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

/// Raw, unvalidated model description as it appears in model files.
struct NodeSpec {
  std::string id;
  int states = 0;
  std::vector<double> phi;  // self-potential energies, one per state
};

struct EdgeSpec {
  std::string u;
  std::string v;
  Matrix phi;  // pair-potential energies, rows indexed by u's state
};

struct ModelSpec {
  std::vector<NodeSpec> nodes;
  std::vector<EdgeSpec> edges;
};

/// A directed edge (from, to); the unordered pair is always an edge of the model.
struct DirectedEdge {
  int from = -1;
  int to = -1;
  bool operator==(const DirectedEdge&) const = default;
};

/// Full assignment: state index per node, indexed by node index.
using Configuration = std::vector<int>;

/// Partial assignment, node index -> state index.
using PartialConfiguration = std::map<int, int>;

/// A validated pairwise Gibbs model: node state spaces, self-potentials,
/// edge potentials, and the Markov graph they induce. Potentials are stored
/// as energies; the measure is proportional to exp(-H) times the uniform
/// reference measure on each state space. Immutable after validation.
class PairwiseModel {
 public:
  static PairwiseModel validate(const ModelSpec& spec) {
    PairwiseModel m;
    for (const auto& n : spec.nodes) {
      if (m.name_to_index_.count(n.id))
        throw Error(errc::duplicate_node, "duplicate node id '" + n.id + "'");
      if (n.states < 2)
        throw Error(errc::bad_state_count,
                    "node '" + n.id + "' must have at least 2 states, got " + std::to_string(n.states));
      if (static_cast<int>(n.phi.size()) != n.states)
        throw Error(errc::shape_mismatch, "node '" + n.id + "' self-potential has " +
                                              std::to_string(n.phi.size()) + " entries for " +
                                              std::to_string(n.states) + " states");
      for (double x : n.phi)
        if (!std::isfinite(x))
          throw Error(errc::non_finite, "non-finite self-potential entry at node '" + n.id + "'");
      m.name_to_index_.emplace(n.id, static_cast<int>(m.names_.size()));
      m.names_.push_back(n.id);
      m.states_.push_back(n.states);
      m.node_phi_.push_back(n.phi);
    }
    if (m.names_.empty()) throw Error(errc::bad_argument, "model must have at least one node");

    m.adjacency_.resize(m.names_.size());
    for (const auto& e : spec.edges) {
      auto ui = m.find_node(e.u);
      auto vi = m.find_node(e.v);
      if (!ui || !vi)
        throw Error(errc::unknown_node, "edge (" + e.u + "," + e.v + ") references unknown node");
      if (*ui == *vi) throw Error(errc::self_loop, "self-loop at node '" + e.u + "'");
      auto key = std::minmax(*ui, *vi);
      if (m.pair_to_edge_.count(key))
        throw Error(errc::duplicate_edge, "duplicate edge between '" + e.u + "' and '" + e.v + "'");
      if (e.phi.rows() != m.states_[*ui] || e.phi.cols() != m.states_[*vi])
        throw Error(errc::shape_mismatch, "edge (" + e.u + "," + e.v + ") potential is " +
                                              std::to_string(e.phi.rows()) + "x" +
                                              std::to_string(e.phi.cols()) + ", expected " +
                                              std::to_string(m.states_[*ui]) + "x" +
                                              std::to_string(m.states_[*vi]));
      for (double x : e.phi.entries())
        if (!std::isfinite(x))
          throw Error(errc::non_finite,
                      "non-finite pair-potential entry on edge (" + e.u + "," + e.v + ")");
      int eidx = static_cast<int>(m.edge_u_.size());
      m.pair_to_edge_.emplace(key, eidx);
      m.edge_u_.push_back(*ui);
      m.edge_v_.push_back(*vi);
      m.edge_phi_.push_back(e.phi);
      m.adjacency_[*ui].push_back(*vi);
      m.adjacency_[*vi].push_back(*ui);
    }
    for (auto& nbrs : m.adjacency_) std::sort(nbrs.begin(), nbrs.end());
    return m;
  }

  int num_nodes() const noexcept { return static_cast<int>(names_.size()); }
  int num_states(int i) const { return states_[i]; }
  const std::string& node_name(int i) const { return names_[i]; }
  const std::vector<double>& node_potential(int i) const { return node_phi_[i]; }

  std::optional<int> find_node(std::string_view id) const {
    auto it = name_to_index_.find(std::string(id));
    if (it == name_to_index_.end()) return std::nullopt;
    return it->second;
  }

  int num_edges() const noexcept { return static_cast<int>(edge_u_.size()); }
  std::pair<int, int> edge_endpoints(int e) const { return {edge_u_[e], edge_v_[e]}; }
  const Matrix& edge_potential(int e) const { return edge_phi_[e]; }

  /// Edge index for the unordered pair {u,v}, or -1 if absent.
  int edge_between(int u, int v) const {
    auto it = pair_to_edge_.find(std::minmax(u, v));
    return it == pair_to_edge_.end() ? -1 : it->second;
  }

  /// Pair-potential energy, orientation-aware: pair_energy(u,v,xu,xv) reads
  /// the stored matrix in whichever orientation the edge was declared.
  double pair_energy(int u, int v, int xu, int xv) const {
    int e = edge_between(u, v);
    if (e < 0) throw Error(errc::bad_argument, "no edge between requested nodes");
    return u == edge_u_[e] ? edge_phi_[e](xu, xv) : edge_phi_[e](xv, xu);
  }

  const std::vector<int>& neighbors(int i) const { return adjacency_[i]; }
  int degree(int i) const { return static_cast<int>(adjacency_[i].size()); }

  int num_directed_edges() const noexcept { return 2 * num_edges(); }

  /// Directed edges are indexed 2e (u->v) and 2e+1 (v->u) for edge e.
  DirectedEdge directed_edge(int d) const {
    int e = d / 2;
    return d % 2 == 0 ? DirectedEdge{edge_u_[e], edge_v_[e]} : DirectedEdge{edge_v_[e], edge_u_[e]};
  }

  int directed_index(int from, int to) const {
    int e = edge_between(from, to);
    if (e < 0) throw Error(errc::bad_argument, "no edge between requested nodes");
    return 2 * e + (from == edge_u_[e] ? 0 : 1);
  }

  /// Total configuration count, saturating at `saturate_at`.
  std::uint64_t configuration_count(std::uint64_t saturate_at) const {
    std::uint64_t n = 1;
    for (int k : states_) {
      if (n > saturate_at / static_cast<std::uint64_t>(k)) return saturate_at + 1;
      n *= static_cast<std::uint64_t>(k);
    }
    return n;
  }

 private:
  PairwiseModel() = default;

  std::vector<std::string> names_;
  std::map<std::string, int> name_to_index_;
  std::vector<int> states_;
  std::vector<std::vector<double>> node_phi_;
  std::vector<int> edge_u_, edge_v_;
  std::vector<Matrix> edge_phi_;
  std::map<std::pair<int, int>, int> pair_to_edge_;
  std::vector<std::vector<int>> adjacency_;
};

inline void check_configuration(const PairwiseModel& model, const Configuration& config) {
  if (static_cast<int>(config.size()) != model.num_nodes())
    throw Error(errc::incomplete_configuration,
                "configuration covers " + std::to_string(config.size()) + " of " +
                    std::to_string(model.num_nodes()) + " nodes");
  for (int i = 0; i < model.num_nodes(); ++i)
    if (config[i] < 0 || config[i] >= model.num_states(i))
      throw Error(errc::state_out_of_range, "state out of range at node '" + model.node_name(i) + "'");
}

/// Total energy H(w) = sum_i phi_i(w_i) + sum_{i,j} phi_ij(w_i, w_j).
inline double energy(const PairwiseModel& model, const Configuration& config) {
  check_configuration(model, config);
  double h = 0.0;
  for (int i = 0; i < model.num_nodes(); ++i) h += model.node_potential(i)[config[i]];
  for (int e = 0; e < model.num_edges(); ++e) {
    auto [u, v] = model.edge_endpoints(e);
    h += model.edge_potential(e)(config[u], config[v]);
  }
  return h;
}

/// Oscillation delta(f) = max f - min f of a potential's energies.
inline double oscillation(std::span<const double> values) {
  if (values.empty()) throw Error(errc::bad_argument, "oscillation of empty potential");
  double lo = values[0], hi = values[0];
  for (double x : values) {
    if (!std::isfinite(x)) throw Error(errc::non_finite, "oscillation of non-finite potential");
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  return hi - lo;
}

inline double oscillation(const Matrix& m) { return oscillation(m.entries()); }

/// rows x cols ferromagnetic-style Ising grid with spin encoding
/// sigma(0) = -1, sigma(1) = +1: phi_i(x) = -h*sigma(x),
/// phi_ij(x,y) = -J*sigma(x)*sigma(y), edges on the 4-neighbor lattice.
inline PairwiseModel make_ising_grid(int rows, int cols, double coupling, double field) {
  if (rows < 1 || cols < 1) throw Error(errc::bad_argument, "grid dimensions must be positive");
  auto sigma = [](int x) { return x == 0 ? -1.0 : 1.0; };
  ModelSpec spec;
  auto name = [](int r, int c) { return "r" + std::to_string(r) + "c" + std::to_string(c); };
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      spec.nodes.push_back({name(r, c), 2, {-field * sigma(0), -field * sigma(1)}});
  Matrix phi(2, 2);
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) phi(x, y) = -coupling * sigma(x) * sigma(y);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) spec.edges.push_back({name(r, c), name(r, c + 1), phi});
      if (r + 1 < rows) spec.edges.push_back({name(r, c), name(r + 1, c), phi});
    }
  return PairwiseModel::validate(spec);
}

/// Erdos-Renyi-style random model; deterministic for a given seed.
/// Potential energies are uniform on [-scale, scale].
inline PairwiseModel make_random_model(int num_nodes, double edge_probability, int max_states,
                                       double potential_scale, std::uint64_t seed) {
  if (num_nodes < 1) throw Error(errc::bad_argument, "need at least one node");
  if (edge_probability < 0.0 || edge_probability > 1.0)
    throw Error(errc::bad_argument, "edge probability must be in [0,1]");
  if (max_states < 2) throw Error(errc::bad_argument, "max_states must be at least 2");
  if (potential_scale < 0.0) throw Error(errc::bad_argument, "potential scale must be nonnegative");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> state_dist(2, max_states);
  std::uniform_real_distribution<double> phi_dist(-potential_scale, potential_scale);
  auto draw = [&] { return potential_scale == 0.0 ? 0.0 : phi_dist(rng); };

  ModelSpec spec;
  for (int i = 0; i < num_nodes; ++i) {
    NodeSpec n{"n" + std::to_string(i), state_dist(rng), {}};
    n.phi.resize(n.states);
    for (auto& x : n.phi) x = draw();
    spec.nodes.push_back(std::move(n));
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < num_nodes; ++i)
    for (int j = i + 1; j < num_nodes; ++j) {
      if (unit(rng) >= edge_probability) continue;
      Matrix phi(spec.nodes[i].states, spec.nodes[j].states);
      for (int x = 0; x < phi.rows(); ++x)
        for (int y = 0; y < phi.cols(); ++y) phi(x, y) = draw();
      spec.edges.push_back({spec.nodes[i].id, spec.nodes[j].id, phi});
    }
  return PairwiseModel::validate(spec);
}

}  // namespace gibbsbp
