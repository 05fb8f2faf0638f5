#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gibbsbp/boundary_law.hpp"
#include "gibbsbp/certify.hpp"
#include "gibbsbp/lbp.hpp"
#include "gibbsbp/model.hpp"

namespace gibbsbp {

using json = nlohmann::json;

/// Model file schema:
///   { "nodes": [{"id": "a", "states": 2, "phi": [0.0, 0.0]}, ...],
///     "edges": [{"u": "a", "v": "b", "phi": [[...], [...]]}, ...] }
/// with edge phi row-indexed by u's state.
inline ModelSpec model_spec_from_json(const json& j) {
  ModelSpec spec;
  for (const auto& n : j.at("nodes")) {
    NodeSpec node;
    node.id = n.at("id").get<std::string>();
    node.states = n.at("states").get<int>();
    node.phi = n.at("phi").get<std::vector<double>>();
    spec.nodes.push_back(std::move(node));
  }
  if (j.contains("edges"))
    for (const auto& e : j.at("edges")) {
      EdgeSpec edge;
      edge.u = e.at("u").get<std::string>();
      edge.v = e.at("v").get<std::string>();
      edge.phi = Matrix::from_rows(e.at("phi").get<std::vector<std::vector<double>>>());
      spec.edges.push_back(std::move(edge));
    }
  return spec;
}

inline json model_to_json(const PairwiseModel& model) {
  json nodes = json::array();
  for (int i = 0; i < model.num_nodes(); ++i)
    nodes.push_back({{"id", model.node_name(i)},
                     {"states", model.num_states(i)},
                     {"phi", model.node_potential(i)}});
  json edges = json::array();
  for (int e = 0; e < model.num_edges(); ++e) {
    auto [u, v] = model.edge_endpoints(e);
    const Matrix& phi = model.edge_potential(e);
    std::vector<std::vector<double>> rows(phi.rows());
    for (int r = 0; r < phi.rows(); ++r)
      for (int c = 0; c < phi.cols(); ++c) rows[r].push_back(phi(r, c));
    edges.push_back({{"u", model.node_name(u)}, {"v", model.node_name(v)}, {"phi", rows}});
  }
  return {{"nodes", nodes}, {"edges", edges}};
}

inline PairwiseModel model_from_json(const json& j) {
  return PairwiseModel::validate(model_spec_from_json(j));
}

/// Loads and validates a model file. Throws std::ios_base::failure when the
/// file cannot be read, nlohmann::json::exception on malformed JSON or a
/// schema mismatch, and Error on a model-invariant violation.
inline PairwiseModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open model file: " + path.string());
  json j = json::parse(in);
  return model_from_json(j);
}

inline json messages_to_json(const PairwiseModel& model, const MessageSet& msgs) {
  json out = json::array();
  for (int d = 0; d < model.num_directed_edges(); ++d) {
    DirectedEdge de = model.directed_edge(d);
    out.push_back({{"from", model.node_name(de.from)},
                   {"to", model.node_name(de.to)},
                   {"p", msgs[d]}});
  }
  return out;
}

inline MessageSet messages_from_json(const PairwiseModel& model, const json& j) {
  std::vector<std::vector<double>> values(model.num_directed_edges());
  std::vector<bool> filled(model.num_directed_edges(), false);
  for (const auto& m : j) {
    auto from = model.find_node(m.at("from").get<std::string>());
    auto to = model.find_node(m.at("to").get<std::string>());
    if (!from || !to) throw Error(errc::unknown_node, "message references unknown node");
    int d = model.directed_index(*from, *to);
    values[d] = m.at("p").get<std::vector<double>>();
    filled[d] = true;
  }
  for (bool f : filled)
    if (!f) throw Error(errc::malformed_message, "missing message for a directed edge");
  return init_messages(model, std::move(values));
}

inline json beliefs_to_json(const PairwiseModel& model, const BeliefSet& b) {
  json out = json::object();
  for (int i = 0; i < model.num_nodes(); ++i) out[model.node_name(i)] = b[i];
  return out;
}

inline json report_to_json(const PairwiseModel& model, const ConvergenceReport& report) {
  json j{{"status", std::string(to_string(report.status))},
         {"iterations", report.iterations},
         {"final_residual", report.final_residual},
         {"residual_trace", report.residual_trace},
         {"beliefs", beliefs_to_json(model, report.beliefs)},
         {"messages", messages_to_json(model, report.messages)}};
  j["detected_period"] = report.detected_period ? json(*report.detected_period) : json(nullptr);
  return j;
}

inline ConvergenceReport report_from_json(const PairwiseModel& model, const json& j) {
  ConvergenceReport report;
  std::string status = j.at("status").get<std::string>();
  if (status == "converged")
    report.status = LbpStatus::converged;
  else if (status == "max-iterations")
    report.status = LbpStatus::max_iterations;
  else if (status == "oscillating")
    report.status = LbpStatus::oscillating;
  else
    throw Error(errc::bad_argument, "unknown LBP status '" + status + "'");
  report.iterations = j.at("iterations").get<int>();
  report.final_residual = j.at("final_residual").get<double>();
  report.residual_trace = j.at("residual_trace").get<std::vector<double>>();
  report.messages = messages_from_json(model, j.at("messages"));
  if (!j.at("detected_period").is_null())
    report.detected_period = j.at("detected_period").get<int>();
  const json& jb = j.at("beliefs");
  report.beliefs.resize(model.num_nodes());
  for (int i = 0; i < model.num_nodes(); ++i)
    report.beliefs[i] = jb.at(model.node_name(i)).get<std::vector<double>>();
  return report;
}

inline json boundary_law_to_json(const PairwiseModel& model, const BoundaryLaw& law) {
  json out = json::array();
  for (int d = 0; d < model.num_directed_edges(); ++d) {
    DirectedEdge de = model.directed_edge(d);
    out.push_back({{"from", model.node_name(de.from)},
                   {"to", model.node_name(de.to)},
                   {"l", law[d]}});
  }
  return out;
}

inline json certificate_to_json(const PairwiseModel& model, const Certificate& cert) {
  json nodes = json::array();
  for (int i = 0; i < model.num_nodes(); ++i)
    nodes.push_back({{"id", model.node_name(i)},
                     {"sum", cert.node_sums[i]},
                     {"margin", 2.0 - cert.node_sums[i]}});
  json j{{"nodes", nodes},
         {"max_sum", cert.max_sum},
         {"certified", cert.certified},
         {"rate_constant", cert.rate_constant},
         {"rate_bound_applicable", cert.rate_bound_applicable}};
  j["rate_prefactor"] = cert.rate_prefactor ? json(*cert.rate_prefactor) : json(nullptr);
  return j;
}

namespace detail {
inline std::string fmt6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}
inline std::string fmt_full(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}
}  // namespace detail

/// Human-readable certificate table: node, influence sum, margin to 2.
inline std::string certificate_table(const PairwiseModel& model, const Certificate& cert) {
  std::string out = "node            sum        margin-to-2\n";
  for (int i = 0; i < model.num_nodes(); ++i) {
    char line[128];
    std::snprintf(line, sizeof line, "%-15s %-10s %s\n", model.node_name(i).c_str(),
                  detail::fmt6(cert.node_sums[i]).c_str(),
                  detail::fmt6(2.0 - cert.node_sums[i]).c_str());
    out += line;
  }
  out += "max-sum " + detail::fmt6(cert.max_sum) + " -> " +
         (cert.certified ? "certified (unique fixed point, LBP converges)"
                         : "not certified (no convergence guarantee)") +
         "\n";
  out += "rate constant c = " + detail::fmt6(cert.rate_constant);
  if (cert.rate_prefactor)
    out += ", geometric bound prefactor k = " + detail::fmt6(*cert.rate_prefactor) + "\n";
  else
    out += ", rate bound inapplicable (c >= 1: the prefactor formula is not a bound there)\n";
  return out;
}

}  // namespace gibbsbp
