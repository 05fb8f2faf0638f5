// Command-line front end: validate models, run LBP, query the exact oracle,
// emit Dobrushin certificates, check the computation-tree equivalence, and
// produce Ising-grid sweep CSVs.
//
// Exit codes: 0 success, 1 usage, 2 input error, 3 numerical/engine failure,
// 4 cap exceeded, 5 parse error, 6 model-invariant violation. Codes 5 and 6
// refine the input-error class so the three load failure modes (missing
// file, bad JSON, invalid model) are distinguishable.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gibbsbp/gibbsbp.hpp"

namespace {

using namespace gibbsbp;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitCap = 4;
constexpr int kExitParse = 5;
constexpr int kExitInvalidModel = 6;

struct RunConfig {
  std::string model_path;
  double tolerance = 1e-10;
  int max_iterations = 10000;
  std::uint64_t seed = 0;
  int restarts = 20;
  int depth = 0;
  std::string root;
  std::string output_path;
  std::string format = "json";
};

void emit(const RunConfig& cfg, const std::string& text) {
  if (cfg.output_path.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(cfg.output_path);
  if (!out) throw std::ios_base::failure("cannot write output file: " + cfg.output_path);
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case errc::cap_exceeded:
      return kExitCap;
    case errc::numerical_failure:
    case errc::not_converged:
      return kExitNumerical;
    case errc::self_loop:
    case errc::duplicate_edge:
    case errc::duplicate_node:
    case errc::shape_mismatch:
    case errc::non_finite:
    case errc::bad_state_count:
    case errc::unknown_node:
      return kExitInvalidModel;
    default:
      return kExitInput;
  }
}

PairwiseModel load_or_throw(const std::string& path) {
  if (!std::filesystem::exists(path))
    throw std::ios_base::failure("model file not found: " + path);
  return load_model(path);
}

int resolve_node(const PairwiseModel& model, const std::string& name) {
  auto idx = model.find_node(name);
  if (!idx) {
    std::cerr << "error: unknown node '" << name << "'\n";
    return -1;
  }
  return *idx;
}

std::string fmt(double x, bool full) { return full ? detail::fmt_full(x) : detail::fmt6(x); }

int cmd_validate(const RunConfig& cfg) {
  PairwiseModel model = load_or_throw(cfg.model_path);
  emit(cfg, "ok: " + std::to_string(model.num_nodes()) + " nodes, " +
                std::to_string(model.num_edges()) + " edges");
  return kExitOk;
}

json restart_summary(const MultiRestartResult& mr) {
  json runs = json::array();
  for (const auto& rr : mr.runs) {
    json r{{"status", std::string(to_string(rr.report.status))},
           {"iterations", rr.report.iterations},
           {"final_residual", rr.report.final_residual}};
    r["cluster"] = rr.cluster ? json(*rr.cluster) : json(nullptr);
    runs.push_back(std::move(r));
  }
  return {{"count", static_cast<int>(mr.runs.size())},
          {"num_clusters", mr.num_clusters},
          {"runs", runs}};
}

int cmd_lbp(const RunConfig& cfg, const std::string& init_mode) {
  PairwiseModel model = load_or_throw(cfg.model_path);
  LbpOptions opts{cfg.tolerance, cfg.max_iterations};
  MessageSet init = init_messages(
      model, init_mode == "random" ? InitMode::random : InitMode::uniform, cfg.seed);
  ConvergenceReport report = run(model, std::move(init), opts);

  std::optional<MultiRestartResult> mr;
  if (cfg.restarts > 1) mr = multi_restart(model, cfg.restarts, cfg.seed, opts);

  if (cfg.format == "text") {
    std::string out = "status: " + std::string(to_string(report.status)) + "\n";
    out += "iterations: " + std::to_string(report.iterations) + "\n";
    out += "final residual: " + fmt(report.final_residual, false) + "\n";
    if (report.detected_period)
      out += "detected period: " + std::to_string(*report.detected_period) + "\n";
    for (int i = 0; i < model.num_nodes(); ++i) {
      out += "belief " + model.node_name(i) + ":";
      for (double p : report.beliefs[i]) out += " " + fmt(p, false);
      out += "\n";
    }
    if (mr) out += "fixed-point clusters over " + std::to_string(cfg.restarts) +
                   " restarts: " + std::to_string(mr->num_clusters) + "\n";
    emit(cfg, out);
  } else {
    json j = report_to_json(model, report);
    if (mr) j["restarts"] = restart_summary(*mr);
    emit(cfg, j.dump(2));
  }
  return kExitOk;
}

int cmd_exact(const RunConfig& cfg, const std::vector<std::string>& marginal_nodes,
              std::uint64_t cap) {
  PairwiseModel model = load_or_throw(cfg.model_path);
  ExactOptions opts{cap};
  double log_z = log_partition(model, opts);
  json j{{"log_partition", log_z}};
  std::string text = "log partition: " + fmt(log_z, false) + "\n";
  if (marginal_nodes.empty()) {
    json marginals = json::object();
    for (int i = 0; i < model.num_nodes(); ++i) {
      marginals[model.node_name(i)] = marginal(model, {i}, opts);
      text += "marginal " + model.node_name(i) + ":";
      for (double p : marginal(model, {i}, opts)) text += " " + fmt(p, false);
      text += "\n";
    }
    j["marginals"] = marginals;
  } else {
    std::vector<int> nodes;
    for (const auto& name : marginal_nodes) {
      int idx = resolve_node(model, name);
      if (idx < 0) return kExitInput;
      nodes.push_back(idx);
    }
    std::vector<double> p = marginal(model, nodes, opts);
    j["joint"] = {{"nodes", marginal_nodes}, {"p", p}};
    text += "joint marginal over";
    for (const auto& n : marginal_nodes) text += " " + n;
    text += ":";
    for (double x : p) text += " " + fmt(x, false);
    text += "\n";
  }
  emit(cfg, cfg.format == "text" ? text : j.dump(2));
  return kExitOk;
}

int cmd_certify(const RunConfig& cfg) {
  PairwiseModel model = load_or_throw(cfg.model_path);
  Certificate cert = dobrushin_certificate(model);
  emit(cfg, cfg.format == "text" ? certificate_table(model, cert)
                                 : certificate_to_json(model, cert).dump(2));
  return kExitOk;
}

int cmd_ctree(const RunConfig& cfg, bool check, bool dot, const std::string& init_mode,
              std::size_t node_cap) {
  PairwiseModel model = load_or_throw(cfg.model_path);
  int root = resolve_node(model, cfg.root);
  if (root < 0) return kExitInput;
  if (dot) {
    emit(cfg, to_dot(build_computation_tree(model, root, cfg.depth, node_cap)));
    return kExitOk;
  }
  // default action: equivalence check
  (void)check;
  MessageSet init = init_messages(
      model, init_mode == "random" ? InitMode::random : InitMode::uniform, cfg.seed);
  EquivalenceResult res = equivalence_check(model, root, cfg.depth, init, 1e-9, node_cap);
  if (cfg.format == "text") {
    emit(cfg, "tv gap at depth " + std::to_string(cfg.depth) + ": " + fmt(res.tv_gap, false) +
                  (res.pass ? " (pass)" : " (FAIL)"));
  } else {
    emit(cfg, json{{"root", cfg.root},
                   {"depth", cfg.depth},
                   {"tv_gap", res.tv_gap},
                   {"pass", res.pass}}
                  .dump(2));
  }
  return res.pass ? kExitOk : kExitNumerical;
}

int cmd_sweep(const RunConfig& cfg, int rows, int cols, double j_min, double j_max, int steps,
              double field, std::uint64_t oracle_cap) {
  if (steps < 1) {
    std::cerr << "error: --steps must be at least 1\n";
    return kExitUsage;
  }
  if (j_min > j_max) {
    std::cerr << "error: --j-min must not exceed --j-max\n";
    return kExitUsage;
  }
  LbpOptions opts{cfg.tolerance, cfg.max_iterations};
  std::string csv =
      "J,dobrushin-max-sum,certified,lbp-status,iterations,num-fixed-point-clusters,"
      "max-belief-error-vs-exact\n";
  for (int i = 0; i < steps; ++i) {
    // endpoint-weighted interpolation: hits both ends and simple fractions exactly
    double coupling = steps == 1 ? j_min : (j_min * (steps - 1 - i) + j_max * i) / (steps - 1);
    PairwiseModel model = make_ising_grid(rows, cols, coupling, field);
    Certificate cert = dobrushin_certificate(model);
    ConvergenceReport report = run(model, init_messages(model, InitMode::uniform), opts);
    MultiRestartResult mr = multi_restart(model, cfg.restarts, cfg.seed, opts);
    std::string err_col;
    if (model.configuration_count(oracle_cap) <= oracle_cap) {
      ExactOptions eopts{oracle_cap};
      double err = 0.0;
      for (int n = 0; n < model.num_nodes(); ++n) {
        std::vector<double> exact_marginal = marginal(model, {n}, eopts);
        for (int x = 0; x < model.num_states(n); ++x)
          err = std::max(err, std::abs(report.beliefs[n][x] - exact_marginal[x]));
      }
      err_col = detail::fmt_full(err);
    }
    csv += detail::fmt_full(coupling);
    csv += ",";
    csv += detail::fmt_full(cert.max_sum);
    csv += ",";
    csv += cert.certified ? "true" : "false";
    csv += ",";
    csv += std::string(to_string(report.status));
    csv += "," + std::to_string(report.iterations);
    csv += "," + std::to_string(mr.num_clusters);
    csv += "," + err_col + "\n";
  }
  emit(cfg, csv);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pairwise Gibbs model inference: loopy belief propagation with "
               "computation-tree and Dobrushin-certificate tooling"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string init_mode = "uniform";
  std::vector<std::string> marginal_nodes;
  std::uint64_t enum_cap = std::uint64_t{1} << 24;
  std::size_t node_cap = 1'000'000;
  bool flag_check = false, flag_dot = false;
  int rows = 3, cols = 3, steps = 13;
  double j_min = 0.0, j_max = 0.6, field = 0.0;
  std::string family = "ising-grid";

  auto add_common = [&](CLI::App* sub, bool with_model) {
    if (with_model)
      sub->add_option("model", cfg.model_path, "model JSON file")->required();
    sub->add_option("--output", cfg.output_path, "write output to this file instead of stdout");
    sub->add_option("--format", cfg.format, "output format: json or text")
        ->check(CLI::IsMember({"json", "text"}));
  };

  CLI::App* validate = app.add_subcommand("validate", "parse and validate a model file");
  add_common(validate, true);

  CLI::App* lbp = app.add_subcommand("lbp", "run loopy belief propagation");
  add_common(lbp, true);
  lbp->add_option("--tol", cfg.tolerance, "convergence tolerance (max TV per round)");
  lbp->add_option("--max-iters", cfg.max_iterations, "iteration budget");
  lbp->add_option("--init", init_mode, "message initialization")
      ->check(CLI::IsMember({"uniform", "random"}));
  lbp->add_option("--seed", cfg.seed, "seed for random initialization and restarts");
  lbp->add_option("--restarts", cfg.restarts,
                  "random restarts for the fixed-point cluster scan (1 disables)");

  CLI::App* exact = app.add_subcommand("exact", "brute-force oracle: partition and marginals");
  add_common(exact, true);
  exact->add_option("--marginal", marginal_nodes, "node ids for a joint marginal")->delimiter(',');
  exact->add_option("--cap", enum_cap, "configuration-count cap for enumeration");

  CLI::App* certify = app.add_subcommand("certify", "Dobrushin convergence certificate");
  add_common(certify, true);

  CLI::App* ctree = app.add_subcommand("ctree", "computation-tree tools");
  add_common(ctree, true);
  ctree->add_option("--root", cfg.root, "root node id")->required();
  ctree->add_option("--depth", cfg.depth, "unrolling depth")->required();
  ctree->add_flag("--check", flag_check, "LBP vs tree-marginal equivalence check (default)");
  ctree->add_flag("--dot", flag_dot, "emit the tree in DOT format");
  ctree->add_option("--init", init_mode, "message initialization")
      ->check(CLI::IsMember({"uniform", "random"}));
  ctree->add_option("--seed", cfg.seed, "seed for random initialization");
  ctree->add_option("--node-cap", node_cap, "tree size cap");

  CLI::App* sweep = app.add_subcommand("sweep", "coupling sweep over a model family (CSV)");
  sweep->add_option("--family", family, "model family")->check(CLI::IsMember({"ising-grid"}));
  sweep->add_option("--rows", rows, "grid rows")->required();
  sweep->add_option("--cols", cols, "grid columns")->required();
  sweep->add_option("--j-min", j_min, "coupling range start")->required();
  sweep->add_option("--j-max", j_max, "coupling range end")->required();
  sweep->add_option("--steps", steps, "number of rows in the sweep")->required();
  sweep->add_option("--h", field, "external field");
  sweep->add_option("--tol", cfg.tolerance, "convergence tolerance");
  sweep->add_option("--max-iters", cfg.max_iterations, "iteration budget");
  sweep->add_option("--restarts", cfg.restarts, "restarts per row for the cluster count");
  sweep->add_option("--seed", cfg.seed, "restart seed");
  sweep->add_option("--output", cfg.output_path, "write CSV to this file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (validate->parsed()) return cmd_validate(cfg);
    if (lbp->parsed()) return cmd_lbp(cfg, init_mode);
    if (exact->parsed()) return cmd_exact(cfg, marginal_nodes, enum_cap);
    if (certify->parsed()) return cmd_certify(cfg);
    if (ctree->parsed()) {
      if (flag_check && flag_dot) {
        std::cerr << "error: --check and --dot are mutually exclusive\n";
        return kExitUsage;
      }
      return cmd_ctree(cfg, flag_check, flag_dot, init_mode, node_cap);
    }
    if (sweep->parsed()) return cmd_sweep(cfg, rows, cols, j_min, j_max, steps, field, enum_cap);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: cannot parse model file: " << e.what() << "\n";
    return kExitParse;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitUsage;
}
