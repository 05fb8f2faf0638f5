#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "gibbsbp/model.hpp"
#include "gibbsbp/numeric.hpp"

namespace gibbsbp {

/// One normalized distribution per directed edge, indexed like
/// PairwiseModel::directed_edge; the message on (i,j) lives on j's states.
struct MessageSet {
  std::vector<std::vector<double>> messages;

  const std::vector<double>& operator[](int d) const { return messages[d]; }
  std::vector<double>& operator[](int d) { return messages[d]; }
  int size() const { return static_cast<int>(messages.size()); }

  bool operator==(const MessageSet&) const = default;
};

/// Beliefs, one normalized distribution per node.
using BeliefSet = std::vector<std::vector<double>>;

enum class InitMode { uniform, random };

inline MessageSet init_messages(const PairwiseModel& model, InitMode mode, std::uint64_t seed = 0) {
  MessageSet msgs;
  msgs.messages.resize(model.num_directed_edges());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.05, 1.0);  // bounded away from zero
  for (int d = 0; d < model.num_directed_edges(); ++d) {
    int to = model.directed_edge(d).to;
    std::vector<double> m(model.num_states(to), 1.0);
    if (mode == InitMode::random)
      for (auto& x : m) x = unit(rng);
    normalize_in_place(m);
    msgs.messages[d] = std::move(m);
  }
  return msgs;
}

/// Explicit initialization: one distribution per directed edge, stored
/// verbatim after validation (right length, nonnegative, normalized).
inline MessageSet init_messages(const PairwiseModel& model,
                                std::vector<std::vector<double>> values) {
  if (static_cast<int>(values.size()) != model.num_directed_edges())
    throw Error(errc::malformed_message, "expected one message per directed edge");
  for (int d = 0; d < model.num_directed_edges(); ++d) {
    int to = model.directed_edge(d).to;
    const auto& m = values[d];
    if (static_cast<int>(m.size()) != model.num_states(to))
      throw Error(errc::malformed_message, "message length does not match receiver state count");
    double sum = 0.0;
    for (double x : m) {
      if (!std::isfinite(x) || x < 0.0)
        throw Error(errc::malformed_message, "message entries must be finite and nonnegative");
      sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw Error(errc::malformed_message, "message must be normalized");
  }
  return MessageSet{std::move(values)};
}

/// One fully synchronous round: every directed edge is recomputed from the
/// input round. Messages are formed in log-domain with a max-shift, then
/// normalized, so strong potentials and deep iterations do not underflow.
inline MessageSet update_round(const PairwiseModel& model, const MessageSet& msgs) {
  MessageSet out;
  out.messages.resize(model.num_directed_edges());
  std::vector<double> in_log, out_log, terms;
  for (int d = 0; d < model.num_directed_edges(); ++d) {
    auto [i, j] = model.directed_edge(d);
    int ki = model.num_states(i), kj = model.num_states(j);
    in_log.assign(ki, 0.0);
    for (int x = 0; x < ki; ++x) in_log[x] = -model.node_potential(i)[x];
    for (int k : model.neighbors(i)) {
      if (k == j) continue;
      const auto& m = msgs[model.directed_index(k, i)];
      for (int x = 0; x < ki; ++x) in_log[x] += std::log(m[x]);
    }
    out_log.assign(kj, 0.0);
    terms.resize(ki);
    for (int y = 0; y < kj; ++y) {
      for (int x = 0; x < ki; ++x) terms[x] = -model.pair_energy(i, j, x, y) + in_log[x];
      out_log[y] = log_sum_exp(terms);
    }
    out.messages[d] = normalize_from_log(out_log);
  }
  return out;
}

/// Beliefs from a message set: b_i = eta exp(-phi_i) prod of incoming messages.
inline BeliefSet beliefs(const PairwiseModel& model, const MessageSet& msgs) {
  BeliefSet b(model.num_nodes());
  std::vector<double> log_b;
  for (int i = 0; i < model.num_nodes(); ++i) {
    int ki = model.num_states(i);
    log_b.assign(ki, 0.0);
    for (int x = 0; x < ki; ++x) log_b[x] = -model.node_potential(i)[x];
    for (int k : model.neighbors(i)) {
      const auto& m = msgs[model.directed_index(k, i)];
      for (int x = 0; x < ki; ++x) log_b[x] += std::log(m[x]);
    }
    b[i] = normalize_from_log(log_b);
  }
  return b;
}

/// Total variation distance between two distributions on the same space.
inline double tv_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw Error(errc::shape_mismatch, "tv_distance length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - q[i]);
  return 0.5 * acc;
}

/// Max TV over directed edges; the engine's convergence metric.
inline double message_distance(const MessageSet& a, const MessageSet& b) {
  if (a.size() != b.size()) throw Error(errc::shape_mismatch, "message set size mismatch");
  double acc = 0.0;
  for (int d = 0; d < a.size(); ++d) acc = std::max(acc, tv_distance(a[d], b[d]));
  return acc;
}

enum class LbpStatus { converged, max_iterations, oscillating };

inline std::string_view to_string(LbpStatus s) {
  switch (s) {
    case LbpStatus::converged: return "converged";
    case LbpStatus::max_iterations: return "max-iterations";
    case LbpStatus::oscillating: return "oscillating";
  }
  return "unknown";
}

struct LbpOptions {
  double tolerance = 1e-10;
  int max_iterations = 10000;
  int period_window = 16;  // how far back the oscillation detector looks
};

struct ConvergenceReport {
  LbpStatus status = LbpStatus::max_iterations;
  int iterations = 0;
  double final_residual = std::numeric_limits<double>::quiet_NaN();
  MessageSet messages;
  BeliefSet beliefs;
  std::vector<double> residual_trace;  // successive-round residual, per round
  std::optional<int> detected_period;  // present only when oscillating
};

/// Iterates synchronous rounds until the successive-round residual drops to
/// the tolerance, the trajectory revisits a round seen up to period_window
/// rounds earlier (declared oscillating, period >= 2), or the iteration
/// budget runs out.
inline ConvergenceReport run(const PairwiseModel& model, MessageSet init, const LbpOptions& opts = {}) {
  if (!(opts.tolerance > 0.0)) throw Error(errc::bad_argument, "tolerance must be positive");
  if (opts.max_iterations < 1) throw Error(errc::bad_argument, "max_iterations must be at least 1");

  ConvergenceReport report;
  std::deque<MessageSet> past;  // most recent round at the back
  past.push_back(std::move(init));
  for (int n = 1; n <= opts.max_iterations; ++n) {
    MessageSet next = update_round(model, past.back());
    double residual = message_distance(next, past.back());
    report.residual_trace.push_back(residual);
    report.iterations = n;
    report.final_residual = residual;
    if (residual <= opts.tolerance) {
      report.status = LbpStatus::converged;
      report.messages = std::move(next);
      break;
    }
    for (int p = 2; p <= std::min<int>(opts.period_window, static_cast<int>(past.size())); ++p) {
      if (message_distance(next, past[past.size() - p]) <= opts.tolerance) {
        report.status = LbpStatus::oscillating;
        report.detected_period = p;
        break;
      }
    }
    if (report.status == LbpStatus::oscillating) {
      report.messages = std::move(next);
      break;
    }
    past.push_back(std::move(next));
    if (static_cast<int>(past.size()) > opts.period_window + 1) past.pop_front();
    if (n == opts.max_iterations) report.messages = past.back();
  }
  report.beliefs = beliefs(model, report.messages);
  return report;
}

struct RestartRun {
  ConvergenceReport report;
  std::optional<int> cluster;  // fixed-point cluster id; absent if not converged
};

struct MultiRestartResult {
  std::vector<RestartRun> runs;
  int num_clusters = 0;
};

/// Runs LBP from seeded-random initializations and clusters the converged
/// message sets (greedy, max-TV threshold 10x tolerance). The number of
/// clusters estimates the number of distinct fixed points reached.
inline MultiRestartResult multi_restart(const PairwiseModel& model, int num_restarts,
                                        std::uint64_t seed, const LbpOptions& opts = {}) {
  if (num_restarts < 1) throw Error(errc::bad_argument, "need at least one restart");
  std::mt19937_64 master(seed);
  MultiRestartResult result;
  std::vector<std::size_t> rep_runs;  // run index of each cluster representative
  for (int r = 0; r < num_restarts; ++r) {
    std::uint64_t run_seed = master();
    RestartRun rr{run(model, init_messages(model, InitMode::random, run_seed), opts), std::nullopt};
    if (rr.report.status == LbpStatus::converged) {
      for (std::size_t c = 0; c < rep_runs.size(); ++c) {
        if (message_distance(rr.report.messages, result.runs[rep_runs[c]].report.messages) <=
            10.0 * opts.tolerance) {
          rr.cluster = static_cast<int>(c);
          break;
        }
      }
      if (!rr.cluster) {
        rr.cluster = static_cast<int>(rep_runs.size());
        rep_runs.push_back(result.runs.size());
      }
    }
    result.runs.push_back(std::move(rr));
  }
  result.num_clusters = static_cast<int>(rep_runs.size());
  return result;
}

}  // namespace gibbsbp
