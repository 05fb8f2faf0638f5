#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "gibbsbp/model.hpp"

namespace gibbsbp {

/// log(sum_i exp(x_i)) with a max-shift; -inf entries are allowed and drop out.
inline double log_sum_exp(std::span<const double> xs) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : xs) hi = std::max(hi, x);
  if (!std::isfinite(hi)) return hi;  // all -inf (or an explicit +inf upstream bug)
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

/// Turns log-weights into a normalized probability vector (the eta map,
/// applied in log-domain with a max-shift). Throws on a zero normalizer.
inline std::vector<double> normalize_from_log(std::span<const double> log_weights) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : log_weights) hi = std::max(hi, x);
  if (!std::isfinite(hi))
    throw Error(errc::numerical_failure, "normalizer vanished: all log-weights are -inf");
  std::vector<double> p(log_weights.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(log_weights[i] - hi);
    sum += p[i];
  }
  for (auto& x : p) x /= sum;
  return p;
}

/// Normalizes a vector of nonnegative weights in place; throws if the sum
/// is zero or non-finite.
inline void normalize_in_place(std::vector<double>& weights) {
  double sum = 0.0;
  for (double x : weights) sum += x;
  if (!(sum > 0.0) || !std::isfinite(sum))
    throw Error(errc::numerical_failure, "normalizer is zero or non-finite");
  for (auto& x : weights) x /= sum;
}

}  // namespace gibbsbp
