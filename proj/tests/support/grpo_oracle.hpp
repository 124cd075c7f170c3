#pragma once

// Brute-force evaluator of the group-relative clipped objectives, kept apart
// from the library: long double throughout, explicit sign cases instead of
// min(), and nothing shared with the implementation under test.

#include <cmath>
#include <optional>
#include <vector>

namespace testing {

using Matrix = std::vector<std::vector<double>>;

inline std::vector<long double> oracle_advantages(const std::vector<double>& rewards) {
  const long double g = rewards.size();
  long double total = 0;
  for (double r : rewards) total += r;
  const long double mean = total / g;
  long double sq = 0;
  for (double r : rewards) sq += (r - mean) * (r - mean);
  long double sd = std::sqrt(sq / g);
  if (sd < 1e-6L) sd = 1e-6L;
  std::vector<long double> a;
  for (double r : rewards) a.push_back((r - mean) / sd);
  return a;
}

/// Clipped term for one ratio. For a positive advantage the clip caps the
/// ratio from above; for a negative one it floors it from below.
inline long double oracle_clipped(long double ratio, long double adv, long double eps) {
  const long double lo = 1 - eps;
  const long double hi = 1 + eps;
  if (adv >= 0) return adv * (ratio > hi ? hi : ratio);
  return adv * (ratio < lo ? lo : ratio);
}

/// Token mode: (1/G) over samples of the sum over tokens, no KL.
inline long double oracle_token_objective(const std::vector<double>& rewards, const Matrix& lp_new,
                                          const Matrix& lp_old, long double eps) {
  const auto adv = oracle_advantages(rewards);
  long double outer = 0;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    long double inner = 0;
    for (std::size_t t = 0; t < lp_new[i].size(); ++t)
      inner += oracle_clipped(std::exp(static_cast<long double>(lp_new[i][t]) - lp_old[i][t]), adv[i], eps);
    outer += inner;
  }
  return outer / rewards.size();
}

/// Sequence mode: the ratio of whole-sequence probabilities, minus beta
/// times the group mean of summed per-token k3 KL estimates.
inline long double oracle_sequence_objective(const std::vector<double>& rewards, const Matrix& lp_new,
                                             const Matrix& lp_old, const std::optional<Matrix>& lp_ref,
                                             long double eps, long double beta) {
  const auto adv = oracle_advantages(rewards);
  long double surrogate = 0;
  long double kl = 0;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    long double p_new = 1;
    long double p_old = 1;
    for (std::size_t t = 0; t < lp_new[i].size(); ++t) {
      p_new *= std::exp(static_cast<long double>(lp_new[i][t]));
      p_old *= std::exp(static_cast<long double>(lp_old[i][t]));
    }
    surrogate += oracle_clipped(p_new / p_old, adv[i], eps);
    if (lp_ref) {
      for (std::size_t t = 0; t < lp_new[i].size(); ++t) {
        const long double ratio = std::exp(static_cast<long double>((*lp_ref)[i][t]) - lp_new[i][t]);
        kl += ratio - std::log(ratio) - 1;
      }
    }
  }
  const long double g = rewards.size();
  return surrogate / g - beta * (kl / g);
}

}  // namespace testing
