#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace mcdode {

/// Coefficient of determination, 1 - SS_res/SS_tot. Degenerate targets
/// (SS_tot = 0) report no value instead of propagating NaN.
inline std::optional<double> r_square(std::span<const double> estimate,
                                      std::span<const double> truth) {
  if (estimate.size() != truth.size())
    throw std::invalid_argument("r_square shape mismatch");
  double mean = 0.0;
  for (double v : truth) mean += v;
  mean /= truth.size();
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ss_res += (truth[i] - estimate[i]) * (truth[i] - estimate[i]);
    ss_tot += (truth[i] - mean) * (truth[i] - mean);
  }
  if (ss_tot == 0.0) return std::nullopt;
  return 1.0 - ss_res / ss_tot;
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace mcdode
