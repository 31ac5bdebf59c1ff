// Copyright (c) 2026 the binmp authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "binmp/errors.hpp"

namespace binmp {

// Uniform probability grid on [0,1]: K centers at k/(K-1), so the endpoints 0
// and 1 (where converged messages concentrate) are exact centers.
class BinGrid {
 public:
  explicit BinGrid(int k_bins) : k_(k_bins) {
    if (k_bins < 2) throw ContractViolation("BinGrid: K must be >= 2");
    centers_.resize(k_bins);
    for (int k = 0; k < k_bins; ++k)
      centers_[k] = static_cast<double>(k) / static_cast<double>(k_bins - 1);
  }

  int k_bins() const { return k_; }
  std::span<const double> centers() const { return centers_; }

  double center(int k) const {
    if (k < 0 || k >= k_) throw ContractViolation("bin_center: index out of range");
    return centers_[k];
  }

  // Nearest-center index; ties between centers round half-up.
  int index(double p) const {
    if (!(p >= 0.0 && p <= 1.0)) throw ContractViolation("bin_index: p outside [0,1]");
    const int k = static_cast<int>(std::floor(p * (k_ - 1) + 0.5));
    return k < 0 ? 0 : (k >= k_ ? k_ - 1 : k);
  }

  bool operator==(const BinGrid&) const = default;

 private:
  int k_ = 0;
  std::vector<double> centers_;
};

inline int bin_index(double p, const BinGrid& grid) { return grid.index(p); }
inline double bin_center(int k, const BinGrid& grid) { return grid.center(k); }

// Convex blend (1-gamma)*old + gamma*fresh.
inline double damp(double old_value, double fresh_value, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ContractViolation("damp: gamma outside [0,1]");
  return (1.0 - gamma) * old_value + gamma * fresh_value;
}

// In-place scale so the entries sum to 1. Entries must be nonnegative with at
// least one strictly positive; an all-zero histogram has no normalization.
inline void normalize_histogram(std::span<double> hist) {
  double total = 0.0;
  for (double v : hist) {
    if (v < 0.0) throw ContractViolation("normalize_histogram: negative entry");
    total += v;
  }
  if (total <= 0.0) throw DegenerateSurveyError("normalize_histogram: all-zero histogram");
  for (double& v : hist) v /= total;
}

inline std::vector<double> normalize_histogram(std::vector<double> hist) {
  normalize_histogram(std::span<double>(hist));
  return hist;
}

// Blend two normalized histograms of equal length, renormalizing the result.
inline void damp_histogram(std::span<double> old_then_result,
                           std::span<const double> fresh, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ContractViolation("damp: gamma outside [0,1]");
  if (old_then_result.size() != fresh.size())
    throw ContractViolation("damp: shape mismatch");
  for (std::size_t k = 0; k < fresh.size(); ++k)
    old_then_result[k] = (1.0 - gamma) * old_then_result[k] + gamma * fresh[k];
  normalize_histogram(old_then_result);
}

}  // namespace binmp
