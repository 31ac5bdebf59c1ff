// Copyright (c) 2026 the binmp authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <concepts>
#include <numeric>
#include <span>
#include <vector>

#include "binmp/errors.hpp"
#include "binmp/problem.hpp"

namespace binmp {

// What the engines need from a factor graph: the bipartite structure plus a
// nonnegative value per (factor, configuration). Configurations passed in are
// always full length N; a factor reads only its scope positions.
template <typename T>
concept FactorSystemLike = requires(const T& fs, int idx, const Configuration& w) {
  { fs.num_vars() } -> std::convertible_to<int>;
  { fs.num_factors() } -> std::convertible_to<int>;
  { fs.scope(idx) } -> std::convertible_to<std::span<const int>>;
  { fs.var_factors(idx) } -> std::convertible_to<std::span<const int>>;
  { fs.factor_value(idx, w) } -> std::convertible_to<double>;
  { fs.satisfied(idx, w) } -> std::convertible_to<bool>;
};

// Dense view of a Problem: every factor touches every weight bit.
class BnnFactorSystem {
 public:
  explicit BnnFactorSystem(const Problem& problem) : problem_(&problem) {
    all_vars_.resize(problem.num_vars());
    std::iota(all_vars_.begin(), all_vars_.end(), 0);
    all_factors_.resize(problem.num_examples());
    std::iota(all_factors_.begin(), all_factors_.end(), 0);
  }

  int num_vars() const { return static_cast<int>(all_vars_.size()); }
  int num_factors() const { return static_cast<int>(all_factors_.size()); }
  std::span<const int> scope(int) const { return all_vars_; }
  std::span<const int> var_factors(int) const { return all_factors_; }
  double factor_value(int I, const Configuration& w) const {
    return problem_->relaxed_factor_eval(w, I);
  }
  bool satisfied(int I, const Configuration& w) const {
    return problem_->factor_eval(w, I);
  }
  const Problem& problem() const { return *problem_; }

 private:
  const Problem* problem_;
  std::vector<int> all_vars_, all_factors_;
};

// Sparse factor graph with explicit value tables. The table row for a
// configuration is indexed by Sum_j w[scope[j]] << j. Used by tests for
// tree-structured instances and arbitrary small factors.
class TableFactorSystem {
 public:
  TableFactorSystem(int n_vars, std::vector<std::vector<int>> scopes,
                    std::vector<std::vector<double>> tables)
      : n_vars_(n_vars), scopes_(std::move(scopes)), tables_(std::move(tables)) {
    if (scopes_.size() != tables_.size())
      throw ContractViolation("TableFactorSystem: scope/table count mismatch");
    var_factors_.resize(n_vars_);
    for (int I = 0; I < static_cast<int>(scopes_.size()); ++I) {
      const auto& scope = scopes_[I];
      if (tables_[I].size() != (std::size_t{1} << scope.size()))
        throw ContractViolation("TableFactorSystem: table size != 2^|scope|");
      for (int v : scope) {
        if (v < 0 || v >= n_vars_)
          throw ContractViolation("TableFactorSystem: scope variable out of range");
        var_factors_[v].push_back(I);
      }
      for (double f : tables_[I])
        if (f < 0.0) throw ContractViolation("TableFactorSystem: negative factor value");
    }
  }

  int num_vars() const { return n_vars_; }
  int num_factors() const { return static_cast<int>(scopes_.size()); }
  std::span<const int> scope(int I) const { return scopes_[I]; }
  std::span<const int> var_factors(int i) const { return var_factors_[i]; }

  double factor_value(int I, const Configuration& w) const {
    const auto& scope = scopes_[I];
    std::size_t row = 0;
    for (std::size_t j = 0; j < scope.size(); ++j)
      row |= static_cast<std::size_t>(w[scope[j]] & 1) << j;
    return tables_[I][row];
  }

  bool satisfied(int I, const Configuration& w) const { return factor_value(I, w) > 0.0; }

 private:
  int n_vars_ = 0;
  std::vector<std::vector<int>> scopes_;
  std::vector<std::vector<double>> tables_;
  std::vector<std::vector<int>> var_factors_;
};

}  // namespace binmp
