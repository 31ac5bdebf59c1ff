// Copyright (c) 2026 the binmp authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "binmp/architecture.hpp"
#include "binmp/errors.hpp"
#include "binmp/tensor.hpp"

namespace binmp {

// A training problem: M binary examples, a binary network, and the Max-Sat
// inverse temperature. Each example I induces one factor over all N weight
// bits whose hard value is 1 iff the network labels x_I as y_I.
class Problem {
 public:
  Problem(Matrix<std::uint8_t> inputs, std::vector<std::uint8_t> labels,
          Architecture arch,
          double beta = std::numeric_limits<double>::infinity())
      : inputs_(std::move(inputs)), labels_(std::move(labels)),
        arch_(std::move(arch)), beta_(beta) {
    if (inputs_.rows() < 1) throw ContractViolation("Problem: M must be >= 1");
    if (static_cast<int>(labels_.size()) != inputs_.rows())
      throw ContractViolation("Problem: label count != example count");
    if (inputs_.cols() != arch_.input_dim)
      throw ContractViolation("Problem: input dimension != architecture input");
    if (!(beta_ > 0.0))
      throw ContractViolation("Problem: beta must be positive (or +inf)");
    for (std::uint8_t v : inputs_.data())
      if (v > 1) throw ContractViolation("Problem: inputs must be binary");
    for (std::uint8_t v : labels_)
      if (v > 1) throw ContractViolation("Problem: labels must be binary");
    n_vars_ = param_count(arch_);
    unsat_value_ = std::isinf(beta_) ? 0.0 : std::exp(-beta_);
  }

  int num_examples() const { return inputs_.rows(); }
  int num_vars() const { return n_vars_; }
  double beta() const { return beta_; }
  const Architecture& arch() const { return arch_; }
  const Matrix<std::uint8_t>& inputs() const { return inputs_; }
  const std::vector<std::uint8_t>& labels() const { return labels_; }

  // Hard predicate: does the configuration classify example I correctly?
  bool factor_eval(const Configuration& config, int I) const {
    return forward(arch_, config, inputs_.row(I)) == static_cast<int>(labels_[I]);
  }

  // Max-Sat value: 1 when satisfied, exp(-beta) otherwise (0 at beta = inf).
  double relaxed_factor_eval(const Configuration& config, int I) const {
    return factor_eval(config, I) ? 1.0 : unsat_value_;
  }

 private:
  Matrix<std::uint8_t> inputs_;
  std::vector<std::uint8_t> labels_;
  Architecture arch_;
  double beta_;
  double unsat_value_;
  int n_vars_ = 0;
};

inline bool factor_eval(const Problem& problem, const Configuration& config, int I) {
  return problem.factor_eval(config, I);
}

inline double relaxed_factor_eval(const Problem& problem, const Configuration& config,
                                  int I) {
  return problem.relaxed_factor_eval(config, I);
}

// Elementwise relaxed evaluation of a batch of configurations against one
// factor. Bit-identical to mapping relaxed_factor_eval over the batch.
inline std::vector<double> batch_eval(const Problem& problem,
                                      std::span<const Configuration> configs,
                                      int I) {
  std::vector<double> out;
  out.reserve(configs.size());
  for (const auto& config : configs)
    out.push_back(problem.relaxed_factor_eval(config, I));
  return out;
}

}  // namespace binmp
