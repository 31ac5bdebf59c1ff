// Copyright (c) 2026 the binmp authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "binmp/bp.hpp"
#include "binmp/problem.hpp"
#include "binmp/sp.hpp"

namespace binmp {

// Threshold beliefs or marginals into a configuration; ties go to 1.
inline Configuration extract_config(std::span<const double> values) {
  for (double v : values)
    if (!(v >= 0.0 && v <= 1.0))
      throw ContractViolation("extract_config: value outside [0,1]");
  return detail::threshold_config(values);
}

// Fraction of examples the configuration classifies correctly.
inline double accuracy(const Matrix<std::uint8_t>& inputs,
                       std::span<const std::uint8_t> labels,
                       const Architecture& arch, const Configuration& config) {
  if (inputs.rows() == 0) throw ContractViolation("accuracy: empty example set");
  if (static_cast<int>(labels.size()) != inputs.rows())
    throw ContractViolation("accuracy: label count mismatch");
  int correct = 0;
  for (int I = 0; I < inputs.rows(); ++I)
    if (forward(arch, config, inputs.row(I)) == static_cast<int>(labels[I])) ++correct;
  return static_cast<double>(correct) / static_cast<double>(inputs.rows());
}

inline double accuracy(const Problem& problem, const Configuration& config) {
  return accuracy(problem.inputs(), problem.labels(), problem.arch(), config);
}

// Damping schedule used by the conv-net preset: full replacement while the
// model is wrong, frozen once it is right.
inline double adaptive_gamma(double accuracy_value) {
  if (!(accuracy_value >= 0.0 && accuracy_value <= 1.0))
    throw ContractViolation("adaptive_gamma: accuracy outside [0,1]");
  return 1.0 - accuracy_value;
}

enum class EngineUsed { kSbp, kS4p, kS3p };

inline const char* engine_name(EngineUsed engine) {
  switch (engine) {
    case EngineUsed::kSbp: return "sbp";
    case EngineUsed::kS4p: return "s4p";
    case EngineUsed::kS3p: return "s3p";
  }
  return "?";
}

struct SolveResult {
  Configuration config;
  std::vector<double> beliefs;  // SBP beliefs or SP marginals, length N
  double train_accuracy = 0.0;
  std::optional<double> test_accuracy;
  EngineUsed engine_used = EngineUsed::kSbp;
  int iterations = 0;
  double wall_time_s = 0.0;
  std::uint64_t seed = 0;
  std::vector<BpTraceRow> bp_trace;
  std::vector<SpTraceRow> sp_trace;
};

struct SnmpHooks {
  const BpHooks* bp = nullptr;
  const SpHooks* sp = nullptr;
};

struct TestSplit {
  const Matrix<std::uint8_t>* inputs = nullptr;
  const std::vector<std::uint8_t>* labels = nullptr;
};

// The combined solver: run stochastic BP first; when the extracted
// configuration satisfies every (hard) constraint, stop there, otherwise run
// survey propagation from a cold start and report its extraction. The gate
// ignores beta: it asks for constraint satisfaction, not relaxed energy.
inline SolveResult run_snmp(const Problem& problem, const BpParams& bp_params,
                            const SpParams& sp_params, std::uint64_t master_seed,
                            const TestSplit* test = nullptr,
                            const SnmpHooks* hooks = nullptr) {
  const auto start = std::chrono::steady_clock::now();
  const BnnFactorSystem fs(problem);

  SolveResult result;
  result.seed = master_seed;

  BpRunResult bp = run_bp(fs, bp_params, BpMode::kStochastic, master_seed,
                          hooks ? hooks->bp : nullptr);
  result.bp_trace = bp.trace;
  result.iterations = bp.iterations;
  result.config = extract_config(bp.beliefs);
  result.beliefs = std::move(bp.beliefs);
  result.train_accuracy = accuracy(problem, result.config);
  result.engine_used = EngineUsed::kSbp;

  if (result.train_accuracy < 1.0) {
    SpRunResult sp = run_sp(fs, sp_params, master_seed, hooks ? hooks->sp : nullptr);
    result.sp_trace = sp.trace;
    result.iterations += sp.iterations;
    result.config = extract_config(sp.marginals);
    result.beliefs = std::move(sp.marginals);
    result.train_accuracy = accuracy(problem, result.config);
    result.engine_used =
        sp_params.variant == SpVariant::kS4P ? EngineUsed::kS4p : EngineUsed::kS3p;
  }

  if (test) {
    if (!test->inputs || !test->labels || test->inputs->rows() == 0)
      throw ContractViolation("run_snmp: empty test split");
    result.test_accuracy =
        accuracy(*test->inputs, *test->labels, problem.arch(), result.config);
  }

  result.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace binmp
