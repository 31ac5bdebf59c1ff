// Copyright (c) 2026 the binmp authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "binmp/factor_system.hpp"
#include "binmp/grid.hpp"
#include "binmp/rng.hpp"
#include "binmp/tensor.hpp"

namespace binmp {

constexpr int kExactEnumerationGuard = 20;  // max scope size for 2^deg sums
constexpr int kLogDomainThreshold = 30;     // product size above which logs are used

struct BpParams {
  int l_bp = 5;
  double gamma = 0.5;
  int max_iters = 100;
  double convergence_tol = 1e-4;
  int minibatch = 0;                    // 0 = full sweep, else factors per iteration
  bool common_random_numbers = false;   // reuse one sample set for both clamps
  bool adaptive_gamma = false;          // gamma <- 1 - accuracy, every 20 iterations

  void validate() const {
    if (l_bp < 1) throw ContractViolation("BpParams: l_bp must be >= 1");
    if (!(gamma >= 0.0 && gamma <= 1.0))
      throw ContractViolation("BpParams: gamma outside [0,1]");
    if (max_iters < 1) throw ContractViolation("BpParams: max_iters must be >= 1");
    if (!(convergence_tol > 0.0))
      throw ContractViolation("BpParams: convergence_tol must be positive");
    if (minibatch < 0) throw ContractViolation("BpParams: minibatch must be >= 0");
  }

  bool operator==(const BpParams&) const = default;
};

enum class BpMode { kExact, kStochastic };

// Per-edge scalar messages in normalized p-form: entry (I, i) holds
// p(w_i = 1) for the edge between factor I and variable i.
struct BpMessageStore {
  Matrix<double> var_to_factor;
  Matrix<double> factor_to_var;

  BpMessageStore() = default;
  BpMessageStore(int m, int n)
      : var_to_factor(m, n, 0.5), factor_to_var(m, n, 0.5) {}

  bool operator==(const BpMessageStore&) const = default;
};

struct VarToFactorMsg {
  double p1 = 0.5;
  double tilde1 = 1.0;       // unnormalized product for w = 1
  double tilde0 = 1.0;
  double log_tilde1 = 0.0;   // -inf when the product is exactly zero
  double log_tilde0 = 0.0;
};

struct FactorToVarMsg {
  double p1 = 0.5;
  double tilde1 = 0.0;
  double tilde0 = 0.0;
  bool starved = false;  // stochastic estimate saw no satisfying mass
};

namespace detail {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double p1_from_logs(double log1, double log0) {
  if (log1 == kNegInf) return 0.0;
  if (log0 == kNegInf) return 1.0;
  return 1.0 / (1.0 + std::exp(log0 - log1));
}

inline VarToFactorMsg msg_from_linear(double t1, double t0) {
  VarToFactorMsg msg;
  msg.tilde1 = t1;
  msg.tilde0 = t0;
  msg.log_tilde1 = t1 > 0.0 ? std::log(t1) : kNegInf;
  msg.log_tilde0 = t0 > 0.0 ? std::log(t0) : kNegInf;
  msg.p1 = (t1 + t0) > 0.0 ? t1 / (t1 + t0)
                           : std::numeric_limits<double>::quiet_NaN();
  return msg;
}

inline VarToFactorMsg msg_from_logs(double l1, double l0) {
  VarToFactorMsg msg;
  msg.log_tilde1 = l1;
  msg.log_tilde0 = l0;
  msg.tilde1 = std::exp(l1);
  msg.tilde0 = std::exp(l0);
  msg.p1 = (l1 == kNegInf && l0 == kNegInf)
               ? std::numeric_limits<double>::quiet_NaN()
               : p1_from_logs(l1, l0);
  return msg;
}

inline bool contradictory(const VarToFactorMsg& msg) {
  return msg.log_tilde1 == kNegInf && msg.log_tilde0 == kNegInf;
}

}  // namespace detail

// Product of incoming factor-to-variable probabilities (the BPVar2F core).
// The incoming set is the full exclusion set; an empty set yields 0.5.
// Does not throw on a contradictory set: p1 is NaN and both logs are -inf.
inline VarToFactorMsg bp_var_to_factor_raw(std::span<const double> incoming_p1) {
  const int deg = static_cast<int>(incoming_p1.size());
  if (deg <= kLogDomainThreshold) {
    double t1 = 1.0, t0 = 1.0;
    for (double p : incoming_p1) {
      t1 *= p;
      t0 *= 1.0 - p;
    }
    return detail::msg_from_linear(t1, t0);
  }
  double l1 = 0.0, l0 = 0.0;
  for (double p : incoming_p1) {
    l1 += p > 0.0 ? std::log(p) : detail::kNegInf;
    l0 += p < 1.0 ? std::log(1.0 - p) : detail::kNegInf;
  }
  return detail::msg_from_logs(l1, l0);
}

inline VarToFactorMsg bp_var_to_factor(std::span<const double> incoming_p1) {
  VarToFactorMsg msg = bp_var_to_factor_raw(incoming_p1);
  if (detail::contradictory(msg))
    throw ContradictionError("bp_var_to_factor: zero mass for both states");
  return msg;
}

// Leave-one-out messages for every element of the incoming set, sharing
// prefix/suffix products. incoming_p1[j] excluded from output j.
inline std::vector<VarToFactorMsg> bp_var_to_factor_all(
    std::span<const double> incoming_p1) {
  const int deg = static_cast<int>(incoming_p1.size());
  std::vector<VarToFactorMsg> out(deg);
  if (deg == 0) return out;
  if (deg == 1) {
    out[0] = detail::msg_from_linear(1.0, 1.0);
    return out;
  }
  if (deg - 1 <= kLogDomainThreshold) {
    std::vector<double> pre1(deg + 1, 1.0), pre0(deg + 1, 1.0);
    std::vector<double> suf1(deg + 1, 1.0), suf0(deg + 1, 1.0);
    for (int j = 0; j < deg; ++j) {
      pre1[j + 1] = pre1[j] * incoming_p1[j];
      pre0[j + 1] = pre0[j] * (1.0 - incoming_p1[j]);
    }
    for (int j = deg - 1; j >= 0; --j) {
      suf1[j] = suf1[j + 1] * incoming_p1[j];
      suf0[j] = suf0[j + 1] * (1.0 - incoming_p1[j]);
    }
    for (int j = 0; j < deg; ++j)
      out[j] = detail::msg_from_linear(pre1[j] * suf1[j + 1], pre0[j] * suf0[j + 1]);
    return out;
  }
  // Log-domain prefix/suffix sums; -inf marks exact zeros and propagates.
  std::vector<double> pre1(deg + 1, 0.0), pre0(deg + 1, 0.0);
  std::vector<double> suf1(deg + 1, 0.0), suf0(deg + 1, 0.0);
  for (int j = 0; j < deg; ++j) {
    const double p = incoming_p1[j];
    pre1[j + 1] = pre1[j] + (p > 0.0 ? std::log(p) : detail::kNegInf);
    pre0[j + 1] = pre0[j] + (p < 1.0 ? std::log(1.0 - p) : detail::kNegInf);
  }
  for (int j = deg - 1; j >= 0; --j) {
    const double p = incoming_p1[j];
    suf1[j] = suf1[j + 1] + (p > 0.0 ? std::log(p) : detail::kNegInf);
    suf0[j] = suf0[j + 1] + (p < 1.0 ? std::log(1.0 - p) : detail::kNegInf);
  }
  for (int j = 0; j < deg; ++j)
    out[j] = detail::msg_from_logs(pre1[j] + suf1[j + 1], pre0[j] + suf0[j + 1]);
  return out;
}

// Message from variable i to factor I, gathered from the store.
template <FactorSystemLike FS>
VarToFactorMsg exact_var_to_factor(const FS& fs, const BpMessageStore& store,
                                   int i, int I) {
  std::vector<double> incoming;
  for (int J : fs.var_factors(i))
    if (J != I) incoming.push_back(store.factor_to_var(J, i));
  return bp_var_to_factor(incoming);
}

// Belief of variable i: the full-set product over incoming messages.
template <FactorSystemLike FS>
double belief(const FS& fs, const BpMessageStore& store, int i) {
  const auto factors = fs.var_factors(i);
  VarToFactorMsg msg;
  if (static_cast<int>(factors.size()) <= kLogDomainThreshold) {
    double t1 = 1.0, t0 = 1.0;
    for (int J : factors) {
      const double p = store.factor_to_var(J, i);
      t1 *= p;
      t0 *= 1.0 - p;
    }
    msg = detail::msg_from_linear(t1, t0);
  } else {
    double l1 = 0.0, l0 = 0.0;
    for (int J : factors) {
      const double p = store.factor_to_var(J, i);
      l1 += p > 0.0 ? std::log(p) : detail::kNegInf;
      l0 += p < 1.0 ? std::log(1.0 - p) : detail::kNegInf;
    }
    msg = detail::msg_from_logs(l1, l0);
  }
  if (detail::contradictory(msg))
    throw ContradictionError("belief: zero mass for both states");
  return msg.p1;
}

template <FactorSystemLike FS>
std::vector<double> beliefs(const FS& fs, const BpMessageStore& store) {
  std::vector<double> out(fs.num_vars());
  for (int i = 0; i < fs.num_vars(); ++i) out[i] = belief(fs, store, i);
  return out;
}

// Value table of factor I over its scope: row index bit j = scope position j.
template <FactorSystemLike FS>
std::vector<double> tabulate_factor(const FS& fs, int I) {
  const auto scope = fs.scope(I);
  const int deg = static_cast<int>(scope.size());
  if (deg > kExactEnumerationGuard)
    throw TractabilityError("tabulate_factor: scope exceeds exact-enumeration guard");
  Configuration w(fs.num_vars(), 0);
  std::vector<double> table(std::size_t{1} << deg);
  for (std::size_t row = 0; row < table.size(); ++row) {
    for (int j = 0; j < deg; ++j) w[scope[j]] = (row >> j) & 1;
    table[row] = fs.factor_value(I, w);
  }
  return table;
}

// Exact factor-to-variable messages for every scope position: sums of
// f * prod_{l != j} p_l(w_l) over all scope configurations.
inline std::vector<FactorToVarMsg> bp_factor_to_var_all_from_table(
    std::span<const double> f_table, std::span<const double> incoming_p1) {
  const int deg = static_cast<int>(incoming_p1.size());
  if (f_table.size() != (std::size_t{1} << deg))
    throw ContractViolation("bp_factor_to_var_all_from_table: table size mismatch");
  std::vector<double> accum1(deg, 0.0), accum0(deg, 0.0);
  std::vector<double> pre(deg + 1), suf(deg + 1);
  std::vector<double> q(deg);
  for (std::size_t row = 0; row < f_table.size(); ++row) {
    const double f = f_table[row];
    if (f == 0.0) continue;
    for (int j = 0; j < deg; ++j)
      q[j] = ((row >> j) & 1) ? incoming_p1[j] : 1.0 - incoming_p1[j];
    pre[0] = 1.0;
    for (int j = 0; j < deg; ++j) pre[j + 1] = pre[j] * q[j];
    suf[deg] = 1.0;
    for (int j = deg - 1; j >= 0; --j) suf[j] = suf[j + 1] * q[j];
    for (int j = 0; j < deg; ++j) {
      const double loo = f * pre[j] * suf[j + 1];
      if ((row >> j) & 1)
        accum1[j] += loo;
      else
        accum0[j] += loo;
    }
  }
  std::vector<FactorToVarMsg> out(deg);
  for (int j = 0; j < deg; ++j) {
    const double t1 = accum1[j], t0 = accum0[j];
    if (t1 + t0 <= 0.0)
      throw ContradictionError("exact_factor_to_var: both sums are zero");
    out[j] = {t1 / (t1 + t0), t1, t0, false};
  }
  return out;
}

template <FactorSystemLike FS>
std::vector<FactorToVarMsg> exact_factor_to_var_all(
    const FS& fs, int I, std::span<const double> incoming_p1) {
  return bp_factor_to_var_all_from_table(tabulate_factor(fs, I), incoming_p1);
}

// Single-edge form: message from factor I to the variable at scope position
// target_pos, with incoming probabilities in scope order.
template <FactorSystemLike FS>
FactorToVarMsg exact_factor_to_var(const FS& fs, const BpMessageStore& store,
                                   int I, int i) {
  const auto scope = fs.scope(I);
  std::vector<double> incoming(scope.size());
  int target = -1;
  for (int j = 0; j < static_cast<int>(scope.size()); ++j) {
    incoming[j] = store.var_to_factor(I, scope[j]);
    if (scope[j] == i) target = j;
  }
  if (target < 0) throw ContractViolation("exact_factor_to_var: variable not in scope");
  return exact_factor_to_var_all(fs, I, incoming)[target];
}

// Monte Carlo factor-to-variable update: for each scope position, clamp the
// position to 1 and to 0 over l_bp fresh joint draws and average the factor
// value. With common_random_numbers one draw serves both clamps.
template <FactorSystemLike FS>
std::vector<FactorToVarMsg> sbp_factor_to_var(const FS& fs, int I,
                                              std::span<const double> incoming_p1,
                                              int l_bp, bool common_random_numbers,
                                              RngStream& rng) {
  if (l_bp < 1) throw ContractViolation("sbp_factor_to_var: l_bp must be >= 1");
  const auto scope = fs.scope(I);
  const int deg = static_cast<int>(scope.size());
  if (static_cast<int>(incoming_p1.size()) != deg)
    throw ContractViolation("sbp_factor_to_var: incoming size != scope size");
  Configuration w(fs.num_vars(), 0);
  std::vector<FactorToVarMsg> out(deg);
  const double inv_l = 1.0 / static_cast<double>(l_bp);
  for (int pos = 0; pos < deg; ++pos) {
    double sum1 = 0.0, sum0 = 0.0;
    for (int m = 0; m < l_bp; ++m) {
      for (int j = 0; j < deg; ++j) w[scope[j]] = rng.bernoulli(incoming_p1[j]) ? 1 : 0;
      w[scope[pos]] = 1;
      sum1 += fs.factor_value(I, w);
      if (!common_random_numbers)
        for (int j = 0; j < deg; ++j) w[scope[j]] = rng.bernoulli(incoming_p1[j]) ? 1 : 0;
      w[scope[pos]] = 0;
      sum0 += fs.factor_value(I, w);
    }
    const double t1 = sum1 * inv_l, t0 = sum0 * inv_l;
    if (t1 + t0 <= 0.0)
      out[pos] = {0.5, 0.0, 0.0, true};  // no satisfying mass seen; stay neutral
    else
      out[pos] = {t1 / (t1 + t0), t1, t0, false};
  }
  return out;
}

struct BpTraceRow {
  int iteration = 0;
  double max_delta = 0.0;
  double train_accuracy = 0.0;
  double satisfied_fraction = 0.0;
  int starved_edges = 0;
};

struct BpRunResult {
  BpMessageStore store;
  std::vector<double> beliefs;
  int iterations = 0;
  bool converged = false;
  std::vector<BpTraceRow> trace;
};

struct BpHooks {
  std::function<void(int iteration, const BpMessageStore&, std::span<const double> beliefs)>
      on_iteration;
};

namespace detail {

template <FactorSystemLike FS>
double satisfied_fraction(const FS& fs, const Configuration& config) {
  int count = 0;
  for (int I = 0; I < fs.num_factors(); ++I)
    if (fs.satisfied(I, config)) ++count;
  return static_cast<double>(count) / static_cast<double>(fs.num_factors());
}

inline Configuration threshold_config(std::span<const double> values) {
  Configuration config(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) config[i] = values[i] >= 0.5 ? 1 : 0;
  return config;
}

// Uniform sample of `count` distinct factor ids (partial Fisher-Yates).
inline std::vector<int> sample_factor_subset(int num_factors, int count,
                                             RngStream& rng) {
  std::vector<int> ids(num_factors);
  std::iota(ids.begin(), ids.end(), 0);
  for (int j = 0; j < count; ++j) {
    const int r = j + static_cast<int>(rng.bounded(num_factors - j));
    std::swap(ids[j], ids[r]);
  }
  ids.resize(count);
  return ids;
}

}  // namespace detail

// Loopy BP driver. Jacobi ordering within an iteration: factor-to-variable
// messages for the scheduled factors are computed from the pre-iteration
// store, then every variable-to-factor message is refreshed from the new
// values. Both directions are damped.
template <FactorSystemLike FS>
BpRunResult run_bp(const FS& fs, const BpParams& params, BpMode mode,
                   std::uint64_t master_seed, const BpHooks* hooks = nullptr) {
  params.validate();
  const int m = fs.num_factors();
  const int n = fs.num_vars();
  if (mode == BpMode::kExact) {
    for (int I = 0; I < m; ++I)
      if (static_cast<int>(fs.scope(I).size()) > kExactEnumerationGuard)
        throw TractabilityError("run_bp: exact mode beyond enumeration guard");
  }
  if (params.minibatch > m)
    throw ContractViolation("run_bp: minibatch larger than factor count");

  BpRunResult result;
  result.store = BpMessageStore(m, n);
  auto& store = result.store;

  double gamma = params.gamma;
  std::vector<double> incoming;
  for (int t = 1; t <= params.max_iters; ++t) {
    if (params.adaptive_gamma && t > 1 && (t - 1) % 20 == 0)
      gamma = 1.0 - result.trace.back().train_accuracy;

    std::vector<int> scheduled;
    if (params.minibatch > 0 && params.minibatch < m) {
      RngStream pick(master_seed, {StreamTag::kMinibatch, 0, static_cast<std::uint64_t>(t), 0});
      scheduled = detail::sample_factor_subset(m, params.minibatch, pick);
    } else {
      scheduled.resize(m);
      std::iota(scheduled.begin(), scheduled.end(), 0);
    }

    double max_delta = 0.0;
    int starved = 0;
    for (int I : scheduled) {
      const auto scope = fs.scope(I);
      incoming.resize(scope.size());
      for (std::size_t j = 0; j < scope.size(); ++j)
        incoming[j] = store.var_to_factor(I, scope[j]);
      std::vector<FactorToVarMsg> msgs;
      if (mode == BpMode::kExact) {
        msgs = exact_factor_to_var_all(fs, I, incoming);
      } else {
        RngStream rng(master_seed,
                      {StreamTag::kSbpFactor, static_cast<std::uint64_t>(I),
                       static_cast<std::uint64_t>(t), 0});
        msgs = sbp_factor_to_var(fs, I, incoming, params.l_bp,
                                 params.common_random_numbers, rng);
      }
      for (std::size_t j = 0; j < scope.size(); ++j) {
        if (msgs[j].starved) ++starved;
        double& slot = store.factor_to_var(I, scope[j]);
        const double updated = damp(slot, msgs[j].p1, gamma);
        max_delta = std::max(max_delta, std::abs(updated - slot));
        slot = updated;
      }
    }

    for (int i = 0; i < n; ++i) {
      const auto factors = fs.var_factors(i);
      incoming.resize(factors.size());
      for (std::size_t j = 0; j < factors.size(); ++j)
        incoming[j] = store.factor_to_var(factors[j], i);
      const auto msgs = bp_var_to_factor_all(incoming);
      for (std::size_t j = 0; j < factors.size(); ++j) {
        if (detail::contradictory(msgs[j]))
          throw ContradictionError("run_bp: contradictory variable-to-factor update");
        double& slot = store.var_to_factor(factors[j], i);
        const double updated = damp(slot, msgs[j].p1, gamma);
        max_delta = std::max(max_delta, std::abs(updated - slot));
        slot = updated;
      }
    }

    result.beliefs = beliefs(fs, store);
    const Configuration config = detail::threshold_config(result.beliefs);
    const double acc = detail::satisfied_fraction(fs, config);
    result.trace.push_back({t, max_delta, acc, acc, starved});
    result.iterations = t;
    if (hooks && hooks->on_iteration) hooks->on_iteration(t, store, result.beliefs);
    if (max_delta < params.convergence_tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace binmp
