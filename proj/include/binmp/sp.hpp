// Copyright (c) 2026 the binmp authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "binmp/bp.hpp"
#include "binmp/factor_system.hpp"
#include "binmp/fft.hpp"
#include "binmp/grid.hpp"
#include "binmp/rng.hpp"
#include "binmp/tensor.hpp"

namespace binmp {

enum class SpVariant { kS3P, kS4P };

struct SpParams {
  int k_bins = 31;
  int l_sp = 100;               // outer survey samples
  int l_bp = 5;                 // inner SBP samples per outer draw
  double gamma = 0.5;
  int max_iters = 100;
  double convergence_tol = 1e-4;
  SpVariant variant = SpVariant::kS4P;
  double logit_clip = 12.0;     // probability grid clamped to [sigma(-c), sigma(c)]
  bool adaptive_gamma = false;
  bool record_bin_trace = false;

  void validate() const {
    if (k_bins < 2) throw ContractViolation("SpParams: k_bins must be >= 2");
    if (l_sp < 1) throw ContractViolation("SpParams: l_sp must be >= 1");
    if (l_bp < 1) throw ContractViolation("SpParams: l_bp must be >= 1");
    if (!(gamma >= 0.0 && gamma <= 1.0))
      throw ContractViolation("SpParams: gamma outside [0,1]");
    if (max_iters < 1) throw ContractViolation("SpParams: max_iters must be >= 1");
    if (!(convergence_tol > 0.0))
      throw ContractViolation("SpParams: convergence_tol must be positive");
    if (!(logit_clip > 0.0))
      throw ContractViolation("SpParams: logit_clip must be positive");
  }

  bool operator==(const SpParams&) const = default;
};

// Per-edge K-bin histograms over the probability a BP message would carry.
// Slice (I, i) is the survey for the edge between factor I and variable i.
struct SurveyStore {
  Tensor3<double> var_to_factor;
  Tensor3<double> factor_to_var;

  SurveyStore() = default;
  SurveyStore(int m, int n, int k_bins)
      : var_to_factor(m, n, k_bins, 1.0 / k_bins),
        factor_to_var(m, n, k_bins, 1.0 / k_bins) {}

  bool operator==(const SurveyStore&) const = default;
};

namespace detail {

inline double logsumexp2(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

inline double logit(double p, double clip) {
  if (p <= 0.0) return -clip;
  if (p >= 1.0) return clip;
  const double l = std::log(p / (1.0 - p));
  return std::clamp(l, -clip, clip);
}

inline double sigmoid(double l) {
  if (l >= 0.0) return 1.0 / (1.0 + std::exp(-l));
  const double e = std::exp(l);
  return e / (1.0 + e);
}

// Enumerates all `length`-digit sequences over {0,...,base-1}, low digit first.
template <typename Fn>
void for_each_combo(int length, int base, Fn&& fn) {
  std::vector<int> digits(length, 0);
  while (true) {
    fn(std::span<const int>(digits));
    int pos = 0;
    while (pos < length && ++digits[pos] == base) digits[pos++] = 0;
    if (pos == length) break;
  }
}

inline bool combo_guard_ok(int length, int base, double limit = 1e7) {
  return std::pow(static_cast<double>(base), static_cast<double>(length)) <= limit;
}

}  // namespace detail

// One categorical draw from a survey slice, returned as the bin center.
inline double sample_p_from_survey(std::span<const double> slice, const BinGrid& grid,
                                   RngStream& rng) {
  return grid.center(rng.categorical(slice));
}

// Independent draws from a set of surveys, one p-value per neighbor.
inline std::vector<double> sample_bp_messages_from_surveys(
    const std::vector<std::span<const double>>& slices, const BinGrid& grid,
    RngStream& rng) {
  std::vector<double> out;
  out.reserve(slices.size());
  for (const auto& slice : slices) out.push_back(sample_p_from_survey(slice, grid, rng));
  return out;
}

struct SurveySlicesUpdate {
  Matrix<double> slices;               // [deg x K], each row normalized
  std::vector<std::uint8_t> degenerate;  // rows reset to uniform (no mass landed)
  int starved_inner = 0;               // inner SBP estimates with zero mass
};

// Stochastic SP factor-to-variable update: per outer draw, sample a BP message
// set from the incoming surveys, estimate the factor's BP reply with the
// stochastic subroutine, and add its local partition weight to the bin of the
// normalized reply. Rows with no accumulated mass reset to uniform.
template <FactorSystemLike FS>
SurveySlicesUpdate s4p_factor_to_var(const FS& fs, const SurveyStore& surveys, int I,
                                     const SpParams& params, const BinGrid& grid,
                                     RngStream& rng) {
  const auto scope = fs.scope(I);
  const int deg = static_cast<int>(scope.size());
  SurveySlicesUpdate update;
  update.slices = Matrix<double>(deg, grid.k_bins(), 0.0);
  update.degenerate.assign(deg, 0);
  std::vector<double> drawn(deg);
  for (int m = 0; m < params.l_sp; ++m) {
    for (int j = 0; j < deg; ++j)
      drawn[j] = sample_p_from_survey(surveys.var_to_factor.slice(I, scope[j]), grid, rng);
    const auto msgs = sbp_factor_to_var(fs, I, drawn, params.l_bp, false, rng);
    for (int j = 0; j < deg; ++j) {
      const double weight = msgs[j].tilde0 + msgs[j].tilde1;
      if (weight <= 0.0) {
        ++update.starved_inner;
        continue;
      }
      update.slices(j, grid.index(msgs[j].p1)) += weight;
    }
  }
  for (int j = 0; j < deg; ++j) {
    auto row = update.slices.row(j);
    double total = 0.0;
    for (double v : row) total += v;
    if (total <= 0.0) {
      update.degenerate[j] = 1;
      std::fill(row.begin(), row.end(), 1.0 / grid.k_bins());
    } else {
      for (double& v : row) v /= total;
    }
  }
  return update;
}

// Stochastic SP variable-to-factor update: per outer draw, sample an incoming
// BP message set, form leave-one-out products for every adjacent factor, and
// add the local partition weight to the bin of the normalized product.
// Weights are combined in the log domain so long products cannot underflow.
inline SurveySlicesUpdate s4p_var_to_factor(const SurveyStore& surveys, int i,
                                            std::span<const int> factors,
                                            const SpParams& params,
                                            const BinGrid& grid, RngStream& rng) {
  const int deg = static_cast<int>(factors.size());
  SurveySlicesUpdate update;
  update.slices = Matrix<double>(deg, grid.k_bins(), 0.0);
  update.degenerate.assign(deg, 0);

  Matrix<int> bins(params.l_sp, deg, 0);
  Matrix<double> log_weights(params.l_sp, deg, detail::kNegInf);
  std::vector<double> drawn(deg);
  std::vector<double> pre1(deg + 1), pre0(deg + 1), suf1(deg + 1), suf0(deg + 1);
  for (int m = 0; m < params.l_sp; ++m) {
    for (int j = 0; j < deg; ++j)
      drawn[j] = sample_p_from_survey(surveys.factor_to_var.slice(factors[j], i), grid, rng);
    pre1[0] = pre0[0] = 0.0;
    for (int j = 0; j < deg; ++j) {
      pre1[j + 1] = pre1[j] + (drawn[j] > 0.0 ? std::log(drawn[j]) : detail::kNegInf);
      pre0[j + 1] = pre0[j] + (drawn[j] < 1.0 ? std::log(1.0 - drawn[j]) : detail::kNegInf);
    }
    suf1[deg] = suf0[deg] = 0.0;
    for (int j = deg - 1; j >= 0; --j) {
      suf1[j] = suf1[j + 1] + (drawn[j] > 0.0 ? std::log(drawn[j]) : detail::kNegInf);
      suf0[j] = suf0[j + 1] + (drawn[j] < 1.0 ? std::log(1.0 - drawn[j]) : detail::kNegInf);
    }
    for (int j = 0; j < deg; ++j) {
      const double l1 = pre1[j] + suf1[j + 1];
      const double l0 = pre0[j] + suf0[j + 1];
      if (l1 == detail::kNegInf && l0 == detail::kNegInf) continue;  // zero weight
      bins(m, j) = grid.index(detail::p1_from_logs(l1, l0));
      log_weights(m, j) = detail::logsumexp2(l1, l0);
    }
  }
  for (int j = 0; j < deg; ++j) {
    double max_lw = detail::kNegInf;
    for (int m = 0; m < params.l_sp; ++m)
      max_lw = std::max(max_lw, log_weights(m, j));
    auto row = update.slices.row(j);
    if (max_lw == detail::kNegInf) {
      update.degenerate[j] = 1;
      std::fill(row.begin(), row.end(), 1.0 / grid.k_bins());
      continue;
    }
    for (int m = 0; m < params.l_sp; ++m)
      if (log_weights(m, j) != detail::kNegInf)
        row[bins(m, j)] += std::exp(log_weights(m, j) - max_lw);
    normalize_histogram(row);
  }
  return update;
}

namespace detail {

// A signal over a uniform grid of logit values; index g sits at
// left + g * step. Convolution adds the `left` anchors.
struct LogitSignal {
  double left = 0.0;
  double step = 0.0;
  std::vector<double> mass;
};

inline LogitSignal convolve_signals(const LogitSignal& a, const LogitSignal& b) {
  if (a.mass.empty()) return b;  // empty = identity
  if (b.mass.empty()) return a;
  LogitSignal out;
  out.left = a.left + b.left;
  out.step = a.step;
  out.mass = convolve_real(a.mass, b.mass);
  return out;
}

inline int logit_grid_points(int k_bins) { return 2 * std::max(64, 4 * k_bins) + 1; }

// Splits survey mass onto the logit grid, pre-multiplied by weight_fn(center).
template <typename WeightFn>
LogitSignal survey_to_logit_signal(std::span<const double> survey, const BinGrid& grid,
                                   double clip, WeightFn&& weight_fn) {
  const int points = logit_grid_points(grid.k_bins());
  LogitSignal sig;
  sig.left = -clip;
  sig.step = 2.0 * clip / (points - 1);
  sig.mass.assign(points, 0.0);
  for (int k = 0; k < grid.k_bins(); ++k) {
    const double m = survey[k] * weight_fn(grid.center(k));
    if (m <= 0.0) continue;
    const double pos = (logit(grid.center(k), clip) + clip) / sig.step;
    const double floor_pos = std::floor(pos);
    int g0 = static_cast<int>(floor_pos);
    double frac = pos - floor_pos;
    if (g0 >= points - 1) {
      g0 = points - 1;
      frac = 0.0;
    }
    sig.mass[g0] += m * (1.0 - frac);
    if (frac > 0.0) sig.mass[g0 + 1] += m * frac;
  }
  return sig;
}

}  // namespace detail

constexpr int kFftDegreeGuard = 64;  // leave-one-out convolution sets get heavy past this

// Deterministic variable-to-factor update (the l_sp -> infinity limit of the
// stochastic one). The normalized leave-one-out product depends on incoming
// p-values only through the sum of their logits, so its distribution is a
// convolution of per-survey logit histograms. The local partition weight
// prod p + prod (1-p) splits the same way into two convolutions, one of
// p-weighted histograms and one of (1-p)-weighted histograms, which also
// makes zero-weight (contradictory) combinations drop out exactly.
inline SurveySlicesUpdate s3p_var_to_factor_fft(const SurveyStore& surveys, int i,
                                                std::span<const int> factors,
                                                const SpParams& params,
                                                const BinGrid& grid) {
  const int deg = static_cast<int>(factors.size());
  if (deg > kFftDegreeGuard)
    throw TractabilityError("s3p_var_to_factor_fft: degree beyond FFT-path guard");
  SurveySlicesUpdate update;
  update.slices = Matrix<double>(deg, grid.k_bins(), 0.0);
  update.degenerate.assign(deg, 0);
  if (deg == 1) {
    // Empty exclusion set: the BP product is uniform regardless of input.
    update.slices(0, grid.index(0.5)) = 1.0;
    return update;
  }

  const double clip = params.logit_clip;
  std::vector<detail::LogitSignal> sig_a(deg), sig_b(deg);
  for (int j = 0; j < deg; ++j) {
    const auto survey = surveys.factor_to_var.slice(factors[j], i);
    sig_a[j] = detail::survey_to_logit_signal(survey, grid, clip,
                                              [](double p) { return p; });
    sig_b[j] = detail::survey_to_logit_signal(survey, grid, clip,
                                              [](double p) { return 1.0 - p; });
  }

  std::vector<detail::LogitSignal> pre_a(deg + 1), pre_b(deg + 1);
  std::vector<detail::LogitSignal> suf_a(deg + 1), suf_b(deg + 1);
  for (int j = 0; j < deg; ++j) {
    pre_a[j + 1] = detail::convolve_signals(pre_a[j], sig_a[j]);
    pre_b[j + 1] = detail::convolve_signals(pre_b[j], sig_b[j]);
  }
  for (int j = deg - 1; j >= 0; --j) {
    suf_a[j] = detail::convolve_signals(sig_a[j], suf_a[j + 1]);
    suf_b[j] = detail::convolve_signals(sig_b[j], suf_b[j + 1]);
  }

  for (int j = 0; j < deg; ++j) {
    const auto conv_a = detail::convolve_signals(pre_a[j], suf_a[j + 1]);
    const auto conv_b = detail::convolve_signals(pre_b[j], suf_b[j + 1]);
    auto row = update.slices.row(j);
    for (std::size_t g = 0; g < conv_a.mass.size(); ++g) {
      const double mass_a = std::max(0.0, conv_a.mass[g]);
      const double logit_sum = conv_a.left + static_cast<double>(g) * conv_a.step;
      if (mass_a > 0.0) row[grid.index(detail::sigmoid(logit_sum))] += mass_a;
    }
    for (std::size_t g = 0; g < conv_b.mass.size(); ++g) {
      const double mass_b = std::max(0.0, conv_b.mass[g]);
      const double logit_sum = conv_b.left + static_cast<double>(g) * conv_b.step;
      if (mass_b > 0.0) row[grid.index(detail::sigmoid(logit_sum))] += mass_b;
    }
    double total = 0.0;
    for (double v : row) total += v;
    if (total <= 0.0) {
      update.degenerate[j] = 1;
      std::fill(row.begin(), row.end(), 1.0 / grid.k_bins());
    } else {
      for (double& v : row) v /= total;
    }
  }
  return update;
}

// Weighted-belief Monte Carlo estimate over full incoming message draws.
// Returns the K-bin histogram of binned beliefs; the marginal is its mean.
struct SpBeliefEstimate {
  std::vector<double> histogram;  // normalized over K bins
  double marginal = 0.5;
};

inline SpBeliefEstimate sp_belief_estimate(const SurveyStore& surveys, int i,
                                           std::span<const int> factors,
                                           const BinGrid& grid, int l_sp,
                                           RngStream& rng) {
  const int deg = static_cast<int>(factors.size());
  std::vector<double> p1s(l_sp), log_weights(l_sp, detail::kNegInf);
  std::vector<double> drawn(deg);
  double max_lw = detail::kNegInf;
  for (int m = 0; m < l_sp; ++m) {
    double l1 = 0.0, l0 = 0.0;
    for (int j = 0; j < deg; ++j) {
      drawn[j] = sample_p_from_survey(surveys.factor_to_var.slice(factors[j], i), grid, rng);
      l1 += drawn[j] > 0.0 ? std::log(drawn[j]) : detail::kNegInf;
      l0 += drawn[j] < 1.0 ? std::log(1.0 - drawn[j]) : detail::kNegInf;
    }
    if (l1 == detail::kNegInf && l0 == detail::kNegInf) continue;
    p1s[m] = detail::p1_from_logs(l1, l0);
    log_weights[m] = detail::logsumexp2(l1, l0);
    max_lw = std::max(max_lw, log_weights[m]);
  }
  if (max_lw == detail::kNegInf)
    throw DegenerateSurveyError("sp_belief_estimate: all sampled weights are zero");
  SpBeliefEstimate est;
  est.histogram.assign(grid.k_bins(), 0.0);
  double wsum = 0.0, acc = 0.0;
  for (int m = 0; m < l_sp; ++m) {
    if (log_weights[m] == detail::kNegInf) continue;
    const double w = std::exp(log_weights[m] - max_lw);
    est.histogram[grid.index(p1s[m])] += w;
    acc += w * p1s[m];
    wsum += w;
  }
  normalize_histogram(est.histogram);
  est.marginal = acc / wsum;
  return est;
}

inline double sp_marginal(const SurveyStore& surveys, int i,
                          std::span<const int> factors, const BinGrid& grid,
                          int l_sp, RngStream& rng) {
  return sp_belief_estimate(surveys, i, factors, grid, l_sp, rng).marginal;
}

// ---------------------------------------------------------------------------
// Exact binned SP (tiny instances): all integrals realized as sums over bin
// combinations, with the inner BP updates computed exactly.

struct ExactSpResult {
  SurveyStore surveys;
  std::vector<double> marginals;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

// Non-throwing single-target form used by the oracle's combination sums; a
// zero-mass combination contributes zero weight there rather than an error.
inline FactorToVarMsg bp_factor_to_var_single_from_table(
    std::span<const double> f_table, std::span<const double> incoming_p1, int target) {
  const int deg = static_cast<int>(incoming_p1.size());
  double t1 = 0.0, t0 = 0.0;
  for (std::size_t row = 0; row < f_table.size(); ++row) {
    const double f = f_table[row];
    if (f == 0.0) continue;
    double prod = f;
    for (int j = 0; j < deg; ++j) {
      if (j == target) continue;
      prod *= ((row >> j) & 1) ? incoming_p1[j] : 1.0 - incoming_p1[j];
    }
    if ((row >> target) & 1)
      t1 += prod;
    else
      t0 += prod;
  }
  FactorToVarMsg msg;
  msg.tilde1 = t1;
  msg.tilde0 = t0;
  msg.p1 = (t1 + t0) > 0.0 ? t1 / (t1 + t0) : 0.5;
  msg.starved = (t1 + t0) <= 0.0;
  return msg;
}

}  // namespace detail

template <FactorSystemLike FS>
ExactSpResult exact_sp_oracle(const FS& fs, const SpParams& params) {
  params.validate();
  const int m = fs.num_factors();
  const int n = fs.num_vars();
  const BinGrid grid(params.k_bins);
  const int k_bins = params.k_bins;

  int max_factor_deg = 0, max_var_deg = 0;
  for (int I = 0; I < m; ++I)
    max_factor_deg = std::max(max_factor_deg, static_cast<int>(fs.scope(I).size()));
  for (int i = 0; i < n; ++i)
    max_var_deg = std::max(max_var_deg, static_cast<int>(fs.var_factors(i).size()));
  if (!detail::combo_guard_ok(std::max(max_factor_deg, max_var_deg) - 1, k_bins) ||
      !detail::combo_guard_ok(max_var_deg, k_bins))
    throw TractabilityError("exact_sp_oracle: bin-combination count beyond guard");

  std::vector<std::vector<double>> tables(m);
  for (int I = 0; I < m; ++I) tables[I] = tabulate_factor(fs, I);

  ExactSpResult result;
  result.surveys = SurveyStore(m, n, k_bins);
  auto& surveys = result.surveys;

  std::vector<double> fresh(k_bins);
  for (int t = 1; t <= params.max_iters; ++t) {
    double max_delta = 0.0;
    // Factor to variable: enumerate incoming bin combinations for each edge.
    Tensor3<double> fresh_f2v(m, n, k_bins, 0.0);
    for (int I = 0; I < m; ++I) {
      const auto scope = fs.scope(I);
      const int deg = static_cast<int>(scope.size());
      std::vector<double> incoming(deg, 0.5);
      for (int pos = 0; pos < deg; ++pos) {
        std::fill(fresh.begin(), fresh.end(), 0.0);
        detail::for_each_combo(deg - 1, k_bins, [&](std::span<const int> digits) {
          double survey_weight = 1.0;
          int d = 0;
          for (int j = 0; j < deg; ++j) {
            if (j == pos) continue;
            incoming[j] = grid.center(digits[d]);
            survey_weight *= surveys.var_to_factor(I, scope[j], digits[d]);
            ++d;
          }
          if (survey_weight <= 0.0) return;
          const auto msg =
              detail::bp_factor_to_var_single_from_table(tables[I], incoming, pos);
          if (msg.starved) return;  // contradictory combination carries no mass
          fresh[grid.index(msg.p1)] += survey_weight * (msg.tilde0 + msg.tilde1);
        });
        double total = 0.0;
        for (double v : fresh) total += v;
        auto slice = fresh_f2v.slice(I, scope[pos]);
        if (total <= 0.0)
          std::fill(slice.begin(), slice.end(), 1.0 / k_bins);
        else
          for (int k = 0; k < k_bins; ++k) slice[k] = fresh[k] / total;
      }
    }
    for (int I = 0; I < m; ++I)
      for (int ii : fs.scope(I)) {
        auto slice = surveys.factor_to_var.slice(I, ii);
        const auto fresh_slice = fresh_f2v.slice(I, ii);
        for (int k = 0; k < k_bins; ++k) {
          const double nv = damp(slice[k], fresh_slice[k], params.gamma);
          max_delta = std::max(max_delta, std::abs(nv - slice[k]));
          slice[k] = nv;
        }
        normalize_histogram(slice);
      }

    // Variable to factor: leave-one-out products over bin combinations.
    for (int i = 0; i < n; ++i) {
      const auto factors = fs.var_factors(i);
      const int deg = static_cast<int>(factors.size());
      for (int pos = 0; pos < deg; ++pos) {
        std::fill(fresh.begin(), fresh.end(), 0.0);
        detail::for_each_combo(deg - 1, k_bins, [&](std::span<const int> digits) {
          double survey_weight = 1.0;
          double t1 = 1.0, t0 = 1.0;
          int d = 0;
          for (int j = 0; j < deg; ++j) {
            if (j == pos) continue;
            const double pj = grid.center(digits[d]);
            survey_weight *= surveys.factor_to_var(factors[j], i, digits[d]);
            t1 *= pj;
            t0 *= 1.0 - pj;
            ++d;
          }
          if (survey_weight <= 0.0) return;
          const double weight = t1 + t0;
          if (weight <= 0.0) return;  // contradictory combination carries no mass
          fresh[grid.index(t1 / weight)] += survey_weight * weight;
        });
        double total = 0.0;
        for (double v : fresh) total += v;
        auto slice = surveys.var_to_factor.slice(factors[pos], i);
        if (total <= 0.0) {
          for (int k = 0; k < k_bins; ++k) fresh[k] = 1.0 / k_bins;
        } else {
          for (double& v : fresh) v /= total;
        }
        for (int k = 0; k < k_bins; ++k) {
          const double nv = damp(slice[k], fresh[k], params.gamma);
          max_delta = std::max(max_delta, std::abs(nv - slice[k]));
          slice[k] = nv;
        }
        normalize_histogram(slice);
      }
    }

    result.iterations = t;
    if (max_delta < params.convergence_tol) {
      result.converged = true;
      break;
    }
  }

  // Exact marginals: weighted beliefs enumerated over full incoming sets.
  result.marginals.assign(n, 0.5);
  for (int i = 0; i < n; ++i) {
    const auto factors = fs.var_factors(i);
    const int deg = static_cast<int>(factors.size());
    double acc = 0.0, wsum = 0.0;
    detail::for_each_combo(deg, k_bins, [&](std::span<const int> digits) {
      double survey_weight = 1.0;
      double t1 = 1.0, t0 = 1.0;
      for (int j = 0; j < deg; ++j) {
        const double pj = grid.center(digits[j]);
        survey_weight *= surveys.factor_to_var(factors[j], i, digits[j]);
        t1 *= pj;
        t0 *= 1.0 - pj;
      }
      if (survey_weight <= 0.0) return;
      const double weight = t1 + t0;
      if (weight <= 0.0) return;
      acc += survey_weight * t1;  // weight * normalized p1
      wsum += survey_weight * weight;
    });
    if (wsum > 0.0) result.marginals[i] = acc / wsum;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Stochastic SP driver.

struct SpTraceRow {
  int iteration = 0;
  double max_delta = 0.0;
  double train_accuracy = 0.0;
  double satisfied_fraction = 0.0;
  int degenerate_edges = 0;
  int starved_inner = 0;
};

struct SpRunResult {
  SurveyStore surveys;
  std::vector<double> marginals;
  int iterations = 0;
  bool converged = false;
  std::vector<SpTraceRow> trace;
  std::vector<Matrix<double>> bin_trace;  // per iteration: [N x K] belief histograms
};

struct SpHooks {
  std::function<void(int iteration, const SurveyStore&, std::span<const double> marginals)>
      on_iteration;
};

template <FactorSystemLike FS>
SpRunResult run_sp(const FS& fs, const SpParams& params, std::uint64_t master_seed,
                   const SpHooks* hooks = nullptr) {
  params.validate();
  const int m = fs.num_factors();
  const int n = fs.num_vars();
  const BinGrid grid(params.k_bins);
  const int k_bins = params.k_bins;

  SpRunResult result;
  result.surveys = SurveyStore(m, n, k_bins);
  auto& surveys = result.surveys;

  double gamma = params.gamma;
  for (int t = 1; t <= params.max_iters; ++t) {
    if (params.adaptive_gamma && t > 1 && (t - 1) % 20 == 0)
      gamma = 1.0 - result.trace.back().train_accuracy;

    double max_delta = 0.0;
    int degenerate = 0;
    int starved = 0;
    for (int I = 0; I < m; ++I) {
      RngStream rng(master_seed, {StreamTag::kS4pFactor, static_cast<std::uint64_t>(I),
                                  static_cast<std::uint64_t>(t), 0});
      const auto update = s4p_factor_to_var(fs, surveys, I, params, grid, rng);
      starved += update.starved_inner;
      const auto scope = fs.scope(I);
      for (std::size_t j = 0; j < scope.size(); ++j) {
        if (update.degenerate[j]) ++degenerate;
        auto slice = surveys.factor_to_var.slice(I, scope[j]);
        const auto fresh_row = update.slices.row(static_cast<int>(j));
        for (int k = 0; k < k_bins; ++k) {
          const double nv = damp(slice[k], fresh_row[k], gamma);
          max_delta = std::max(max_delta, std::abs(nv - slice[k]));
          slice[k] = nv;
        }
        normalize_histogram(slice);
      }
    }

    for (int i = 0; i < n; ++i) {
      const auto factors = fs.var_factors(i);
      SurveySlicesUpdate update;
      if (params.variant == SpVariant::kS4P) {
        RngStream rng(master_seed, {StreamTag::kS4pVar, static_cast<std::uint64_t>(i),
                                    static_cast<std::uint64_t>(t), 0});
        update = s4p_var_to_factor(surveys, i, factors, params, grid, rng);
      } else {
        update = s3p_var_to_factor_fft(surveys, i, factors, params, grid);
      }
      for (std::size_t j = 0; j < factors.size(); ++j) {
        if (update.degenerate[j]) ++degenerate;
        auto slice = surveys.var_to_factor.slice(factors[j], i);
        const auto fresh_row = update.slices.row(static_cast<int>(j));
        for (int k = 0; k < k_bins; ++k) {
          const double nv = damp(slice[k], fresh_row[k], gamma);
          max_delta = std::max(max_delta, std::abs(nv - slice[k]));
          slice[k] = nv;
        }
        normalize_histogram(slice);
      }
    }

    // Per-variable belief histograms drive the marginals, the accuracy trace,
    // and (when requested) the bin-hopping trace.
    Matrix<double> histograms(n, k_bins, 0.0);
    result.marginals.assign(n, 0.5);
    for (int i = 0; i < n; ++i) {
      RngStream rng(master_seed, {StreamTag::kSpTrace, static_cast<std::uint64_t>(i),
                                  static_cast<std::uint64_t>(t), 0});
      try {
        const auto est =
            sp_belief_estimate(surveys, i, fs.var_factors(i), grid, params.l_sp, rng);
        std::copy(est.histogram.begin(), est.histogram.end(), histograms.row(i).begin());
        result.marginals[i] = est.marginal;
      } catch (const DegenerateSurveyError&) {
        ++degenerate;
        auto row = histograms.row(i);
        std::fill(row.begin(), row.end(), 1.0 / k_bins);
      }
    }
    if (params.record_bin_trace) result.bin_trace.push_back(histograms);

    const Configuration config = detail::threshold_config(result.marginals);
    const double acc = detail::satisfied_fraction(fs, config);
    result.trace.push_back({t, max_delta, acc, acc, degenerate, starved});
    result.iterations = t;
    if (hooks && hooks->on_iteration) hooks->on_iteration(t, surveys, result.marginals);
    if (max_delta < params.convergence_tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace binmp
