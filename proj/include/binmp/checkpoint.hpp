// Copyright (c) 2026 the binmp authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "binmp/bp.hpp"
#include "binmp/errors.hpp"
#include "binmp/sp.hpp"

namespace binmp {

// Versioned binary container for message state. Layout: 7 magic bytes
// "BINMP1\0", then little-endian u64 fields (M, N, K, iteration, master
// seed), then both message tensors as little-endian f64, variable-to-factor
// first. BP stores are carried with K = 1.
struct Checkpoint {
  std::uint64_t m = 0;
  std::uint64_t n = 0;
  std::uint64_t k_bins = 1;
  std::uint64_t iteration = 0;
  std::uint64_t master_seed = 0;
  std::vector<double> var_to_factor;
  std::vector<double> factor_to_var;

  bool operator==(const Checkpoint&) const = default;
};

namespace detail {

constexpr std::array<char, 7> kCheckpointMagic = {'B', 'I', 'N', 'M', 'P', '1', '\0'};

inline void write_u64_le(std::ostream& out, std::uint64_t v) {
  char bytes[8];
  for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((v >> (8 * b)) & 0xff);
  out.write(bytes, 8);
}

inline std::uint64_t read_u64_le(std::istream& in) {
  char bytes[8];
  in.read(bytes, 8);
  if (!in) throw FormatError("checkpoint: truncated integer field");
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[b])) << (8 * b);
  return v;
}

inline void write_f64_le(std::ostream& out, double d) {
  write_u64_le(out, std::bit_cast<std::uint64_t>(d));
}

inline double read_f64_le(std::istream& in) {
  return std::bit_cast<double>(read_u64_le(in));
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const Checkpoint& cp) {
  const std::size_t expected =
      static_cast<std::size_t>(cp.m) * cp.n * cp.k_bins;
  if (cp.var_to_factor.size() != expected || cp.factor_to_var.size() != expected)
    throw ContractViolation("save_checkpoint: payload size != M*N*K");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("save_checkpoint: cannot open " + path);
  out.write(detail::kCheckpointMagic.data(), detail::kCheckpointMagic.size());
  detail::write_u64_le(out, cp.m);
  detail::write_u64_le(out, cp.n);
  detail::write_u64_le(out, cp.k_bins);
  detail::write_u64_le(out, cp.iteration);
  detail::write_u64_le(out, cp.master_seed);
  for (double d : cp.var_to_factor) detail::write_f64_le(out, d);
  for (double d : cp.factor_to_var) detail::write_f64_le(out, d);
  if (!out) throw FormatError("save_checkpoint: write failed for " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("load_checkpoint: cannot open " + path);
  std::array<char, 7> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != detail::kCheckpointMagic)
    throw FormatError("load_checkpoint: bad magic bytes");
  Checkpoint cp;
  cp.m = detail::read_u64_le(in);
  cp.n = detail::read_u64_le(in);
  cp.k_bins = detail::read_u64_le(in);
  cp.iteration = detail::read_u64_le(in);
  cp.master_seed = detail::read_u64_le(in);
  const std::size_t expected = static_cast<std::size_t>(cp.m) * cp.n * cp.k_bins;
  cp.var_to_factor.resize(expected);
  cp.factor_to_var.resize(expected);
  for (double& d : cp.var_to_factor) d = detail::read_f64_le(in);
  for (double& d : cp.factor_to_var) d = detail::read_f64_le(in);
  return cp;
}

inline Checkpoint make_checkpoint(const BpMessageStore& store, std::uint64_t iteration,
                                  std::uint64_t master_seed) {
  Checkpoint cp;
  cp.m = static_cast<std::uint64_t>(store.var_to_factor.rows());
  cp.n = static_cast<std::uint64_t>(store.var_to_factor.cols());
  cp.k_bins = 1;
  cp.iteration = iteration;
  cp.master_seed = master_seed;
  cp.var_to_factor = store.var_to_factor.data();
  cp.factor_to_var = store.factor_to_var.data();
  return cp;
}

inline Checkpoint make_checkpoint(const SurveyStore& store, std::uint64_t iteration,
                                  std::uint64_t master_seed) {
  Checkpoint cp;
  cp.m = static_cast<std::uint64_t>(store.var_to_factor.dim0());
  cp.n = static_cast<std::uint64_t>(store.var_to_factor.dim1());
  cp.k_bins = static_cast<std::uint64_t>(store.var_to_factor.dim2());
  cp.iteration = iteration;
  cp.master_seed = master_seed;
  cp.var_to_factor = store.var_to_factor.data();
  cp.factor_to_var = store.factor_to_var.data();
  return cp;
}

inline BpMessageStore bp_store_from_checkpoint(const Checkpoint& cp) {
  if (cp.k_bins != 1) throw FormatError("checkpoint: not a BP store (K != 1)");
  BpMessageStore store(static_cast<int>(cp.m), static_cast<int>(cp.n));
  store.var_to_factor.data() = cp.var_to_factor;
  store.factor_to_var.data() = cp.factor_to_var;
  return store;
}

inline SurveyStore survey_store_from_checkpoint(const Checkpoint& cp) {
  SurveyStore store(static_cast<int>(cp.m), static_cast<int>(cp.n),
                    static_cast<int>(cp.k_bins));
  store.var_to_factor.data() = cp.var_to_factor;
  store.factor_to_var.data() = cp.factor_to_var;
  return store;
}

}  // namespace binmp
