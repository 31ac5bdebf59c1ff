// Copyright (c) 2026 the binmp authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>

#include "binmp/errors.hpp"

namespace binmp {

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  return mix64(state);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

// Which part of the pipeline owns a stream; folded into the stream key so two
// consumers never alias even when they share node/iteration indices.
enum class StreamTag : std::uint64_t {
  kSbpFactor = 1,
  kMinibatch = 2,
  kS4pFactor = 3,
  kS4pVar = 4,
  kSpMarginal = 5,
  kSpTrace = 6,
  kDataset = 7,
  kHarness = 8,
  kTest = 9,
};

struct RngLineage {
  StreamTag tag = StreamTag::kTest;
  std::uint64_t node = 0;  // factor or variable index
  std::uint64_t iteration = 0;
  std::uint64_t sample = 0;
};

// Keyed xoshiro256++ stream. The (master_seed, lineage) pair fully determines
// the sequence: re-creating a stream replays it bit-exactly, and streams with
// different lineage keys are statistically independent. All derived draws
// (uniform, bernoulli, categorical, bounded) avoid <random> distributions,
// whose outputs are implementation-defined, so replay holds across platforms.
class RngStream {
 public:
  RngStream() : RngStream(0, RngLineage{}) {}

  RngStream(std::uint64_t master_seed, const RngLineage& lineage) {
    using detail::mix64;
    std::uint64_t k = mix64(master_seed + 0x9e3779b97f4a7c15ULL);
    k = mix64(k ^ mix64(static_cast<std::uint64_t>(lineage.tag) + 0xa0761d6478bd642fULL));
    k = mix64(k ^ mix64(lineage.node + 0xe7037ed1a0b428dbULL));
    k = mix64(k ^ mix64(lineage.iteration + 0x8ebc6af09c88c6e3ULL));
    k = mix64(k ^ mix64(lineage.sample + 0x589965cc75374cc3ULL));
    for (auto& w : state_) w = detail::splitmix64_next(k);
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
  }

  std::uint64_t next_u64() {
    using detail::rotl64;
    const std::uint64_t result = rotl64(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl64(state_[3], 45);
    return result;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  // Uniform integer in [0, n); n >= 1.
  std::uint64_t bounded(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Index drawn proportionally to nonnegative weights.
  int categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) {
      if (w < 0.0) throw ContractViolation("categorical: negative weight");
      total += w;
    }
    if (total <= 0.0) throw DegenerateSurveyError("categorical: all-zero weights");
    const double u = uniform() * total;
    double acc = 0.0;
    int last_nonzero = 0;
    for (int k = 0; k < static_cast<int>(weights.size()); ++k) {
      if (weights[k] > 0.0) last_nonzero = k;
      acc += weights[k];
      if (u < acc) return k;
    }
    return last_nonzero;  // float round-off fell past the end
  }

 private:
  std::uint64_t state_[4];
};

inline RngStream rng_stream(std::uint64_t master_seed, const RngLineage& lineage) {
  return RngStream(master_seed, lineage);
}

}  // namespace binmp
