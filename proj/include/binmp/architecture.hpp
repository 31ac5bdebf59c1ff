// Copyright (c) 2026 the binmp authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "binmp/errors.hpp"

namespace binmp {

// A weight configuration: one bit per parameter, bit b maps to weight 2b-1.
using Configuration = std::vector<std::uint8_t>;

inline int weight_of_bit(std::uint8_t bit) { return 2 * static_cast<int>(bit) - 1; }

struct ConvLayerSpec {
  int filters = 0;
  int kernel = 0;
  int stride = 1;
  bool operator==(const ConvLayerSpec&) const = default;
};

// Bias-free binary network. Inputs are {0,1}; weights are {-1,+1}; hidden
// activations threshold pre-activations at 0 into {0,1}; the final layer is a
// sign whose >= 0 branch maps to label 1.
//
// Parameters flatten layer by layer; within a layer, output-unit-major and
// row-major (for conv: [filter][in_channel][ky][kx]).
struct Architecture {
  enum class Kind { kLinear, kMlp, kConv };

  Kind kind = Kind::kLinear;
  int input_dim = 0;             // d, flattened
  std::vector<int> hidden;       // Mlp hidden layer sizes
  int input_side = 0;            // Conv: input is input_side x input_side, 1 channel
  std::vector<ConvLayerSpec> conv_layers;

  static Architecture linear(int d) {
    Architecture a;
    a.kind = Kind::kLinear;
    a.input_dim = d;
    return a;
  }

  static Architecture mlp(int d, std::vector<int> hidden_sizes) {
    Architecture a;
    a.kind = Kind::kMlp;
    a.input_dim = d;
    a.hidden = std::move(hidden_sizes);
    return a;
  }

  static Architecture conv(int input_side, std::vector<ConvLayerSpec> layers) {
    Architecture a;
    a.kind = Kind::kConv;
    a.input_side = input_side;
    a.input_dim = input_side * input_side;
    a.conv_layers = std::move(layers);
    return a;
  }

  // The conv net used for pooled 14x14 images: 3 (3x3) stride-2 filters, then
  // 2 (3x3) stride-2 filters, flattened to 8, then a linear sign layer.
  static Architecture conv14() {
    return conv(14, {{3, 3, 2}, {2, 3, 2}});
  }

  bool operator==(const Architecture&) const = default;
};

namespace detail {

inline int conv_out_side(int in_side, int kernel, int stride) {
  if (kernel < 1 || stride < 1 || in_side < kernel)
    throw ContractViolation("Architecture: conv layer does not fit its input");
  return (in_side - kernel) / stride + 1;
}

}  // namespace detail

// Number of binary weights N.
inline int param_count(const Architecture& arch) {
  switch (arch.kind) {
    case Architecture::Kind::kLinear:
      if (arch.input_dim < 1) throw ContractViolation("Architecture: input_dim < 1");
      return arch.input_dim;
    case Architecture::Kind::kMlp: {
      if (arch.input_dim < 1) throw ContractViolation("Architecture: input_dim < 1");
      int total = 0;
      int prev = arch.input_dim;
      for (int h : arch.hidden) {
        if (h < 1) throw ContractViolation("Architecture: hidden size < 1");
        total += prev * h;
        prev = h;
      }
      total += prev;  // final sign unit
      return total;
    }
    case Architecture::Kind::kConv: {
      if (arch.input_side < 1) throw ContractViolation("Architecture: input_side < 1");
      int total = 0;
      int side = arch.input_side;
      int channels = 1;
      for (const auto& layer : arch.conv_layers) {
        if (layer.filters < 1) throw ContractViolation("Architecture: filters < 1");
        total += layer.filters * channels * layer.kernel * layer.kernel;
        side = detail::conv_out_side(side, layer.kernel, layer.stride);
        channels = layer.filters;
      }
      total += channels * side * side;  // final linear over the flattened map
      return total;
    }
  }
  throw ContractViolation("Architecture: unknown kind");
}

// Deterministic {0,1}-valued forward pass on integer arithmetic.
inline int forward(const Architecture& arch, const Configuration& config,
                   std::span<const std::uint8_t> x) {
  const int n = param_count(arch);
  if (static_cast<int>(config.size()) != n)
    throw ContractViolation("forward: configuration length != param count");
  if (static_cast<int>(x.size()) != arch.input_dim)
    throw ContractViolation("forward: input dimension mismatch");

  switch (arch.kind) {
    case Architecture::Kind::kLinear: {
      int s = 0;
      for (int j = 0; j < arch.input_dim; ++j)
        s += weight_of_bit(config[j]) * static_cast<int>(x[j]);
      return s >= 0 ? 1 : 0;
    }
    case Architecture::Kind::kMlp: {
      std::vector<std::uint8_t> act(x.begin(), x.end());
      std::vector<std::uint8_t> next;
      int ofs = 0;
      int prev = arch.input_dim;
      for (int h : arch.hidden) {
        next.assign(h, 0);
        for (int u = 0; u < h; ++u) {
          int s = 0;
          const int base = ofs + u * prev;
          for (int j = 0; j < prev; ++j)
            s += weight_of_bit(config[base + j]) * static_cast<int>(act[j]);
          next[u] = s >= 0 ? 1 : 0;
        }
        act.swap(next);
        ofs += prev * h;
        prev = h;
      }
      int s = 0;
      for (int j = 0; j < prev; ++j)
        s += weight_of_bit(config[ofs + j]) * static_cast<int>(act[j]);
      return s >= 0 ? 1 : 0;
    }
    case Architecture::Kind::kConv: {
      int side = arch.input_side;
      int channels = 1;
      std::vector<std::uint8_t> act(x.begin(), x.end());  // [channel][y][x]
      int ofs = 0;
      for (const auto& layer : arch.conv_layers) {
        const int out_side = detail::conv_out_side(side, layer.kernel, layer.stride);
        std::vector<std::uint8_t> next(
            static_cast<std::size_t>(layer.filters) * out_side * out_side, 0);
        for (int f = 0; f < layer.filters; ++f) {
          for (int oy = 0; oy < out_side; ++oy) {
            for (int ox = 0; ox < out_side; ++ox) {
              int s = 0;
              for (int c = 0; c < channels; ++c) {
                const int wbase =
                    ofs + ((f * channels + c) * layer.kernel) * layer.kernel;
                const int abase = (c * side + oy * layer.stride) * side;
                for (int ky = 0; ky < layer.kernel; ++ky) {
                  const int arow = abase + ky * side + ox * layer.stride;
                  const int wrow = wbase + ky * layer.kernel;
                  for (int kx = 0; kx < layer.kernel; ++kx)
                    s += weight_of_bit(config[wrow + kx]) *
                         static_cast<int>(act[arow + kx]);
                }
              }
              next[(f * out_side + oy) * out_side + ox] = s >= 0 ? 1 : 0;
            }
          }
        }
        ofs += layer.filters * channels * layer.kernel * layer.kernel;
        act.swap(next);
        side = out_side;
        channels = layer.filters;
      }
      int s = 0;
      const int flat = channels * side * side;
      for (int j = 0; j < flat; ++j)
        s += weight_of_bit(config[ofs + j]) * static_cast<int>(act[j]);
      return s >= 0 ? 1 : 0;
    }
  }
  throw ContractViolation("Architecture: unknown kind");
}

}  // namespace binmp
