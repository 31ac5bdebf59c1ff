// Copyright (c) 2026 the binmp authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "binmp/errors.hpp"

namespace binmp {

// Row-major dense matrix; row() gives a contiguous view.
template <typename T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, T fill = T{})
      : rows_(rows), cols_(cols),
        data_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill) {
    if (rows < 0 || cols < 0) throw ContractViolation("Matrix: negative shape");
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  T& operator()(int r, int c) { return data_[idx(r, c)]; }
  const T& operator()(int r, int c) const { return data_[idx(r, c)]; }

  std::span<T> row(int r) { return {data_.data() + idx(r, 0), static_cast<std::size_t>(cols_)}; }
  std::span<const T> row(int r) const {
    return {data_.data() + idx(r, 0), static_cast<std::size_t>(cols_)};
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t idx(int r, int c) const {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_) +
           static_cast<std::size_t>(c);
  }
  int rows_ = 0, cols_ = 0;
  std::vector<T> data_;
};

// Dense [d0 x d1 x d2] tensor; slice(i, j) is the contiguous length-d2 fiber.
template <typename T>
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(int d0, int d1, int d2, T fill = T{})
      : d0_(d0), d1_(d1), d2_(d2),
        data_(static_cast<std::size_t>(d0) * d1 * d2, fill) {
    if (d0 < 0 || d1 < 0 || d2 < 0) throw ContractViolation("Tensor3: negative shape");
  }

  int dim0() const { return d0_; }
  int dim1() const { return d1_; }
  int dim2() const { return d2_; }

  T& operator()(int i, int j, int k) { return data_[idx(i, j, k)]; }
  const T& operator()(int i, int j, int k) const { return data_[idx(i, j, k)]; }

  std::span<T> slice(int i, int j) {
    return {data_.data() + idx(i, j, 0), static_cast<std::size_t>(d2_)};
  }
  std::span<const T> slice(int i, int j) const {
    return {data_.data() + idx(i, j, 0), static_cast<std::size_t>(d2_)};
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool operator==(const Tensor3&) const = default;

 private:
  std::size_t idx(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * d1_ + j) * d2_ + k;
  }
  int d0_ = 0, d1_ = 0, d2_ = 0;
  std::vector<T> data_;
};

}  // namespace binmp
