// Copyright (c) 2026 the binmp authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "binmp/architecture.hpp"
#include "binmp/errors.hpp"
#include "binmp/problem.hpp"
#include "binmp/rng.hpp"
#include "binmp/tensor.hpp"

namespace binmp {

inline std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct Dataset {
  Matrix<std::uint8_t> train_inputs;          // [M x d], entries {0,1}
  std::vector<std::uint8_t> train_labels;     // [M]
  Matrix<std::uint8_t> test_inputs;           // may be empty
  std::vector<std::uint8_t> test_labels;
  std::string provenance;

  bool has_test() const { return test_inputs.rows() > 0; }

  void validate() const {
    if (static_cast<int>(train_labels.size()) != train_inputs.rows())
      throw ContractViolation("Dataset: train label count mismatch");
    if (static_cast<int>(test_labels.size()) != test_inputs.rows())
      throw ContractViolation("Dataset: test label count mismatch");
    for (std::uint8_t v : train_inputs.data())
      if (v > 1) throw ContractViolation("Dataset: non-binary input entry");
    for (std::uint8_t v : train_labels)
      if (v > 1) throw ContractViolation("Dataset: non-binary label");
    for (std::uint8_t v : test_inputs.data())
      if (v > 1) throw ContractViolation("Dataset: non-binary test entry");
    for (std::uint8_t v : test_labels)
      if (v > 1) throw ContractViolation("Dataset: non-binary test label");
  }
};

// 64-bit digest of the canonical training-split serialization.
inline std::uint64_t dataset_digest(const Dataset& ds) {
  std::vector<std::uint8_t> bytes;
  const std::uint64_t m = static_cast<std::uint64_t>(ds.train_inputs.rows());
  const std::uint64_t d = static_cast<std::uint64_t>(ds.train_inputs.cols());
  for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<std::uint8_t>((m >> (8 * b)) & 0xff));
  for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<std::uint8_t>((d >> (8 * b)) & 0xff));
  bytes.insert(bytes.end(), ds.train_inputs.data().begin(), ds.train_inputs.data().end());
  bytes.insert(bytes.end(), ds.train_labels.begin(), ds.train_labels.end());
  return fnv1a64(bytes);
}

// Unstructured instance: every input entry and label is an independent fair
// coin. Draw order is inputs row-major, then labels.
inline Dataset gen_glass(int n_vars, int m_examples, std::uint64_t seed) {
  if (n_vars < 1 || m_examples < 1)
    throw ContractViolation("gen_glass: sizes must be positive");
  RngStream rng(seed, {StreamTag::kDataset, 0, 0, 0});
  Dataset ds;
  ds.train_inputs = Matrix<std::uint8_t>(m_examples, n_vars, 0);
  for (auto& v : ds.train_inputs.data()) v = rng.bernoulli(0.5) ? 1 : 0;
  ds.train_labels.resize(m_examples);
  for (auto& v : ds.train_labels) v = rng.bernoulli(0.5) ? 1 : 0;
  ds.provenance = "glass(n=" + std::to_string(n_vars) +
                  ",m=" + std::to_string(m_examples) +
                  ",seed=" + std::to_string(seed) + ")";
  ds.validate();
  return ds;
}

// Teacher for the structured fair-coin dataset: 30 inputs through one hidden
// sign unit, 31 binary weights.
inline Architecture default_stained_teacher() { return Architecture::mlp(30, {1}); }

// Fair-coin inputs labelled by a fixed random binary teacher network, so a
// satisfying configuration exists for the teacher architecture.
inline Dataset gen_stained_glass(const Architecture& teacher, int m_examples,
                                 std::uint64_t seed) {
  if (m_examples < 1) throw ContractViolation("gen_stained_glass: sizes must be positive");
  const int n = param_count(teacher);
  RngStream teacher_rng(seed, {StreamTag::kDataset, 1, 0, 0});
  Configuration teacher_bits(n);
  for (auto& b : teacher_bits) b = teacher_rng.bernoulli(0.5) ? 1 : 0;
  RngStream rng(seed, {StreamTag::kDataset, 0, 0, 0});
  Dataset ds;
  ds.train_inputs = Matrix<std::uint8_t>(m_examples, teacher.input_dim, 0);
  for (auto& v : ds.train_inputs.data()) v = rng.bernoulli(0.5) ? 1 : 0;
  ds.train_labels.resize(m_examples);
  for (int I = 0; I < m_examples; ++I)
    ds.train_labels[I] =
        static_cast<std::uint8_t>(forward(teacher, teacher_bits, ds.train_inputs.row(I)));
  ds.provenance = "stained-glass(n=" + std::to_string(n) +
                  ",m=" + std::to_string(m_examples) +
                  ",seed=" + std::to_string(seed) + ")";
  ds.validate();
  return ds;
}

// CSV of 64 grayscale features in 0..16 plus an integer class label per row.
// Features binarize at >= 8; labels map class_pair.first -> 0, .second -> 1.
inline Dataset load_digits_csv(const std::string& path, std::pair<int, int> class_pair,
                               int max_examples) {
  std::ifstream in(path);
  if (!in) throw FormatError("load_digits_csv: cannot open " + path);
  std::vector<std::uint8_t> entries;
  std::vector<std::uint8_t> labels;
  std::string line;
  int line_no = 0;
  constexpr int kFeatures = 64;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<int> values;
    while (std::getline(ss, field, ',')) {
      try {
        std::size_t used = 0;
        const int v = std::stoi(field, &used);
        if (used != field.size()) throw std::invalid_argument(field);
        values.push_back(v);
      } catch (const std::exception&) {
        throw ParseError("load_digits_csv: non-integer field '" + field + "'", line_no);
      }
    }
    if (static_cast<int>(values.size()) != kFeatures + 1)
      throw ParseError("load_digits_csv: expected 65 fields, got " +
                           std::to_string(values.size()),
                       line_no);
    const int label = values.back();
    if (label != class_pair.first && label != class_pair.second) continue;
    if (max_examples > 0 && static_cast<int>(labels.size()) >= max_examples) continue;
    for (int j = 0; j < kFeatures; ++j) {
      if (values[j] < 0 || values[j] > 16)
        throw ParseError("load_digits_csv: feature outside 0..16", line_no);
      entries.push_back(values[j] >= 8 ? 1 : 0);
    }
    labels.push_back(label == class_pair.second ? 1 : 0);
  }
  if (labels.empty() ||
      std::find(labels.begin(), labels.end(), 0) == labels.end() ||
      std::find(labels.begin(), labels.end(), 1) == labels.end())
    throw EmptyClassError("load_digits_csv: a requested class is absent");
  Dataset ds;
  const int m = static_cast<int>(labels.size());
  ds.train_inputs = Matrix<std::uint8_t>(m, kFeatures, 0);
  std::copy(entries.begin(), entries.end(), ds.train_inputs.data().begin());
  ds.train_labels = std::move(labels);
  ds.validate();
  ds.provenance = "digits(path=" + path + ",classes=" + std::to_string(class_pair.first) +
                  ":" + std::to_string(class_pair.second) + ",m=" + std::to_string(m) +
                  ",fnv1a=" + std::to_string(dataset_digest(ds)) + ")";
  return ds;
}

namespace detail {

inline std::uint32_t read_u32_be(std::istream& in, const char* what) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  if (!in) throw FormatError(std::string("idx: truncated ") + what);
  return (std::uint32_t{bytes[0]} << 24) | (std::uint32_t{bytes[1]} << 16) |
         (std::uint32_t{bytes[2]} << 8) | std::uint32_t{bytes[3]};
}

}  // namespace detail

// IDX image/label pair in the standard big-endian layout. Images max-pool 2x2
// (on grayscale), then binarize at >= 128, then flatten row-major; labels
// filter and map to {0,1} via class_pair.
inline Dataset load_mnist_idx(const std::string& images_path,
                              const std::string& labels_path,
                              std::pair<int, int> class_pair, bool pool) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw FormatError("load_mnist_idx: cannot open " + images_path);
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw FormatError("load_mnist_idx: cannot open " + labels_path);

  if (detail::read_u32_be(img, "image magic") != 0x00000803u)
    throw FormatError("load_mnist_idx: bad image magic");
  const int count = static_cast<int>(detail::read_u32_be(img, "image count"));
  const int rows = static_cast<int>(detail::read_u32_be(img, "row count"));
  const int cols = static_cast<int>(detail::read_u32_be(img, "column count"));
  if (detail::read_u32_be(lab, "label magic") != 0x00000801u)
    throw FormatError("load_mnist_idx: bad label magic");
  const int label_count = static_cast<int>(detail::read_u32_be(lab, "label count"));
  if (label_count != count)
    throw FormatError("load_mnist_idx: image/label count mismatch");
  if (pool && (rows % 2 != 0 || cols % 2 != 0))
    throw FormatError("load_mnist_idx: pooling requires even image sides");

  const int out_rows = pool ? rows / 2 : rows;
  const int out_cols = pool ? cols / 2 : cols;
  const int d = out_rows * out_cols;

  std::vector<std::uint8_t> raw(static_cast<std::size_t>(rows) * cols);
  std::vector<std::uint8_t> entries;
  std::vector<std::uint8_t> labels;
  for (int img_idx = 0; img_idx < count; ++img_idx) {
    img.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!img) throw FormatError("load_mnist_idx: truncated image data");
    char label_byte = 0;
    lab.read(&label_byte, 1);
    if (!lab) throw FormatError("load_mnist_idx: truncated label data");
    const int label = static_cast<unsigned char>(label_byte);
    if (label != class_pair.first && label != class_pair.second) continue;
    for (int y = 0; y < out_rows; ++y) {
      for (int x = 0; x < out_cols; ++x) {
        int v;
        if (pool) {
          const int y0 = 2 * y, x0 = 2 * x;
          v = std::max(std::max(raw[y0 * cols + x0], raw[y0 * cols + x0 + 1]),
                       std::max(raw[(y0 + 1) * cols + x0], raw[(y0 + 1) * cols + x0 + 1]));
        } else {
          v = raw[y * cols + x];
        }
        entries.push_back(v >= 128 ? 1 : 0);
      }
    }
    labels.push_back(label == class_pair.second ? 1 : 0);
  }
  if (labels.empty() ||
      std::find(labels.begin(), labels.end(), 0) == labels.end() ||
      std::find(labels.begin(), labels.end(), 1) == labels.end())
    throw EmptyClassError("load_mnist_idx: a requested class is absent");

  Dataset ds;
  const int m = static_cast<int>(labels.size());
  ds.train_inputs = Matrix<std::uint8_t>(m, d, 0);
  std::copy(entries.begin(), entries.end(), ds.train_inputs.data().begin());
  ds.train_labels = std::move(labels);
  ds.validate();
  ds.provenance = "idx(path=" + images_path + ",classes=" +
                  std::to_string(class_pair.first) + ":" +
                  std::to_string(class_pair.second) + ",m=" + std::to_string(m) +
                  ",fnv1a=" + std::to_string(dataset_digest(ds)) + ")";
  return ds;
}

inline Problem make_problem(const Dataset& ds, Architecture arch, double beta) {
  return Problem(ds.train_inputs, ds.train_labels, std::move(arch), beta);
}

}  // namespace binmp
