// Copyright (c) 2026 the binmp authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "binmp/errors.hpp"

namespace binmp {

// Shortest round-trip decimal form; the same value always prints the same
// bytes, which keeps emitted CSV files reproducible.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw ContractViolation("parse_double: bad number '" + s + "'");
  return v;
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header)
      : out_(path), columns_(header.size()), path_(path) {
    if (!out_) throw FormatError("CsvWriter: cannot open " + path);
    write_fields(header);
  }

  void write_row(const std::vector<std::string>& fields) {
    if (fields.size() != columns_)
      throw ContractViolation("CsvWriter: column count mismatch in " + path_);
    write_fields(fields);
  }

  const std::string& path() const { return path_; }

 private:
  void write_fields(const std::vector<std::string>& fields) {
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (j) out_ << ',';
      out_ << fields[j];
    }
    out_ << '\n';
  }

  std::ofstream out_;
  std::size_t columns_;
  std::string path_;
};

// Minimal reader used by tests to validate emitted schemas.
inline std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("read_csv: cannot open " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::string field;
    for (char c : line) {
      if (c == ',') {
        fields.push_back(field);
        field.clear();
      } else {
        field.push_back(c);
      }
    }
    fields.push_back(field);
    rows.push_back(std::move(fields));
  }
  return rows;
}

}  // namespace binmp
