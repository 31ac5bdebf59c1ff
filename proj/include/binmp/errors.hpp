// Copyright (c) 2026 the binmp authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace binmp {

// Violated precondition: out-of-range argument, shape mismatch, bad gamma...
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A histogram carries no mass anywhere; nothing can be normalized or sampled.
class DegenerateSurveyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incoming messages assign zero weight to both states of a variable.
class ContradictionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Instance exceeds the guard of an exact (enumerating) code path.
class TractabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed text input; carries the 1-based source line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_ = 0;
};

// Malformed or truncated binary input (IDX files, checkpoints).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A requested class label does not occur in the dataset.
class EmptyClassError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace binmp
