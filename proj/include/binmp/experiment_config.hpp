// Copyright (c) 2026 the binmp authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <istream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "binmp/csv.hpp"
#include "binmp/errors.hpp"

namespace binmp {

// One experiment per file: flat key = value lines under bracketed sections.
// Unset grids are filled by finalize_defaults according to the experiment
// kind and the paper_scale flag.
struct ExperimentConfig {
  // [experiment]
  std::string kind = "phase-sweep";
  std::string out_dir = "out";
  // [dataset]
  std::string dataset = "glass";  // glass | stained-glass | digits | mnist
  int n_vars = 10;
  int teacher_inputs = 30;
  int teacher_hidden = 1;
  std::string digits_csv;
  int class_a = 0;
  int class_b = 1;
  std::string mnist_images, mnist_labels, mnist_test_images, mnist_test_labels;
  bool mnist_pool = true;
  int max_examples = 0;  // 0 = all
  // [model]
  std::string arch = "linear";  // linear | mlp | conv
  int mlp_hidden = 2;
  // [engine]
  double beta = std::numeric_limits<double>::infinity();
  int l_bp = 5;
  int l_sp = 100;
  int k_bins = 31;
  double gamma = 0.5;
  int bp_max_iters = 100;
  int sp_max_iters = 50;
  double tol = 1e-4;
  int minibatch = 0;
  std::string sp_variant = "s4p";  // s3p | s4p
  double logit_clip = 12.0;
  bool adaptive_gamma = false;
  // [grids]
  std::vector<int> n_grid, m_grid, lbp_grid, lsp_grid, k_grid;
  std::vector<double> gamma_grid, beta_grid;
  // [run]
  std::vector<std::uint64_t> seeds;
  bool paper_scale = false;
  int checkpoint_every = 0;
  int threads = 0;  // 0 = BINMP_THREADS env or hardware

  bool operator==(const ExperimentConfig&) const = default;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  std::size_t e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

inline int parse_int_field(const std::string& v, int line) {
  try {
    std::size_t used = 0;
    const int r = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ParseError("config: bad integer '" + v + "'", line);
  }
}

inline std::uint64_t parse_u64_field(const std::string& v, int line) {
  try {
    std::size_t used = 0;
    const std::uint64_t r = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ParseError("config: bad unsigned integer '" + v + "'", line);
  }
}

inline double parse_double_field(const std::string& v, int line) {
  try {
    return parse_double(v);
  } catch (const std::exception&) {
    throw ParseError("config: bad number '" + v + "'", line);
  }
}

inline bool parse_bool_field(const std::string& v, int line) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ParseError("config: bad boolean '" + v + "'", line);
}

template <typename T, typename Fn>
std::vector<T> parse_list_field(const std::string& v, int line, Fn&& one) {
  std::vector<T> out;
  if (trim(v).empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(one(trim(item), line));
  return out;
}

template <typename T>
std::string join_list(const std::vector<T>& values) {
  std::string out;
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (j) out += ',';
    if constexpr (std::is_same_v<T, double>)
      out += format_double(values[j]);
    else
      out += std::to_string(values[j]);
  }
  return out;
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(std::istream& in) {
  ExperimentConfig cfg;
  cfg.seeds.clear();
  std::string section;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ParseError("config: unterminated section header", line_no);
      section = t.substr(1, t.size() - 2);
      if (section != "experiment" && section != "dataset" && section != "model" &&
          section != "engine" && section != "grids" && section != "run")
        throw ParseError("config: unknown section [" + section + "]", line_no);
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos) throw ParseError("config: expected key = value", line_no);
    const std::string key = detail::trim(t.substr(0, eq));
    const std::string value = detail::trim(t.substr(eq + 1));
    using namespace detail;
    bool known = true;
    if (section == "experiment") {
      if (key == "kind") cfg.kind = value;
      else if (key == "out_dir") cfg.out_dir = value;
      else known = false;
    } else if (section == "dataset") {
      if (key == "kind") cfg.dataset = value;
      else if (key == "n_vars") cfg.n_vars = parse_int_field(value, line_no);
      else if (key == "teacher_inputs") cfg.teacher_inputs = parse_int_field(value, line_no);
      else if (key == "teacher_hidden") cfg.teacher_hidden = parse_int_field(value, line_no);
      else if (key == "digits_csv") cfg.digits_csv = value;
      else if (key == "class_a") cfg.class_a = parse_int_field(value, line_no);
      else if (key == "class_b") cfg.class_b = parse_int_field(value, line_no);
      else if (key == "mnist_images") cfg.mnist_images = value;
      else if (key == "mnist_labels") cfg.mnist_labels = value;
      else if (key == "mnist_test_images") cfg.mnist_test_images = value;
      else if (key == "mnist_test_labels") cfg.mnist_test_labels = value;
      else if (key == "mnist_pool") cfg.mnist_pool = parse_bool_field(value, line_no);
      else if (key == "max_examples") cfg.max_examples = parse_int_field(value, line_no);
      else known = false;
    } else if (section == "model") {
      if (key == "arch") cfg.arch = value;
      else if (key == "mlp_hidden") cfg.mlp_hidden = parse_int_field(value, line_no);
      else known = false;
    } else if (section == "engine") {
      if (key == "beta") cfg.beta = parse_double_field(value, line_no);
      else if (key == "l_bp") cfg.l_bp = parse_int_field(value, line_no);
      else if (key == "l_sp") cfg.l_sp = parse_int_field(value, line_no);
      else if (key == "k_bins") cfg.k_bins = parse_int_field(value, line_no);
      else if (key == "gamma") cfg.gamma = parse_double_field(value, line_no);
      else if (key == "bp_max_iters") cfg.bp_max_iters = parse_int_field(value, line_no);
      else if (key == "sp_max_iters") cfg.sp_max_iters = parse_int_field(value, line_no);
      else if (key == "tol") cfg.tol = parse_double_field(value, line_no);
      else if (key == "minibatch") cfg.minibatch = parse_int_field(value, line_no);
      else if (key == "sp_variant") cfg.sp_variant = value;
      else if (key == "logit_clip") cfg.logit_clip = parse_double_field(value, line_no);
      else if (key == "adaptive_gamma") cfg.adaptive_gamma = parse_bool_field(value, line_no);
      else known = false;
    } else if (section == "grids") {
      auto as_int = [](const std::string& s, int ln) { return parse_int_field(s, ln); };
      auto as_double = [](const std::string& s, int ln) { return parse_double_field(s, ln); };
      if (key == "n_grid") cfg.n_grid = parse_list_field<int>(value, line_no, as_int);
      else if (key == "m_grid") cfg.m_grid = parse_list_field<int>(value, line_no, as_int);
      else if (key == "lbp_grid") cfg.lbp_grid = parse_list_field<int>(value, line_no, as_int);
      else if (key == "lsp_grid") cfg.lsp_grid = parse_list_field<int>(value, line_no, as_int);
      else if (key == "k_grid") cfg.k_grid = parse_list_field<int>(value, line_no, as_int);
      else if (key == "gamma_grid") cfg.gamma_grid = parse_list_field<double>(value, line_no, as_double);
      else if (key == "beta_grid") cfg.beta_grid = parse_list_field<double>(value, line_no, as_double);
      else known = false;
    } else if (section == "run") {
      if (key == "seeds")
        cfg.seeds = detail::parse_list_field<std::uint64_t>(
            value, line_no,
            [](const std::string& s, int ln) { return detail::parse_u64_field(s, ln); });
      else if (key == "paper_scale") cfg.paper_scale = parse_bool_field(value, line_no);
      else if (key == "checkpoint_every") cfg.checkpoint_every = parse_int_field(value, line_no);
      else if (key == "threads") cfg.threads = parse_int_field(value, line_no);
      else known = false;
    } else {
      throw ParseError("config: key outside any section", line_no);
    }
    if (!known) throw ParseError("config: unknown key '" + key + "' in [" + section + "]", line_no);
  }
  return cfg;
}

inline ExperimentConfig parse_experiment_config(const std::string& text) {
  std::istringstream in(text);
  return parse_experiment_config(in);
}

inline std::string emit_experiment_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "[experiment]\n"
      << "kind = " << cfg.kind << "\n"
      << "out_dir = " << cfg.out_dir << "\n\n"
      << "[dataset]\n"
      << "kind = " << cfg.dataset << "\n"
      << "n_vars = " << cfg.n_vars << "\n"
      << "teacher_inputs = " << cfg.teacher_inputs << "\n"
      << "teacher_hidden = " << cfg.teacher_hidden << "\n"
      << "digits_csv = " << cfg.digits_csv << "\n"
      << "class_a = " << cfg.class_a << "\n"
      << "class_b = " << cfg.class_b << "\n"
      << "mnist_images = " << cfg.mnist_images << "\n"
      << "mnist_labels = " << cfg.mnist_labels << "\n"
      << "mnist_test_images = " << cfg.mnist_test_images << "\n"
      << "mnist_test_labels = " << cfg.mnist_test_labels << "\n"
      << "mnist_pool = " << (cfg.mnist_pool ? "true" : "false") << "\n"
      << "max_examples = " << cfg.max_examples << "\n\n"
      << "[model]\n"
      << "arch = " << cfg.arch << "\n"
      << "mlp_hidden = " << cfg.mlp_hidden << "\n\n"
      << "[engine]\n"
      << "beta = " << format_double(cfg.beta) << "\n"
      << "l_bp = " << cfg.l_bp << "\n"
      << "l_sp = " << cfg.l_sp << "\n"
      << "k_bins = " << cfg.k_bins << "\n"
      << "gamma = " << format_double(cfg.gamma) << "\n"
      << "bp_max_iters = " << cfg.bp_max_iters << "\n"
      << "sp_max_iters = " << cfg.sp_max_iters << "\n"
      << "tol = " << format_double(cfg.tol) << "\n"
      << "minibatch = " << cfg.minibatch << "\n"
      << "sp_variant = " << cfg.sp_variant << "\n"
      << "logit_clip = " << format_double(cfg.logit_clip) << "\n"
      << "adaptive_gamma = " << (cfg.adaptive_gamma ? "true" : "false") << "\n\n"
      << "[grids]\n"
      << "n_grid = " << detail::join_list(cfg.n_grid) << "\n"
      << "m_grid = " << detail::join_list(cfg.m_grid) << "\n"
      << "lbp_grid = " << detail::join_list(cfg.lbp_grid) << "\n"
      << "lsp_grid = " << detail::join_list(cfg.lsp_grid) << "\n"
      << "k_grid = " << detail::join_list(cfg.k_grid) << "\n"
      << "gamma_grid = " << detail::join_list(cfg.gamma_grid) << "\n"
      << "beta_grid = " << detail::join_list(cfg.beta_grid) << "\n\n"
      << "[run]\n"
      << "seeds = " << detail::join_list(cfg.seeds) << "\n"
      << "paper_scale = " << (cfg.paper_scale ? "true" : "false") << "\n"
      << "checkpoint_every = " << cfg.checkpoint_every << "\n"
      << "threads = " << cfg.threads << "\n";
  return out.str();
}

// Fills unset grids and seeds with the desk-scale defaults for the experiment
// kind, or the full grids behind paper_scale, then bounds-checks everything.
inline void finalize_defaults(ExperimentConfig& cfg) {
  const bool paper = cfg.paper_scale;
  auto iota_seeds = [](int count) {
    std::vector<std::uint64_t> s(count);
    for (int j = 0; j < count; ++j) s[j] = static_cast<std::uint64_t>(j + 1);
    return s;
  };
  if (cfg.kind == "consistency-bp") {
    if (cfg.n_grid.empty()) cfg.n_grid = paper ? std::vector<int>{4, 6, 8, 10} : std::vector<int>{4, 6};
    if (cfg.gamma_grid.empty()) cfg.gamma_grid = {0.2, 0.5, 0.8};
    if (cfg.lbp_grid.empty())
      cfg.lbp_grid = paper ? std::vector<int>{5, 8, 10, 12, 15, 20, 25, 50} : std::vector<int>{5, 20};
    if (cfg.seeds.empty()) cfg.seeds = iota_seeds(paper ? 10 : 5);
    if (std::isinf(cfg.beta)) cfg.beta = 10.0;  // keep exact BP defined on UNSAT instances
  } else if (cfg.kind == "consistency-sp") {
    if (cfg.n_grid.empty()) cfg.n_grid = paper ? std::vector<int>{20} : std::vector<int>{8};
    if (cfg.k_grid.empty()) cfg.k_grid = paper ? std::vector<int>{31, 51, 101, 201} : std::vector<int>{5, 11};
    if (cfg.gamma_grid.empty()) cfg.gamma_grid = paper ? std::vector<double>{0.2, 0.5, 0.8} : std::vector<double>{0.5};
    if (cfg.lbp_grid.empty()) cfg.lbp_grid = paper ? std::vector<int>{5, 10, 20, 50, 100} : std::vector<int>{5};
    if (cfg.lsp_grid.empty()) cfg.lsp_grid = paper ? std::vector<int>{5, 10, 20, 50, 100} : std::vector<int>{10, 50};
    if (cfg.m_grid.empty()) cfg.m_grid = paper ? std::vector<int>{8, 12, 16, 32} : std::vector<int>{8, 12};
    if (cfg.seeds.empty()) cfg.seeds = iota_seeds(paper ? 5 : 2);
    if (std::isinf(cfg.beta)) cfg.beta = 10.0;
  } else if (cfg.kind == "phase-sweep") {
    if (cfg.m_grid.empty()) {
      if (cfg.dataset == "digits") {
        for (int m = 5; m <= 245; m += 10) cfg.m_grid.push_back(m);
      } else {
        for (int m = 5; m <= 50; m += 5) cfg.m_grid.push_back(m);
      }
    }
    if (cfg.seeds.empty()) cfg.seeds = iota_seeds(20);
  } else if (cfg.kind == "bin-trace") {
    if (cfg.lsp_grid.empty()) cfg.lsp_grid = {1, 10, 100, 500};
    if (cfg.seeds.empty()) cfg.seeds = iota_seeds(1);
    if (cfg.m_grid.empty()) cfg.m_grid = {20};
    cfg.sp_max_iters = cfg.sp_max_iters == 50 ? 20 : cfg.sp_max_iters;
  } else if (cfg.kind == "mnist-train") {
    if (cfg.beta_grid.empty())
      cfg.beta_grid = {0.1, 1.0, 10.0, 100.0, std::numeric_limits<double>::infinity()};
    if (cfg.seeds.empty()) cfg.seeds = iota_seeds(1);
    if (cfg.minibatch == 0) cfg.minibatch = 32;
    if (cfg.arch == "conv") cfg.adaptive_gamma = true;
  } else {
    throw ContractViolation("config: unknown experiment kind '" + cfg.kind + "'");
  }

  if (cfg.l_bp < 1 || cfg.l_sp < 1 || cfg.k_bins < 2 || cfg.bp_max_iters < 1 ||
      cfg.sp_max_iters < 1 || !(cfg.tol > 0.0) || cfg.minibatch < 0)
    throw ContractViolation("config: engine parameter out of bounds");
  if (!(cfg.gamma >= 0.0 && cfg.gamma <= 1.0))
    throw ContractViolation("config: gamma outside [0,1]");
  if (!(cfg.beta > 0.0)) throw ContractViolation("config: beta must be positive");
  if (cfg.sp_variant != "s3p" && cfg.sp_variant != "s4p")
    throw ContractViolation("config: sp_variant must be s3p or s4p");
  if (cfg.seeds.empty()) throw ContractViolation("config: seeds must be non-empty");
  for (double g : cfg.gamma_grid)
    if (!(g >= 0.0 && g <= 1.0)) throw ContractViolation("config: grid gamma outside [0,1]");
  for (double b : cfg.beta_grid)
    if (!(b > 0.0)) throw ContractViolation("config: grid beta must be positive");
}

}  // namespace binmp
