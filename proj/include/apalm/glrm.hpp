// Copyright 2026 The APALM Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef APALM_GLRM_HPP_
#define APALM_GLRM_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "apalm/core.hpp"
#include "apalm/prox.hpp"

namespace apalm {

enum class LossKind { kQuadratic, kHuber, kLogistic };

/// Per-entry loss f_il(a; A_il) with its derivative in a and a Lipschitz
/// constant of that derivative.
class EntryLoss {
 public:
  static EntryLoss quadratic() { return EntryLoss(LossKind::kQuadratic, 0.0); }
  static EntryLoss huber(double delta);
  static EntryLoss logistic() { return EntryLoss(LossKind::kLogistic, 0.0); }
  /// "quadratic", "huber(1.5)", "logistic".
  static EntryLoss parse(std::string_view text);

  LossKind kind() const noexcept { return kind_; }
  double delta() const noexcept { return delta_; }

  double value(double a, double target) const;
  double derivative(double a, double target) const;
  double lipschitz(double target) const;
  std::string to_string() const;

 private:
  EntryLoss(LossKind kind, double delta) : kind_(kind), delta_(delta) {}
  LossKind kind_;
  double delta_;
};

struct DataMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // row-major
  std::vector<unsigned char> observed;  // row-major; 1 = observed

  static DataMatrix dense(std::size_t rows, std::size_t cols,
                          std::vector<double> values);

  double at(std::size_t i, std::size_t l) const { return values[i * cols + l]; }
  bool is_observed(std::size_t i, std::size_t l) const {
    return observed[i * cols + l] != 0;
  }
  std::size_t observed_count() const;
};

/// CSV of reals, one matrix row per line; `?` marks an unobserved entry.
/// Ragged rows and bad tokens throw ParseError(line, field).
DataMatrix parse_matrix(std::istream& is);
DataMatrix load_matrix(const std::filesystem::path& path);
void write_matrix(std::ostream& os, const DataMatrix& data);

struct GlrmSpec {
  std::size_t d1 = 0;
  std::size_t d2 = 0;
  std::size_t rank = 1;
  EntryLoss loss = EntryLoss::quadratic();
  Regularizer row_reg = Regularizer::zero();
  Regularizer col_reg = Regularizer::zero();
  double quad_reg = 0.0;  // mu, adds mu ||block||^2 to every block
  std::optional<double> global_M;
};

/// Blocks 0..d1-1 are the row factors x_{i,1}; blocks d1..d1+d2-1 the column
/// factors x_{l,2}. All blocks have dimension `rank`.
Problem build_glrm(const GlrmSpec& spec, const DataMatrix& data);

/// Entries i.i.d. uniform on [0, 1/sqrt(rank)].
BlockVector glrm_initial_point(const GlrmSpec& spec, std::uint64_t seed);

struct DeskProblem {
  std::string name;
  GlrmSpec spec;
  DataMatrix data;
};

/// "nmf_desk", "sparse_pca_desk", "quad_cluster_desk".
DeskProblem desk_problem(std::string_view name);
std::vector<std::string> desk_problem_names();

}  // namespace apalm

#endif  // APALM_GLRM_HPP_
