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

#ifndef APALM_CORE_HPP_
#define APALM_CORE_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "apalm/prox.hpp"

namespace apalm {

/// Lower bound applied to every coordinate Lipschitz estimate so stepsize
/// formulas never divide by zero on flat blocks.
inline constexpr double kLipschitzFloor = 1e-12;

/// H = H_1 x ... x H_m, described by the dimension of each factor.
class BlockSpace {
 public:
  BlockSpace() = default;
  /// Throws ContractViolation if dims is empty or has a zero entry.
  explicit BlockSpace(std::vector<std::size_t> dims);

  std::size_t num_blocks() const noexcept { return dims_.size(); }
  std::size_t dim(std::size_t j) const { return dims_.at(j); }
  std::span<const std::size_t> dims() const noexcept { return dims_; }
  std::size_t total_dim() const noexcept { return total_; }

  bool operator==(const BlockSpace&) const = default;

 private:
  std::vector<std::size_t> dims_;
  std::size_t total_ = 0;
};

/// A point of a BlockSpace: one real array per block.
class BlockVector {
 public:
  BlockVector() = default;
  /// All-zero vector of the given space.
  explicit BlockVector(const BlockSpace& space);
  explicit BlockVector(std::vector<std::vector<double>> blocks)
      : blocks_(std::move(blocks)) {}

  std::size_t num_blocks() const noexcept { return blocks_.size(); }
  std::span<const double> block(std::size_t j) const { return blocks_.at(j); }
  std::span<double> block(std::size_t j) { return blocks_.at(j); }
  void set_block(std::size_t j, std::span<const double> value);

  bool conforms(const BlockSpace& space) const noexcept;

  double squared_norm() const noexcept;
  double norm() const noexcept;

  /// Flattened copy, blocks in order.
  std::vector<double> flatten() const;
  /// Inverse of flatten() for the given space.
  static BlockVector unflatten(const BlockSpace& space,
                               std::span<const double> flat);

  bool operator==(const BlockVector&) const = default;

 private:
  std::vector<std::vector<double>> blocks_;
};

/// ||a - b||.
double distance(const BlockVector& a, const BlockVector& b);

/// The smooth coupling term f with its partial-gradient oracle.
///
/// Implementations must be immutable after construction; the parallel
/// executor calls them from several threads at once.
class SmoothLoss {
 public:
  virtual ~SmoothLoss() = default;

  virtual double value(const BlockVector& x) const = 0;
  /// Writes grad_j f(x) into out (length dims[j]).
  virtual void partial_gradient(const BlockVector& x, std::size_t j,
                                std::span<double> out) const = 0;
  /// An upper bound on the Lipschitz constant of y -> grad_j f(x_{-j}; y).
  virtual double block_lipschitz(const BlockVector& x, std::size_t j) const = 0;
};

/// SmoothLoss built from plain callables.
class FunctionLoss final : public SmoothLoss {
 public:
  using ValueFn = std::function<double(const BlockVector&)>;
  using GradFn =
      std::function<void(const BlockVector&, std::size_t, std::span<double>)>;
  using LipFn = std::function<double(const BlockVector&, std::size_t)>;

  FunctionLoss(ValueFn value, GradFn grad, LipFn lip)
      : value_(std::move(value)), grad_(std::move(grad)), lip_(std::move(lip)) {}

  double value(const BlockVector& x) const override { return value_(x); }
  void partial_gradient(const BlockVector& x, std::size_t j,
                        std::span<double> out) const override {
    grad_(x, j, out);
  }
  double block_lipschitz(const BlockVector& x, std::size_t j) const override {
    return lip_(x, j);
  }

 private:
  ValueFn value_;
  GradFn grad_;
  LipFn lip_;
};

/// Psi = f + sum_j r_j over a block space.
class Problem {
 public:
  /// Throws ContractViolation when regs.size() != space.num_blocks().
  /// An empty global_M means "auto" (see estimate_global_lipschitz).
  Problem(BlockSpace space, std::shared_ptr<const SmoothLoss> smooth,
          std::vector<Regularizer> regs,
          std::optional<double> global_M = std::nullopt,
          bool coercive = false);

  const BlockSpace& space() const noexcept { return space_; }
  const SmoothLoss& smooth() const noexcept { return *smooth_; }
  const Regularizer& reg(std::size_t j) const { return regs_.at(j); }
  std::span<const Regularizer> regs() const noexcept { return regs_; }
  std::size_t num_blocks() const noexcept { return space_.num_blocks(); }

  const std::optional<double>& global_M() const noexcept { return global_M_; }
  /// Declared coercivity of Psi; gates automatic estimation of M.
  bool coercive() const noexcept { return coercive_; }

  /// Evaluations below this value fail the run (Psi must be bounded below).
  double lower_bound() const noexcept { return lower_bound_; }
  void set_lower_bound(double v) noexcept { lower_bound_ = v; }

  /// min_j prox_bound(r_j).
  double lambda_r() const noexcept;

 private:
  BlockSpace space_;
  std::shared_ptr<const SmoothLoss> smooth_;
  std::vector<Regularizer> regs_;
  std::optional<double> global_M_;
  bool coercive_ = false;
  double lower_bound_ = -1e18;
};

/// f(x) + sum_j r_j(x_j). May be +infinity on indicator violations. Throws
/// ContractViolation on dimension mismatch and OracleError if the value is
/// NaN, -infinity, or below problem.lower_bound().
double psi_value(const Problem& problem, const BlockVector& x);

/// grad_j f(x). Throws ContractViolation on a bad block index or mismatched
/// x, OracleError on non-finite entries.
std::vector<double> partial_gradient(const Problem& problem,
                                     const BlockVector& x, std::size_t j);

/// Full gradient, one block at a time.
BlockVector full_gradient(const Problem& problem, const BlockVector& x);

/// Upper bound on L_j(x_{-j}), never below kLipschitzFloor.
double coordinate_lipschitz(const Problem& problem, const BlockVector& x,
                            std::size_t j);

struct LipschitzEstimateOptions {
  std::uint64_t seed = 0x5eed;
  std::size_t walk_steps = 400;
  std::size_t pairs = 10000;
  double inflate = 0.10;
  double safety = 2.0;
};

/// Estimates a Lipschitz constant M of grad f on the smallest axis-aligned
/// box containing sampled points of {Psi <= Psi(x0)}, inflated by
/// `inflate` of its width per coordinate, and multiplied by `safety`.
///
/// Level-set points come from a hit-and-run walk started at x0. Difference
/// ratios are taken over uniform random pairs in the box and over pairs
/// produced by finite-difference power iteration, which find the steep
/// directions that uniform pairs miss. Requires problem.coercive().
double estimate_global_lipschitz(const Problem& problem, const BlockVector& x0,
                                 const LipschitzEstimateOptions& opts = {});

/// problem.global_M() if set, otherwise the estimate above.
double resolve_global_lipschitz(const Problem& problem, const BlockVector& x0,
                                const LipschitzEstimateOptions& opts = {});

}  // namespace apalm

#endif  // APALM_CORE_HPP_
