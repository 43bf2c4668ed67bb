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

#ifndef APALM_SOLVER_HPP_
#define APALM_SOLVER_HPP_

#include <cstddef>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "apalm/core.hpp"
#include "apalm/history.hpp"
#include "apalm/random.hpp"

namespace apalm {

enum class Variant { kStochastic, kDeterministic };

/// Block order of the deterministic variant. The stochastic variant always
/// samples uniformly.
enum class BlockOrder { kCyclic, kShuffled };

struct LineSearchParams {
  bool enabled = false;
  double C = 1e-6;      // required decrease of the Lyapunov value per ||step||^2
  double shrink = 0.5;  // in (0, 1)
  double grow = 1.0;    // >= 1; first trial is grow * (formula stepsize)
};

struct SolverConfig {
  Variant variant = Variant::kDeterministic;
  double c = 0.9;
  std::size_t tau = 0;
  /// Essential-cyclicity window; defaults to m (cyclic) or 2m - 1 (shuffled).
  std::optional<std::size_t> K;
  BlockOrder order = BlockOrder::kCyclic;
  std::uint64_t max_iters = 1000;
  double tol_residual = 1e-6;
  std::uint64_t seed = 1;
  LineSearchParams linesearch;
  /// Rows between residual evaluations; 0 picks 1 (deterministic) or 25
  /// (stochastic).
  std::size_t residual_stride = 0;

  /// Throws ConfigError on out-of-range fields for an m-block problem.
  void validate(std::size_t m) const;
  std::size_t declared_K(std::size_t m) const;
  std::size_t effective_residual_stride() const;
};

/// min{c / (L + 2 M tau / sqrt(m)), lambda_r}; a finite lambda_r is scaled
/// by (1 - 1e-9) so the prox is evaluated strictly inside its domain.
double stepsize_stochastic(double L, double M, std::size_t tau, std::size_t m,
                           double c, double lambda_r);

/// min{c / (L + 2 M sqrt(rho_tau tau)), lambda_r}, same strictness rule.
double stepsize_deterministic(double L, double M, std::size_t rho_tau,
                              std::size_t tau, double c, double lambda_r);

/// Stepsize formula with the run-level constants bound.
struct StepRule {
  Variant variant = Variant::kDeterministic;
  double c = 0.9;
  double M = 1.0;
  std::size_t tau = 0;
  std::size_t m = 1;
  std::size_t rho_tau = 0;

  double gamma(double L, double lambda_r) const;
};

/// j_k for the stateless orders: uniform draw (stochastic) or k mod m.
std::size_t next_index(const SolverConfig& cfg, std::size_t m, std::uint64_t k,
                       Rng& rng);

/// The index sequence j_0, j_1, ... for a configuration, as a pure function
/// of (cfg, m). Shuffled epochs and uniform draws come from cfg.seed.
std::vector<std::size_t> index_sequence(const SolverConfig& cfg, std::size_t m,
                                        std::uint64_t length);

struct StepOutcome {
  std::size_t j = 0;
  double gamma = 0.0;
  std::vector<double> new_block;
  double step_norm = 0.0;  // ||x_j^{k+1} - x_j^k||
  std::vector<double> gradient;  // grad_j f at the (possibly stale) snapshot
  std::vector<double> anchor;    // x_j^k, the block the prox is centered on
  double lipschitz = 0.0;        // L_j at the snapshot
  std::size_t shrinks = 0;       // line search only
};

/// new_block = prox_{gamma r_j}(anchor - gamma * gradient).
StepOutcome prox_gradient_step(const Problem& problem, std::size_t j,
                               std::span<const double> anchor,
                               std::vector<double> gradient, double gamma);

/// One block update at iteration k: gradient at x^{k-d}, prox anchored at the
/// current x_j^k. Does not write to the history.
StepOutcome step(const Problem& problem, const IterateHistory& history,
                 std::uint64_t k, std::size_t j, const DelayRecord& d,
                 double gamma);

/// Step with the stepsize chosen by `rule` from L_j at the snapshot.
StepOutcome ruled_step(const Problem& problem, const StepRule& rule,
                       const BlockVector& snapshot,
                       std::span<const double> anchor, std::size_t j);

/// xi_k = coeff * (sum of the last tau squared step norms), kept by the O(1)
/// recurrence xi' = xi + coeff * s_new - coeff * s_oldest.
class XiAccumulator {
 public:
  XiAccumulator(double coeff, std::size_t tau);

  double value() const noexcept { return xi_; }
  double coeff() const noexcept { return coeff_; }
  void push(double squared_step);

 private:
  double coeff_;
  std::size_t tau_;
  std::deque<double> terms_;
  double xi_ = 0.0;
};

/// Backtracking step for the deterministic variant. Starting from
/// gamma0 * grow, the stepsize shrinks until
///   Psi(x^{k+1}) + (C + M sqrt(rho tau) / 2) ||step||^2 <= Psi(x^k) + xi_k.
/// Throws StagnationError after 60 shrinks. `psi_k` is Psi(x^k).
StepOutcome linesearch_step(const Problem& problem,
                            const IterateHistory& history, std::uint64_t k,
                            std::size_t j, const DelayRecord& d, double gamma0,
                            const LineSearchParams& ls, const StepRule& rule,
                            const XiAccumulator& xi, double psi_k);

}  // namespace apalm

#endif  // APALM_SOLVER_HPP_
