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

#include "apalm/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "apalm/error.hpp"

namespace apalm {
namespace {

double apply_prox_bound(double gamma, double lambda_r) {
  if (std::isfinite(lambda_r)) {
    return std::min(gamma, lambda_r * (1.0 - 1e-9));
  }
  return gamma;
}

double block_norm_diff(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

void SolverConfig::validate(std::size_t m) const {
  if (!(c > 0.0 && c < 1.0)) throw ConfigError("c must lie strictly in (0, 1)");
  if (!(tol_residual >= 0.0)) throw ConfigError("tol_residual must be >= 0");
  if (variant == Variant::kDeterministic) {
    const std::size_t k = declared_K(m);
    if (k < m) throw ConfigError("K must be at least the number of blocks");
    if (order == BlockOrder::kShuffled && k < 2 * m - 1) {
      throw ConfigError("shuffled epochs need K >= 2m - 1");
    }
  }
  if (linesearch.enabled) {
    if (variant != Variant::kDeterministic) {
      throw ConfigError("line search is only defined for the deterministic variant");
    }
    if (!(linesearch.C > 0.0)) throw ConfigError("line search C must be > 0");
    if (!(linesearch.shrink > 0.0 && linesearch.shrink < 1.0)) {
      throw ConfigError("line search shrink must lie in (0, 1)");
    }
    if (!(linesearch.grow >= 1.0)) throw ConfigError("line search grow must be >= 1");
  }
}

std::size_t SolverConfig::declared_K(std::size_t m) const {
  if (K) return *K;
  return order == BlockOrder::kShuffled ? 2 * m - 1 : m;
}

std::size_t SolverConfig::effective_residual_stride() const {
  if (residual_stride > 0) return residual_stride;
  return variant == Variant::kStochastic ? 25 : 1;
}

double stepsize_stochastic(double L, double M, std::size_t tau, std::size_t m,
                           double c, double lambda_r) {
  const double denom = std::max(L, kLipschitzFloor) +
                       2.0 * M * static_cast<double>(tau) /
                           std::sqrt(static_cast<double>(m));
  return apply_prox_bound(c / denom, lambda_r);
}

double stepsize_deterministic(double L, double M, std::size_t rho_tau,
                              std::size_t tau, double c, double lambda_r) {
  const double denom =
      std::max(L, kLipschitzFloor) +
      2.0 * M * std::sqrt(static_cast<double>(rho_tau) * static_cast<double>(tau));
  return apply_prox_bound(c / denom, lambda_r);
}

double StepRule::gamma(double L, double lambda_r) const {
  if (variant == Variant::kStochastic) {
    return stepsize_stochastic(L, M, tau, m, c, lambda_r);
  }
  return stepsize_deterministic(L, M, rho_tau, tau, c, lambda_r);
}

std::size_t next_index(const SolverConfig& cfg, std::size_t m, std::uint64_t k,
                       Rng& rng) {
  if (cfg.variant == Variant::kStochastic) return uniform_index(rng, m);
  return static_cast<std::size_t>(k % m);
}

std::vector<std::size_t> index_sequence(const SolverConfig& cfg, std::size_t m,
                                        std::uint64_t length) {
  std::vector<std::size_t> out;
  out.reserve(length);
  Rng rng(cfg.seed);
  if (cfg.variant == Variant::kDeterministic &&
      cfg.order == BlockOrder::kShuffled) {
    std::vector<std::size_t> perm(m);
    while (out.size() < length) {
      std::iota(perm.begin(), perm.end(), 0);
      for (std::size_t i = m; i > 1; --i) {
        std::swap(perm[i - 1], perm[uniform_index(rng, i)]);
      }
      for (std::size_t v : perm) {
        if (out.size() == length) break;
        out.push_back(v);
      }
    }
    return out;
  }
  for (std::uint64_t k = 0; k < length; ++k) {
    out.push_back(next_index(cfg, m, k, rng));
  }
  return out;
}

StepOutcome prox_gradient_step(const Problem& problem, std::size_t j,
                               std::span<const double> anchor,
                               std::vector<double> gradient, double gamma) {
  if (anchor.size() != gradient.size()) {
    throw ContractViolation("gradient and block dimensions differ");
  }
  std::vector<double> v(anchor.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = anchor[i] - gamma * gradient[i];
  ProxResult p = prox(problem.reg(j), v, gamma);

  StepOutcome out;
  out.j = j;
  out.gamma = gamma;
  out.step_norm = block_norm_diff(p.point, anchor);
  out.new_block = std::move(p.point);
  out.gradient = std::move(gradient);
  out.anchor.assign(anchor.begin(), anchor.end());
  return out;
}

StepOutcome step(const Problem& problem, const IterateHistory& history,
                 std::uint64_t k, std::size_t j, const DelayRecord& d,
                 double gamma) {
  const BlockVector snapshot = history.compose_delayed(k, d.d);
  const std::vector<double> anchor =
      history.block_at(j, static_cast<std::int64_t>(k));
  StepOutcome out = prox_gradient_step(problem, j, anchor,
                                       partial_gradient(problem, snapshot, j),
                                       gamma);
  out.lipschitz = coordinate_lipschitz(problem, snapshot, j);
  return out;
}

StepOutcome ruled_step(const Problem& problem, const StepRule& rule,
                       const BlockVector& snapshot,
                       std::span<const double> anchor, std::size_t j) {
  const double L = coordinate_lipschitz(problem, snapshot, j);
  const double gamma = rule.gamma(L, prox_bound(problem.reg(j)));
  StepOutcome out = prox_gradient_step(problem, j, anchor,
                                       partial_gradient(problem, snapshot, j),
                                       gamma);
  out.lipschitz = L;
  return out;
}

XiAccumulator::XiAccumulator(double coeff, std::size_t tau)
    : coeff_(coeff), tau_(tau) {}

void XiAccumulator::push(double squared_step) {
  if (tau_ == 0) return;
  xi_ += coeff_ * squared_step;
  terms_.push_back(squared_step);
  if (terms_.size() > tau_) {
    xi_ -= coeff_ * terms_.front();
    terms_.pop_front();
  }
}

StepOutcome linesearch_step(const Problem& problem,
                            const IterateHistory& history, std::uint64_t k,
                            std::size_t j, const DelayRecord& d, double gamma0,
                            const LineSearchParams& ls, const StepRule& rule,
                            const XiAccumulator& xi, double psi_k) {
  constexpr std::size_t kMaxShrinks = 60;
  const BlockVector snapshot = history.compose_delayed(k, d.d);
  BlockVector trial = history.iterate(k);
  const std::vector<double> anchor(trial.block(j).begin(), trial.block(j).end());
  const std::vector<double> grad = partial_gradient(problem, snapshot, j);
  const double lambda = prox_bound(problem.reg(j));
  const double penalty =
      ls.C + 0.5 * rule.M *
                 std::sqrt(static_cast<double>(rule.rho_tau) *
                           static_cast<double>(rule.tau));
  // Rounding in Psi alone must not reject a step that is zero in exact
  // arithmetic.
  const double slack = 1e-13 * std::max(1.0, std::abs(psi_k));

  double gamma = gamma0 * ls.grow;
  if (std::isfinite(lambda)) gamma = std::min(gamma, lambda * (1.0 - 1e-9));
  for (std::size_t shrinks = 0; shrinks <= kMaxShrinks; ++shrinks) {
    StepOutcome out = prox_gradient_step(problem, j, anchor, grad, gamma);
    trial.set_block(j, out.new_block);
    const double psi_next = psi_value(problem, trial);
    const double lhs = psi_next + penalty * out.step_norm * out.step_norm;
    if (lhs <= psi_k + xi.value() + slack) {
      out.lipschitz = coordinate_lipschitz(problem, snapshot, j);
      out.shrinks = shrinks;
      return out;
    }
    gamma *= ls.shrink;
  }
  throw StagnationError("line search failed after " +
                        std::to_string(kMaxShrinks) +
                        " shrinks at iteration " + std::to_string(k) +
                        "; check M and C");
}

}  // namespace apalm
