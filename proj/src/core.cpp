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

#include "apalm/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "apalm/error.hpp"
#include "apalm/random.hpp"

namespace apalm {

BlockSpace::BlockSpace(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) throw ContractViolation("block space needs m >= 1 blocks");
  for (std::size_t d : dims_) {
    if (d == 0) throw ContractViolation("every block dimension must be >= 1");
    total_ += d;
  }
}

BlockVector::BlockVector(const BlockSpace& space) {
  blocks_.reserve(space.num_blocks());
  for (std::size_t d : space.dims()) blocks_.emplace_back(d, 0.0);
}

void BlockVector::set_block(std::size_t j, std::span<const double> value) {
  auto& b = blocks_.at(j);
  if (b.size() != value.size()) {
    throw ContractViolation("block " + std::to_string(j) + " has dimension " +
                            std::to_string(b.size()) + ", got " +
                            std::to_string(value.size()));
  }
  std::copy(value.begin(), value.end(), b.begin());
}

bool BlockVector::conforms(const BlockSpace& space) const noexcept {
  if (blocks_.size() != space.num_blocks()) return false;
  for (std::size_t j = 0; j < blocks_.size(); ++j) {
    if (blocks_[j].size() != space.dims()[j]) return false;
  }
  return true;
}

double BlockVector::squared_norm() const noexcept {
  double s = 0.0;
  for (const auto& b : blocks_) {
    for (double v : b) s += v * v;
  }
  return s;
}

double BlockVector::norm() const noexcept { return std::sqrt(squared_norm()); }

std::vector<double> BlockVector::flatten() const {
  std::vector<double> out;
  for (const auto& b : blocks_) out.insert(out.end(), b.begin(), b.end());
  return out;
}

BlockVector BlockVector::unflatten(const BlockSpace& space,
                                   std::span<const double> flat) {
  if (flat.size() != space.total_dim()) {
    throw ContractViolation("flat vector length does not match block space");
  }
  BlockVector x(space);
  std::size_t off = 0;
  for (std::size_t j = 0; j < space.num_blocks(); ++j) {
    x.set_block(j, flat.subspan(off, space.dim(j)));
    off += space.dim(j);
  }
  return x;
}

double distance(const BlockVector& a, const BlockVector& b) {
  if (a.num_blocks() != b.num_blocks()) {
    throw ContractViolation("distance between vectors of different shapes");
  }
  double s = 0.0;
  for (std::size_t j = 0; j < a.num_blocks(); ++j) {
    auto x = a.block(j);
    auto y = b.block(j);
    if (x.size() != y.size()) {
      throw ContractViolation("distance between vectors of different shapes");
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - y[i];
      s += d * d;
    }
  }
  return std::sqrt(s);
}

Problem::Problem(BlockSpace space, std::shared_ptr<const SmoothLoss> smooth,
                 std::vector<Regularizer> regs, std::optional<double> global_M,
                 bool coercive)
    : space_(std::move(space)),
      smooth_(std::move(smooth)),
      regs_(std::move(regs)),
      global_M_(global_M),
      coercive_(coercive) {
  if (!smooth_) throw ContractViolation("problem needs a smooth loss");
  if (regs_.size() != space_.num_blocks()) {
    throw ContractViolation("need one regularizer per block");
  }
  if (global_M_ && !(*global_M_ > 0.0 && std::isfinite(*global_M_))) {
    throw ContractViolation("global M must be positive and finite");
  }
}

double Problem::lambda_r() const noexcept {
  double lam = std::numeric_limits<double>::infinity();
  for (const auto& r : regs_) lam = std::min(lam, prox_bound(r));
  return lam;
}

namespace {

void check_conforms(const Problem& problem, const BlockVector& x) {
  if (!x.conforms(problem.space())) {
    throw ContractViolation("vector does not conform to the problem's block space");
  }
}

void check_block(const Problem& problem, std::size_t j) {
  if (j >= problem.num_blocks()) {
    throw ContractViolation("block index " + std::to_string(j) +
                            " out of range");
  }
}

}  // namespace

double psi_value(const Problem& problem, const BlockVector& x) {
  check_conforms(problem, x);
  double r = 0.0;
  for (std::size_t j = 0; j < problem.num_blocks(); ++j) {
    r += problem.reg(j).value(x.block(j));
    if (r == std::numeric_limits<double>::infinity()) return r;
  }
  const double f = problem.smooth().value(x);
  if (!std::isfinite(f)) throw OracleError("smooth loss returned a non-finite value");
  const double psi = f + r;
  if (std::isnan(psi) || psi < problem.lower_bound()) {
    throw OracleError("objective value below the configured lower bound");
  }
  return psi;
}

std::vector<double> partial_gradient(const Problem& problem,
                                     const BlockVector& x, std::size_t j) {
  check_conforms(problem, x);
  check_block(problem, j);
  std::vector<double> g(problem.space().dim(j), 0.0);
  problem.smooth().partial_gradient(x, j, g);
  for (double v : g) {
    if (!std::isfinite(v)) {
      throw OracleError("partial gradient of block " + std::to_string(j) +
                        " has non-finite entries");
    }
  }
  return g;
}

BlockVector full_gradient(const Problem& problem, const BlockVector& x) {
  BlockVector g(problem.space());
  for (std::size_t j = 0; j < problem.num_blocks(); ++j) {
    g.set_block(j, partial_gradient(problem, x, j));
  }
  return g;
}

double coordinate_lipschitz(const Problem& problem, const BlockVector& x,
                            std::size_t j) {
  check_conforms(problem, x);
  check_block(problem, j);
  const double L = problem.smooth().block_lipschitz(x, j);
  if (std::isnan(L)) throw OracleError("Lipschitz oracle returned NaN");
  return std::max(L, kLipschitzFloor);
}

namespace {

class LevelSetSampler {
 public:
  LevelSetSampler(const Problem& problem, const BlockVector& x0)
      : problem_(problem), level_(psi_value(problem, x0)) {
    double scale = 0.0;
    for (double v : x0.flatten()) scale = std::max(scale, std::abs(v));
    step0_ = 1e-3 * (1.0 + scale);
  }

  bool inside(std::span<const double> p) const {
    const double v =
        psi_value(problem_, BlockVector::unflatten(problem_.space(), p));
    return v <= level_;
  }

  // Largest t >= 0 found with p + t u inside the level set.
  double extent(const std::vector<double>& p, const std::vector<double>& u) {
    std::vector<double> q(p.size());
    auto probe = [&](double t) {
      for (std::size_t i = 0; i < p.size(); ++i) q[i] = p[i] + t * u[i];
      return inside(q);
    };
    double good = 0.0;
    double bad = step0_;
    int doublings = 0;
    while (probe(bad)) {
      good = bad;
      bad *= 2.0;
      if (++doublings > 80) return good;  // treat as unbounded; keep what we have
    }
    for (int it = 0; it < 40; ++it) {
      const double mid = 0.5 * (good + bad);
      if (probe(mid)) {
        good = mid;
      } else {
        bad = mid;
      }
    }
    return good;
  }

 private:
  const Problem& problem_;
  double level_;
  double step0_;
};

std::vector<double> random_unit(Rng& rng, std::size_t n) {
  std::vector<double> u(n);
  double s = 0.0;
  for (double& v : u) {
    v = standard_normal(rng);
    s += v * v;
  }
  s = std::sqrt(s);
  for (double& v : u) v /= s;
  return u;
}

double gradient_ratio(const Problem& problem, std::span<const double> a,
                      std::span<const double> b,
                      std::vector<double>* diff_out = nullptr) {
  const auto& space = problem.space();
  const auto ga = full_gradient(problem, BlockVector::unflatten(space, a)).flatten();
  const auto gb = full_gradient(problem, BlockVector::unflatten(space, b)).flatten();
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (ga[i] - gb[i]) * (ga[i] - gb[i]);
    den += (a[i] - b[i]) * (a[i] - b[i]);
  }
  if (diff_out) {
    diff_out->resize(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) (*diff_out)[i] = ga[i] - gb[i];
  }
  return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

}  // namespace

double estimate_global_lipschitz(const Problem& problem, const BlockVector& x0,
                                 const LipschitzEstimateOptions& opts) {
  if (!problem.coercive()) {
    throw ContractViolation(
        "automatic M needs a coercive problem; set M explicitly");
  }
  Rng rng(opts.seed);
  LevelSetSampler sampler(problem, x0);
  const std::size_t n = problem.space().total_dim();

  std::vector<double> p = x0.flatten();
  std::vector<double> lo = p;
  std::vector<double> hi = p;
  auto record = [&](const std::vector<double>& q) {
    for (std::size_t i = 0; i < n; ++i) {
      lo[i] = std::min(lo[i], q[i]);
      hi[i] = std::max(hi[i], q[i]);
    }
  };
  std::vector<double> q(n);
  for (std::size_t step = 0; step < opts.walk_steps; ++step) {
    const auto u = random_unit(rng, n);
    const double fwd = sampler.extent(p, u);
    std::vector<double> neg(u);
    for (double& v : neg) v = -v;
    const double back = sampler.extent(p, neg);
    for (std::size_t i = 0; i < n; ++i) q[i] = p[i] + fwd * u[i];
    record(q);
    for (std::size_t i = 0; i < n; ++i) q[i] = p[i] - back * u[i];
    record(q);
    const double t = uniform(rng, -back, fwd);
    for (std::size_t i = 0; i < n; ++i) p[i] += t * u[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double pad = 0.5 * opts.inflate * (hi[i] - lo[i]) + 1e-9;
    lo[i] -= pad;
    hi[i] += pad;
  }

  double mean_width = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean_width += (hi[i] - lo[i]) / n;
  auto sample_box = [&](std::vector<double>& out) {
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = uniform(rng, lo[i], hi[i]);
  };

  double best = 0.0;
  const std::size_t power_pairs = opts.pairs * 3 / 10;
  const std::size_t uniform_pairs = opts.pairs - power_pairs;
  std::vector<double> a;
  std::vector<double> b;
  for (std::size_t s = 0; s < uniform_pairs; ++s) {
    sample_box(a);
    sample_box(b);
    best = std::max(best, gradient_ratio(problem, a, b));
  }
  constexpr std::size_t kPowerIters = 10;
  const double h = 1e-4 * std::max(mean_width, 1e-6);
  std::vector<double> diff;
  for (std::size_t s = 0; s < power_pairs; s += kPowerIters) {
    sample_box(a);
    auto v = random_unit(rng, n);
    for (std::size_t it = 0; it < kPowerIters; ++it) {
      b = a;
      for (std::size_t i = 0; i < n; ++i) b[i] += h * v[i];
      best = std::max(best, gradient_ratio(problem, b, a, &diff));
      double norm = 0.0;
      for (double d : diff) norm += d * d;
      norm = std::sqrt(norm);
      if (norm == 0.0) break;
      for (std::size_t i = 0; i < n; ++i) v[i] = diff[i] / norm;
    }
  }
  return std::max(opts.safety * best, kLipschitzFloor);
}

double resolve_global_lipschitz(const Problem& problem, const BlockVector& x0,
                                const LipschitzEstimateOptions& opts) {
  if (problem.global_M()) return *problem.global_M();
  return estimate_global_lipschitz(problem, x0, opts);
}

}  // namespace apalm
