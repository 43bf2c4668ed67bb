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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "apalm/core.hpp"
#include "apalm/error.hpp"
#include "apalm/glrm.hpp"
#include "apalm/random.hpp"
#include "fixtures.hpp"

namespace apalm {
namespace {

using testing::scalars;
using testing::shifted_square;

Problem half_square() { return testing::quadratic_problem({{1.0}}, {0.0}, {Regularizer::zero()}); }

// One row factor x and two column factors y1, y2 with a 1x2 data matrix.
Problem tiny_glrm(double a1, double a2) {
  GlrmSpec spec;
  spec.d1 = 1;
  spec.d2 = 2;
  spec.rank = 2;
  return build_glrm(spec, DataMatrix::dense(1, 2, {a1, a2}));
}

TEST(Core, PsiExamples) {
  EXPECT_EQ(psi_value(half_square(), scalars({0.0})), 0.0);

  GlrmSpec spec;
  spec.d1 = 1;
  spec.d2 = 1;
  spec.rank = 1;
  const Problem g = build_glrm(spec, DataMatrix::dense(1, 1, {2.0}));
  EXPECT_DOUBLE_EQ(psi_value(g, scalars({1.0, 1.0})), 0.5);

  const Problem orth = shifted_square(0.0, Regularizer::indicator_nonneg());
  EXPECT_EQ(psi_value(orth, scalars({-1.0})), std::numeric_limits<double>::infinity());
}

TEST(Core, PsiShapeMismatch) {
  EXPECT_THROW(psi_value(half_square(), scalars({0.0, 1.0})), ContractViolation);
  EXPECT_THROW(partial_gradient(half_square(), scalars({0.0}), 1), ContractViolation);
}

TEST(Core, GradientExamples) {
  EXPECT_DOUBLE_EQ(partial_gradient(shifted_square(4.0), scalars({0.0}), 0)[0], -4.0);
  GlrmSpec spec;
  spec.d1 = 1;
  spec.d2 = 1;
  spec.rank = 1;
  const Problem g = build_glrm(spec, DataMatrix::dense(1, 1, {2.0}));
  EXPECT_DOUBLE_EQ(partial_gradient(g, scalars({1.0, 1.0}), 0)[0], -1.0);
}

TEST(Core, LipschitzExamples) {
  EXPECT_DOUBLE_EQ(coordinate_lipschitz(shifted_square(4.0), scalars({0.0}), 0), 1.0);

  const Problem g = tiny_glrm(0.3, -0.7);
  const BlockVector x({{0.2, -0.1}, {1.0, 0.0}, {0.0, 2.0}});
  EXPECT_DOUBLE_EQ(coordinate_lipschitz(g, x, 0), 5.0);

  const Problem zero = testing::quadratic_problem({{0.0}}, {0.0}, {Regularizer::zero()});
  EXPECT_EQ(coordinate_lipschitz(zero, scalars({3.0}), 0), kLipschitzFloor);
}

// The reported constant dominates observed difference ratios of the block gradient.
TEST(Core, LipschitzDominatesSampledRatios) {
  const Problem g = tiny_glrm(0.3, -0.7);
  const BlockVector x({{0.2, -0.1}, {1.0, 0.0}, {0.0, 2.0}});
  const double L = coordinate_lipschitz(g, x, 0);
  Rng rng(5);
  double worst = 0.0;
  for (int s = 0; s < 2000; ++s) {
    BlockVector a = x;
    BlockVector b = x;
    for (double& v : a.block(0)) v = uniform(rng, -3, 3);
    for (double& v : b.block(0)) v = uniform(rng, -3, 3);
    const auto ga = partial_gradient(g, a, 0);
    const auto gb = partial_gradient(g, b, 0);
    const double num = std::hypot(ga[0] - gb[0], ga[1] - gb[1]);
    const double den = std::hypot(a.block(0)[0] - b.block(0)[0], a.block(0)[1] - b.block(0)[1]);
    worst = std::max(worst, num / den);
  }
  EXPECT_LE(worst, L + 1e-12);
  // Largest eigenvalue of y1 y1^T + y2 y2^T.
  EXPECT_NEAR(worst, 4.0, 0.05);
}

TEST(Core, GradientMatchesFiniteDifferences) {
  for (const auto& name : desk_problem_names()) {
    const DeskProblem d = desk_problem(name);
    const Problem p = build_glrm(d.spec, d.data);
    const BlockVector x = glrm_initial_point(d.spec, 9);
    for (std::size_t j = 0; j < p.num_blocks(); ++j) {
      const auto g = partial_gradient(p, x, j);
      for (std::size_t r = 0; r < g.size(); ++r) {
        const double h = 1e-6;
        BlockVector xp = x;
        BlockVector xm = x;
        xp.block(j)[r] += h;
        xm.block(j)[r] -= h;
        const double fd = (p.smooth().value(xp) - p.smooth().value(xm)) / (2 * h);
        EXPECT_NEAR(g[r], fd, 1e-5 * std::max(1.0, std::abs(fd))) << name << " block " << j;
      }
    }
  }
}

TEST(Core, BlockVectorBasics) {
  const BlockSpace space({2, 1});
  BlockVector v(space);
  EXPECT_TRUE(v.conforms(space));
  v.set_block(0, std::vector<double>{3.0, 4.0});
  EXPECT_DOUBLE_EQ(v.norm(), 5.0);
  EXPECT_THROW(v.set_block(1, std::vector<double>{1.0, 2.0}), ContractViolation);
  const auto flat = v.flatten();
  EXPECT_EQ(BlockVector::unflatten(space, flat), v);
  EXPECT_THROW(BlockSpace(std::vector<std::size_t>{}), ContractViolation);
  EXPECT_THROW(BlockSpace(std::vector<std::size_t>{1, 0}), ContractViolation);
}

TEST(Core, LambdaRIsSmallestBlockBound) {
  const Problem p = testing::quadratic_problem(
      {{1.0, 0.0}, {0.0, 1.0}}, {0.0, 0.0},
      {Regularizer::l1(1.0), Regularizer::neg_quadratic(0.25)});
  EXPECT_DOUBLE_EQ(p.lambda_r(), 2.0);
}

TEST(Core, AutoMDominatesTrueConstant) {
  // Strongly convex quadratic: global gradient Lipschitz constant is the top eigenvalue.
  const Problem p = testing::coupled_quadratic(std::nullopt);
  const BlockVector x0 = scalars({0.5, 0.5, 0.5});
  const double M = resolve_global_lipschitz(p, x0);
  // Eigenvalues of Q lie below 2.3 (Gershgorin bound 2.5).
  EXPECT_GE(M, 2.0);
  EXPECT_LE(M, 2.0 * 2.5 + 1e-9);
  EXPECT_EQ(M, resolve_global_lipschitz(p, x0));

  const Problem fixed = testing::coupled_quadratic(7.0);
  EXPECT_EQ(resolve_global_lipschitz(fixed, x0), 7.0);

  const Problem open = testing::quadratic_problem({{1.0}}, {0.0}, {Regularizer::zero()});
  EXPECT_THROW(resolve_global_lipschitz(open, scalars({0.0})), ContractViolation);
}

TEST(Core, AutoMOnDeskProblemsBoundsSampledRatios) {
  for (const auto& name : desk_problem_names()) {
    const DeskProblem d = desk_problem(name);
    const Problem p = build_glrm(d.spec, d.data);
    const BlockVector x0 = glrm_initial_point(d.spec, 1);
    const double M = resolve_global_lipschitz(p, x0);
    ASSERT_TRUE(std::isfinite(M));
    // Pairs drawn near x0 (inside the initial level set for these problems).
    Rng rng(77);
    const auto base = x0.flatten();
    for (int s = 0; s < 300; ++s) {
      auto a = base;
      auto b = base;
      for (double& v : a) v += uniform(rng, -0.05, 0.05);
      for (double& v : b) v += uniform(rng, -0.05, 0.05);
      const auto xa = BlockVector::unflatten(p.space(), a);
      const auto xb = BlockVector::unflatten(p.space(), b);
      const auto ga = full_gradient(p, xa).flatten();
      const auto gb = full_gradient(p, xb).flatten();
      double num = 0.0;
      double den = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        num += (ga[i] - gb[i]) * (ga[i] - gb[i]);
        den += (a[i] - b[i]) * (a[i] - b[i]);
      }
      EXPECT_LE(std::sqrt(num / den), M) << name;
    }
  }
}

}  // namespace
}  // namespace apalm
