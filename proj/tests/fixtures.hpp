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

// Small problems shared by the test binaries.

#ifndef APALM_TESTS_FIXTURES_HPP_
#define APALM_TESTS_FIXTURES_HPP_

#include <cstddef>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "apalm/core.hpp"
#include "apalm/glrm.hpp"
#include "apalm/prox.hpp"

namespace apalm::testing {

// f(x) = 1/2 x^T Q x - b^T x over scalar blocks.
inline Problem quadratic_problem(std::vector<std::vector<double>> Q,
                                 std::vector<double> b,
                                 std::vector<Regularizer> regs,
                                 std::optional<double> M = std::nullopt,
                                 bool coercive = false) {
  const std::size_t n = b.size();
  auto q = std::make_shared<std::vector<std::vector<double>>>(std::move(Q));
  auto rhs = std::make_shared<std::vector<double>>(std::move(b));
  auto value = [q, rhs, n](const BlockVector& x) {
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double xi = x.block(i)[0];
      v -= (*rhs)[i] * xi;
      for (std::size_t l = 0; l < n; ++l) v += 0.5 * xi * (*q)[i][l] * x.block(l)[0];
    }
    return v;
  };
  auto grad = [q, rhs, n](const BlockVector& x, std::size_t j, std::span<double> out) {
    double g = -(*rhs)[j];
    for (std::size_t l = 0; l < n; ++l) g += (*q)[j][l] * x.block(l)[0];
    out[0] = g;
  };
  auto lip = [q](const BlockVector&, std::size_t j) { return (*q)[j][j]; };
  return Problem(BlockSpace(std::vector<std::size_t>(n, 1)),
                 std::make_shared<FunctionLoss>(value, grad, lip), std::move(regs),
                 M, coercive);
}

// f(x) = 1/2 (x - target)^2 on a single scalar block.
inline Problem shifted_square(double target, Regularizer reg = Regularizer::zero(),
                              std::optional<double> M = std::nullopt) {
  return quadratic_problem({{1.0}}, {target}, {reg}, M);
}

inline BlockVector scalars(std::vector<double> v) {
  std::vector<std::vector<double>> blocks;
  for (double x : v) blocks.push_back({x});
  return BlockVector(std::move(blocks));
}

// A coupled, strongly convex problem with a known smoothness bound.
inline Problem coupled_quadratic(std::optional<double> M = 3.0) {
  return quadratic_problem({{2.0, 0.5, 0.0}, {0.5, 1.5, 0.4}, {0.0, 0.4, 1.0}},
                           {1.0, -2.0, 0.5},
                           {Regularizer::zero(), Regularizer::indicator_nonneg(),
                            Regularizer::l1(0.1)},
                           M, true);
}

}  // namespace apalm::testing

#endif  // APALM_TESTS_FIXTURES_HPP_
