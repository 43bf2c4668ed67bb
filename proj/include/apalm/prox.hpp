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

#ifndef APALM_PROX_HPP_
#define APALM_PROX_HPP_

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace apalm {

enum class RegularizerKind {
  kZero,
  kL1,
  kL0,
  kIndicatorNonneg,
  kIndicatorBox,
  kIndicatorBall,
  kNegQuadratic,
  kSquaredL2,
};

/// A proper, lower semicontinuous block regularizer r_j with a closed-form
/// proximal map. Parameters are validated at construction.
class Regularizer {
 public:
  Regularizer() = default;

  static Regularizer zero();
  static Regularizer l1(double weight);
  static Regularizer l0(double weight);
  static Regularizer indicator_nonneg();
  /// Box [lo, hi] applied to every coordinate.
  static Regularizer indicator_box(double lo, double hi);
  static Regularizer indicator_ball(double radius);
  /// r(y) = -alpha ||y||^2.
  static Regularizer neg_quadratic(double alpha);
  /// r(y) = weight ||y||^2.
  static Regularizer squared_l2(double weight);

  /// Parses the config spelling, e.g. "l1(0.5)", "indicator_box(0,1)",
  /// "indicator_nonneg". Throws ConfigError on malformed input.
  static Regularizer parse(std::string_view text);

  RegularizerKind kind() const noexcept { return kind_; }
  double weight() const noexcept { return weight_; }
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  double radius() const noexcept { return radius_; }
  double alpha() const noexcept { return alpha_; }

  /// r(y); +infinity outside the domain of an indicator.
  double value(std::span<const double> y) const;

  /// Round-trips through parse().
  std::string to_string() const;

  /// True when r(y) -> infinity as ||y|| -> infinity.
  bool coercive() const noexcept;

 private:
  RegularizerKind kind_ = RegularizerKind::kZero;
  double weight_ = 0.0;
  double lo_ = 0.0;
  double hi_ = 0.0;
  double radius_ = 0.0;
  double alpha_ = 0.0;
};

struct ProxResult {
  std::vector<double> point;
  double value = 0.0;  // r(point)
};

/// One minimizer of r(y) + ||y - v||^2 / (2 gamma).
///
/// Where the argmin is a set (only l0 at |v_i| = sqrt(2 gamma w) here) the
/// candidate with the smallest norm is returned, so equal inputs always give
/// bitwise-equal outputs. Throws StepsizeDomainError when gamma is not
/// strictly below a finite prox_bound(reg), or gamma <= 0.
ProxResult prox(const Regularizer& reg, std::span<const double> v,
                double gamma);

/// lambda_r: the prox is nonempty for all gamma below this value. +infinity
/// for every kind bounded below.
double prox_bound(const Regularizer& reg);

}  // namespace apalm

#endif  // APALM_PROX_HPP_
