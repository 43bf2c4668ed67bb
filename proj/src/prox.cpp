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

#include "apalm/prox.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "apalm/error.hpp"

namespace apalm {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double squared_norm(std::span<const double> y) {
  double s = 0.0;
  for (double v : y) s += v * v;
  return s;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("invalid regularizer parameter: " + what);
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<double> parse_args(std::string_view args, std::string_view text) {
  std::vector<double> out;
  std::string rest(args);
  std::stringstream ss(rest);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || tok.empty()) {
      throw ConfigError("bad number '" + tok + "' in regularizer '" +
                        std::string(text) + "'");
    }
    out.push_back(v);
  }
  return out;
}

std::string fmt_num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

Regularizer Regularizer::zero() { return Regularizer(); }

Regularizer Regularizer::l1(double weight) {
  require(weight >= 0.0 && std::isfinite(weight), "l1 weight must be >= 0");
  Regularizer r;
  r.kind_ = RegularizerKind::kL1;
  r.weight_ = weight;
  return r;
}

Regularizer Regularizer::l0(double weight) {
  require(weight >= 0.0 && std::isfinite(weight), "l0 weight must be >= 0");
  Regularizer r;
  r.kind_ = RegularizerKind::kL0;
  r.weight_ = weight;
  return r;
}

Regularizer Regularizer::indicator_nonneg() {
  Regularizer r;
  r.kind_ = RegularizerKind::kIndicatorNonneg;
  return r;
}

Regularizer Regularizer::indicator_box(double lo, double hi) {
  require(lo <= hi, "box requires lo <= hi");
  Regularizer r;
  r.kind_ = RegularizerKind::kIndicatorBox;
  r.lo_ = lo;
  r.hi_ = hi;
  return r;
}

Regularizer Regularizer::indicator_ball(double radius) {
  require(radius > 0.0 && std::isfinite(radius), "ball radius must be > 0");
  Regularizer r;
  r.kind_ = RegularizerKind::kIndicatorBall;
  r.radius_ = radius;
  return r;
}

Regularizer Regularizer::neg_quadratic(double alpha) {
  require(alpha > 0.0 && std::isfinite(alpha), "neg_quadratic alpha must be > 0");
  Regularizer r;
  r.kind_ = RegularizerKind::kNegQuadratic;
  r.alpha_ = alpha;
  return r;
}

Regularizer Regularizer::squared_l2(double weight) {
  require(weight >= 0.0 && std::isfinite(weight),
          "squared_l2 weight must be >= 0");
  Regularizer r;
  r.kind_ = RegularizerKind::kSquaredL2;
  r.weight_ = weight;
  return r;
}

Regularizer Regularizer::parse(std::string_view text) {
  std::string s = trim(text);
  std::string name = s;
  std::vector<double> args;
  if (auto open = s.find('('); open != std::string::npos) {
    if (s.back() != ')') throw ConfigError("missing ')' in '" + s + "'");
    name = trim(std::string_view(s).substr(0, open));
    args = parse_args(std::string_view(s).substr(open + 1, s.size() - open - 2),
                      s);
  }
  auto expect = [&](std::size_t n) {
    if (args.size() != n) {
      throw ConfigError("regularizer '" + name + "' takes " +
                        std::to_string(n) + " argument(s)");
    }
  };
  if (name == "zero") { expect(0); return zero(); }
  if (name == "l1") { expect(1); return l1(args[0]); }
  if (name == "l0") { expect(1); return l0(args[0]); }
  if (name == "indicator_nonneg") { expect(0); return indicator_nonneg(); }
  if (name == "indicator_box") { expect(2); return indicator_box(args[0], args[1]); }
  if (name == "indicator_ball") { expect(1); return indicator_ball(args[0]); }
  if (name == "neg_quadratic") { expect(1); return neg_quadratic(args[0]); }
  if (name == "squared_l2") { expect(1); return squared_l2(args[0]); }
  throw ConfigError("unknown regularizer '" + name + "'");
}

std::string Regularizer::to_string() const {
  switch (kind_) {
    case RegularizerKind::kZero: return "zero";
    case RegularizerKind::kL1: return "l1(" + fmt_num(weight_) + ")";
    case RegularizerKind::kL0: return "l0(" + fmt_num(weight_) + ")";
    case RegularizerKind::kIndicatorNonneg: return "indicator_nonneg";
    case RegularizerKind::kIndicatorBox:
      return "indicator_box(" + fmt_num(lo_) + "," + fmt_num(hi_) + ")";
    case RegularizerKind::kIndicatorBall:
      return "indicator_ball(" + fmt_num(radius_) + ")";
    case RegularizerKind::kNegQuadratic:
      return "neg_quadratic(" + fmt_num(alpha_) + ")";
    case RegularizerKind::kSquaredL2:
      return "squared_l2(" + fmt_num(weight_) + ")";
  }
  return "zero";
}

bool Regularizer::coercive() const noexcept {
  switch (kind_) {
    case RegularizerKind::kL1:
    case RegularizerKind::kSquaredL2:
      return weight_ > 0.0;
    case RegularizerKind::kIndicatorBox:
    case RegularizerKind::kIndicatorBall:
      return true;
    default:
      return false;
  }
}

double Regularizer::value(std::span<const double> y) const {
  switch (kind_) {
    case RegularizerKind::kZero:
      return 0.0;
    case RegularizerKind::kL1: {
      double s = 0.0;
      for (double v : y) s += std::abs(v);
      return weight_ * s;
    }
    case RegularizerKind::kL0: {
      double nnz = 0.0;
      for (double v : y) nnz += (v != 0.0) ? 1.0 : 0.0;
      return weight_ * nnz;
    }
    case RegularizerKind::kIndicatorNonneg:
      for (double v : y) {
        if (v < 0.0) return kInf;
      }
      return 0.0;
    case RegularizerKind::kIndicatorBox:
      for (double v : y) {
        if (v < lo_ || v > hi_) return kInf;
      }
      return 0.0;
    case RegularizerKind::kIndicatorBall:
      // Radial projection can land a hair outside in floating point.
      return std::sqrt(squared_norm(y)) <= radius_ * (1.0 + 1e-12) ? 0.0 : kInf;
    case RegularizerKind::kNegQuadratic:
      return -alpha_ * squared_norm(y);
    case RegularizerKind::kSquaredL2:
      return weight_ * squared_norm(y);
  }
  return 0.0;
}

double prox_bound(const Regularizer& reg) {
  if (reg.kind() == RegularizerKind::kNegQuadratic) {
    return 1.0 / (2.0 * reg.alpha());
  }
  return kInf;
}

ProxResult prox(const Regularizer& reg, std::span<const double> v,
                double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw StepsizeDomainError("prox stepsize must be positive and finite");
  }
  const double bound = prox_bound(reg);
  if (std::isfinite(bound) && !(gamma < bound)) {
    throw StepsizeDomainError("prox stepsize " + fmt_num(gamma) +
                              " not below lambda_r = " + fmt_num(bound));
  }

  ProxResult out;
  out.point.assign(v.begin(), v.end());
  auto& p = out.point;
  switch (reg.kind()) {
    case RegularizerKind::kZero:
      break;
    case RegularizerKind::kL1: {
      const double t = gamma * reg.weight();
      for (double& x : p) {
        const double a = std::abs(x) - t;
        x = a > 0.0 ? std::copysign(a, x) : 0.0;
      }
      break;
    }
    case RegularizerKind::kL0: {
      // Keeping x costs w, zeroing costs x^2 / (2 gamma); ties go to zero.
      const double thresh_sq = 2.0 * gamma * reg.weight();
      for (double& x : p) {
        if (!(x * x > thresh_sq)) x = 0.0;
      }
      break;
    }
    case RegularizerKind::kIndicatorNonneg:
      for (double& x : p) x = std::max(x, 0.0);
      break;
    case RegularizerKind::kIndicatorBox:
      for (double& x : p) x = std::clamp(x, reg.lo(), reg.hi());
      break;
    case RegularizerKind::kIndicatorBall: {
      const double n = std::sqrt(squared_norm(p));
      if (n > reg.radius()) {
        const double s = reg.radius() / n;
        for (double& x : p) x *= s;
      }
      break;
    }
    case RegularizerKind::kNegQuadratic: {
      const double s = 1.0 / (1.0 - 2.0 * reg.alpha() * gamma);
      for (double& x : p) x *= s;
      break;
    }
    case RegularizerKind::kSquaredL2: {
      const double s = 1.0 / (1.0 + 2.0 * reg.weight() * gamma);
      for (double& x : p) x *= s;
      break;
    }
  }
  out.value = reg.value(p);
  return out;
}

}  // namespace apalm
