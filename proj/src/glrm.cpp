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

#include "apalm/glrm.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "apalm/error.hpp"
#include "apalm/random.hpp"

namespace apalm {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

class GlrmLoss final : public SmoothLoss {
 public:
  GlrmLoss(GlrmSpec spec, DataMatrix data)
      : spec_(std::move(spec)), data_(std::move(data)) {}

  double value(const BlockVector& x) const override {
    double v = 0.0;
    for (std::size_t i = 0; i < spec_.d1; ++i) {
      for (std::size_t l = 0; l < spec_.d2; ++l) {
        if (!data_.is_observed(i, l)) continue;
        v += spec_.loss.value(dot(x.block(i), x.block(spec_.d1 + l)),
                              data_.at(i, l));
      }
    }
    if (spec_.quad_reg > 0.0) v += spec_.quad_reg * x.squared_norm();
    return v;
  }

  void partial_gradient(const BlockVector& x, std::size_t j,
                        std::span<double> out) const override {
    std::fill(out.begin(), out.end(), 0.0);
    const auto xj = x.block(j);
    if (j < spec_.d1) {
      for (std::size_t l = 0; l < spec_.d2; ++l) {
        if (!data_.is_observed(j, l)) continue;
        const auto y = x.block(spec_.d1 + l);
        const double g = spec_.loss.derivative(dot(xj, y), data_.at(j, l));
        for (std::size_t r = 0; r < out.size(); ++r) out[r] += g * y[r];
      }
    } else {
      const std::size_t l = j - spec_.d1;
      for (std::size_t i = 0; i < spec_.d1; ++i) {
        if (!data_.is_observed(i, l)) continue;
        const auto u = x.block(i);
        const double g = spec_.loss.derivative(dot(u, xj), data_.at(i, l));
        for (std::size_t r = 0; r < out.size(); ++r) out[r] += g * u[r];
      }
    }
    for (std::size_t r = 0; r < out.size(); ++r) out[r] += 2.0 * spec_.quad_reg * xj[r];
  }

  // sum over observed partners of ||partner||^2 L_il, plus 2 mu.
  double block_lipschitz(const BlockVector& x, std::size_t j) const override {
    double L = 2.0 * spec_.quad_reg;
    if (j < spec_.d1) {
      for (std::size_t l = 0; l < spec_.d2; ++l) {
        if (!data_.is_observed(j, l)) continue;
        const auto y = x.block(spec_.d1 + l);
        L += dot(y, y) * spec_.loss.lipschitz(data_.at(j, l));
      }
    } else {
      const std::size_t l = j - spec_.d1;
      for (std::size_t i = 0; i < spec_.d1; ++i) {
        if (!data_.is_observed(i, l)) continue;
        const auto u = x.block(i);
        L += dot(u, u) * spec_.loss.lipschitz(data_.at(i, l));
      }
    }
    return L;
  }

 private:
  GlrmSpec spec_;
  DataMatrix data_;
};

}  // namespace

EntryLoss EntryLoss::huber(double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw ConfigError("huber delta must be positive");
  }
  return EntryLoss(LossKind::kHuber, delta);
}

EntryLoss EntryLoss::parse(std::string_view text) {
  text = trim(text);
  if (text == "quadratic") return quadratic();
  if (text == "logistic") return logistic();
  if (text.starts_with("huber(") && text.ends_with(")")) {
    const auto arg = trim(text.substr(6, text.size() - 7));
    double delta = 0.0;
    const auto [p, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), delta);
    if (ec != std::errc() || p != arg.data() + arg.size()) {
      throw ConfigError("bad huber parameter: " + std::string(arg));
    }
    return huber(delta);
  }
  throw ConfigError("unknown loss: " + std::string(text));
}

double EntryLoss::value(double a, double target) const {
  switch (kind_) {
    case LossKind::kQuadratic:
      return 0.5 * (a - target) * (a - target);
    case LossKind::kHuber: {
      const double r = std::abs(a - target);
      return r <= delta_ ? 0.5 * r * r : delta_ * (r - 0.5 * delta_);
    }
    case LossKind::kLogistic: {
      // log(1 + exp(-t a)) without overflow.
      const double z = -target * a;
      return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    }
  }
  return 0.0;
}

double EntryLoss::derivative(double a, double target) const {
  switch (kind_) {
    case LossKind::kQuadratic:
      return a - target;
    case LossKind::kHuber:
      return std::clamp(a - target, -delta_, delta_);
    case LossKind::kLogistic: {
      const double z = target * a;
      // -t * sigmoid(-z)
      const double s = z >= 0.0 ? std::exp(-z) / (1.0 + std::exp(-z))
                                : 1.0 / (1.0 + std::exp(z));
      return -target * s;
    }
  }
  return 0.0;
}

double EntryLoss::lipschitz(double target) const {
  switch (kind_) {
    case LossKind::kQuadratic:
    case LossKind::kHuber:
      return 1.0;
    case LossKind::kLogistic:
      return 0.25 * target * target;
  }
  return 1.0;
}

std::string EntryLoss::to_string() const {
  switch (kind_) {
    case LossKind::kQuadratic:
      return "quadratic";
    case LossKind::kHuber: {
      std::ostringstream os;
      os.precision(17);
      os << "huber(" << delta_ << ")";
      return os.str();
    }
    case LossKind::kLogistic:
      return "logistic";
  }
  return "quadratic";
}

DataMatrix DataMatrix::dense(std::size_t rows, std::size_t cols,
                             std::vector<double> values) {
  if (values.size() != rows * cols) {
    throw ContractViolation("matrix values do not match its shape");
  }
  DataMatrix d;
  d.rows = rows;
  d.cols = cols;
  d.values = std::move(values);
  d.observed.assign(rows * cols, 1);
  return d;
}

std::size_t DataMatrix::observed_count() const {
  return static_cast<std::size_t>(std::count(observed.begin(), observed.end(), 1));
}

DataMatrix parse_matrix(std::istream& is) {
  DataMatrix d;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    std::size_t field = 0;
    std::size_t start = 0;
    std::size_t count = 0;
    for (;;) {
      const std::size_t comma = view.find(',', start);
      const auto tok = trim(view.substr(start, comma == std::string_view::npos
                                                   ? std::string_view::npos
                                                   : comma - start));
      ++field;
      if (tok == "?") {
        d.values.push_back(0.0);
        d.observed.push_back(0);
      } else {
        double v = 0.0;
        const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (tok.empty() || ec != std::errc() || p != tok.data() + tok.size() ||
            !std::isfinite(v)) {
          throw ParseError("not a number: '" + std::string(tok) + "'", lineno, field);
        }
        d.values.push_back(v);
        d.observed.push_back(1);
      }
      ++count;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (d.rows == 0) {
      d.cols = count;
    } else if (count != d.cols) {
      throw ParseError("expected " + std::to_string(d.cols) + " fields, found " +
                           std::to_string(count),
                       lineno, std::min(count, d.cols) + 1);
    }
    ++d.rows;
  }
  if (d.rows == 0) throw ParseError("empty matrix", lineno + 1, 1);
  return d;
}

DataMatrix load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFileError(path.string());
  return parse_matrix(in);
}

void write_matrix(std::ostream& os, const DataMatrix& data) {
  char buf[64];
  for (std::size_t i = 0; i < data.rows; ++i) {
    for (std::size_t l = 0; l < data.cols; ++l) {
      if (l) os << ',';
      if (!data.is_observed(i, l)) {
        os << '?';
      } else {
        const auto res = std::to_chars(buf, buf + sizeof buf, data.at(i, l));
        os << std::string_view(buf, res.ptr - buf);
      }
    }
    os << '\n';
  }
}

Problem build_glrm(const GlrmSpec& spec, const DataMatrix& data) {
  if (spec.d1 == 0 || spec.d2 == 0 || spec.rank == 0) {
    throw ContractViolation("GLRM dimensions must be positive");
  }
  if (data.rows != spec.d1 || data.cols != spec.d2) {
    throw ContractViolation("data is " + std::to_string(data.rows) + "x" +
                            std::to_string(data.cols) + " but the model is " +
                            std::to_string(spec.d1) + "x" +
                            std::to_string(spec.d2));
  }
  if (!(spec.quad_reg >= 0.0)) throw ConfigError("quad_reg must be >= 0");
  std::vector<Regularizer> regs;
  regs.reserve(spec.d1 + spec.d2);
  for (std::size_t i = 0; i < spec.d1; ++i) regs.push_back(spec.row_reg);
  for (std::size_t l = 0; l < spec.d2; ++l) regs.push_back(spec.col_reg);
  const bool coercive =
      spec.quad_reg > 0.0 || (spec.row_reg.coercive() && spec.col_reg.coercive());
  Problem p(BlockSpace(std::vector<std::size_t>(spec.d1 + spec.d2, spec.rank)),
            std::make_shared<GlrmLoss>(spec, data), std::move(regs),
            spec.global_M, coercive);
  bool nonneg_regs = true;
  for (const auto& r : p.regs()) {
    nonneg_regs = nonneg_regs && r.kind() != RegularizerKind::kNegQuadratic;
  }
  if (nonneg_regs) p.set_lower_bound(0.0);
  return p;
}

BlockVector glrm_initial_point(const GlrmSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  const double hi = 1.0 / std::sqrt(static_cast<double>(spec.rank));
  std::vector<std::vector<double>> blocks(spec.d1 + spec.d2,
                                          std::vector<double>(spec.rank));
  for (auto& b : blocks) {
    for (double& v : b) v = uniform(rng, 0.0, hi);
  }
  return BlockVector(std::move(blocks));
}

std::vector<std::string> desk_problem_names() {
  return {"nmf_desk", "sparse_pca_desk", "quad_cluster_desk"};
}

DeskProblem desk_problem(std::string_view name) {
  DeskProblem p;
  p.name = std::string(name);
  if (name == "nmf_desk") {
    p.data = DataMatrix::dense(6, 4, {0.02817, 0.01491, 0.00219, 0.05778,  //
                                      0.01632, 0.03744, 0.04209, 0.04401,  //
                                      0.05718, 0.04695, 0.02229, 0.12816,  //
                                      -0.0003, 0.0405, 0.06834, 0.02433,   //
                                      0.03033, 0.04731, 0.04443, 0.07707,  //
                                      0.01152, 0.01149, 0.00816, 0.02094});
    p.spec.rank = 2;
    p.spec.row_reg = Regularizer::indicator_nonneg();
    p.spec.col_reg = Regularizer::indicator_nonneg();
    p.spec.quad_reg = 1e-3;
  } else if (name == "sparse_pca_desk") {
    p.data = DataMatrix::dense(
        8, 8,
        {1.2001,  0.9711,  1.0115,  -0.0012, 0.0147,  -0.0097, -0.0122, -0.0017,
         0.9711,  1.1955,  0.9896,  0.0066,  0.0028,  -0.0085, -0.0011, -0.0205,
         1.0115,  0.9896,  1.1729,  -0.012,  0.0071,  -0.0124, 0.0168,  -0.0063,
         -0.0012, 0.0066,  -0.012,  0.2294,  -0.0023, -0.0326, 0.0248,  0.0107,
         0.0147,  0.0028,  0.0071,  -0.0023, 0.6871,  0.4845,  0.5004,  -0.0134,
         -0.0097, -0.0085, -0.0124, -0.0326, 0.4845,  0.6917,  0.4994,  -0.0221,
         -0.0122, -0.0011, 0.0168,  0.0248,  0.5004,  0.4994,  0.6645,  0.0173,
         -0.0017, -0.0205, -0.0063, 0.0107,  -0.0134, -0.0221, 0.0173,  0.1747});
    p.spec.rank = 2;
    p.spec.row_reg = Regularizer::zero();
    p.spec.col_reg = Regularizer::l0(0.01);
    p.spec.quad_reg = 1e-3;
  } else if (name == "quad_cluster_desk") {
    p.data = DataMatrix::dense(10, 3, {-0.383, 0.045,  -0.244,  //
                                       -0.223, 0.34,   -0.635,  //
                                       0.105,  0.181,  0.769,   //
                                       2.992,  0.174,  1.177,   //
                                       3.168,  -0.203, 1.042,   //
                                       2.709,  -0.218, 0.689,   //
                                       0.067,  3.088,  2.296,   //
                                       -0.411, 2.695,  1.496,   //
                                       0.298,  2.711,  2.391,   //
                                       2.678,  0.13,   0.425});
    p.spec.rank = 3;
    p.spec.row_reg = Regularizer::indicator_box(0.0, 1.0);
    p.spec.col_reg = Regularizer::squared_l2(1e-3);
    p.spec.quad_reg = 0.0;
  } else {
    throw ConfigError("unknown synthetic problem: " + std::string(name));
  }
  p.spec.d1 = p.data.rows;
  p.spec.d2 = p.data.cols;
  return p;
}

}  // namespace apalm
