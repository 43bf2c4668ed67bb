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

#include "apalm/monitor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "apalm/error.hpp"

namespace apalm {
namespace {

constexpr std::size_t kMaxWarnings = 20;

double squared_diff(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double squared_diff(const BlockVector& a, const BlockVector& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.num_blocks(); ++j) {
    s += squared_diff(a.block(j), b.block(j));
  }
  return s;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

LineFit least_squares(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  f.r2 = (sxx > 0.0 && syy > 0.0) ? (sxy * sxy) / (sxx * syy) : 0.0;
  return f;
}

}  // namespace

double LyapunovParams::coefficient() const noexcept {
  if (tau == 0) return 0.0;
  if (variant == Variant::kStochastic) {
    return M / (2.0 * std::sqrt(static_cast<double>(m)));
  }
  return M * std::sqrt(static_cast<double>(rho_tau)) /
         (2.0 * std::sqrt(static_cast<double>(tau)));
}

double LyapunovParams::delay_penalty() const noexcept {
  if (variant == Variant::kStochastic) return 0.0;
  return M * std::sqrt(static_cast<double>(rho_tau) * static_cast<double>(tau));
}

double lyapunov_tail(std::span<const double> squared_steps,
                     const LyapunovParams& p) {
  const double coeff = p.coefficient();
  if (coeff == 0.0) return 0.0;
  double sum = 0.0;
  // Newest step gets weight tau, the one before tau - 1, ...
  const std::size_t n = std::min(squared_steps.size(), p.tau);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = squared_steps[squared_steps.size() - 1 - i];
    sum += static_cast<double>(p.tau - i) * s;
  }
  return coeff * sum;
}

double lyapunov(const Problem& problem, const IterateHistory& history,
                std::uint64_t k, const LyapunovParams& p) {
  const BlockVector xk = history.iterate(k);
  double phi = psi_value(problem, xk);
  const double coeff = p.coefficient();
  if (coeff == 0.0) return phi;
  double sum = 0.0;
  BlockVector newer = xk;
  for (std::size_t h = 1; h <= p.tau; ++h) {
    const auto stamp = static_cast<std::int64_t>(k) - static_cast<std::int64_t>(h);
    BlockVector older = stamp >= 0 ? history.iterate(static_cast<std::uint64_t>(stamp))
                                   : history.iterate(0);
    sum += static_cast<double>(p.tau - h + 1) * squared_diff(newer, older);
    newer = std::move(older);
  }
  return phi + coeff * sum;
}

Monitor::Monitor(const Problem& problem, const BlockVector& x0,
                 MonitorOptions opts)
    : problem_(problem),
      opts_(std::move(opts)),
      replica_(x0, opts_.lyapunov.tau + opts_.extra_depth + 2),
      meta_(problem.num_blocks()) {
  if (!x0.conforms(problem.space())) {
    throw ContractViolation("initial point does not match the block space");
  }
  if (opts_.residual_stride == 0) opts_.residual_stride = 1;
  opts_.lyapunov.m = problem.num_blocks();
  psi0_ = psi_value(problem, x0);
  if (!std::isfinite(psi0_)) {
    throw ContractViolation("initial point lies outside dom r");
  }
  tol_abs_ = 1e-9 * std::max(1.0, std::abs(psi0_));
  trace_.params = opts_.lyapunov;
  TraceRow row0;
  row0.psi = psi0_;
  row0.phi = psi0_;
  trace_.rows.push_back(row0);
}

bool Monitor::m_check(const BlockVector& xk, const BlockVector& snapshot,
                      const CommitRecord& rec) const {
  const double M = opts_.lyapunov.M;
  double lhs2 = 0.0;
  if (opts_.lyapunov.variant == Variant::kDeterministic) {
    const auto g = partial_gradient(problem_, xk, rec.outcome.j);
    lhs2 = squared_diff(g, rec.outcome.gradient);
  } else {
    lhs2 = squared_diff(full_gradient(problem_, xk),
                        full_gradient(problem_, snapshot));
  }
  const double rhs = M * std::sqrt(squared_diff(xk, snapshot));
  return std::sqrt(lhs2) <= rhs * (1.0 + 1e-9) + 1e-12;
}

ResidualCertificate Monitor::deterministic_certificate(
    const BlockVector& x_next, const StepOutcome& out) const {
  ResidualCertificate cert;
  const std::size_t m = problem_.num_blocks();
  double c2 = 0.0;
  double a2 = 0.0;
  const double pen = opts_.lyapunov.delay_penalty();
  for (std::size_t j = 0; j < m; ++j) {
    const auto xj = x_next.block(j);
    const auto g = partial_gradient(problem_, x_next, j);
    double cj2 = 0.0;
    double aj2 = 0.0;
    const BlockMeta& meta = meta_[j];
    if (meta.updated) {
      for (std::size_t i = 0; i < xj.size(); ++i) {
        const double cji =
            (meta.anchor[i] - xj[i]) / meta.gamma + g[i] - meta.gradient[i];
        double aji = cji;
        if (j == out.j) aji += pen * (xj[i] - out.anchor[i]);
        cj2 += cji * cji;
        aj2 += aji * aji;
      }
    } else {
      // Never updated: use the gradient mapping at the current point with the
      // undelayed stepsize.
      const double L = coordinate_lipschitz(problem_, x_next, j);
      const double gamma = stepsize_deterministic(L, opts_.lyapunov.M, 0, 0,
                                                  opts_.c,
                                                  prox_bound(problem_.reg(j)));
      std::vector<double> v(xj.size());
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = xj[i] - gamma * g[i];
      const auto p = prox(problem_.reg(j), v, gamma);
      cj2 = squared_diff(xj, p.point) / (gamma * gamma);
      aj2 = cj2;
    }
    c2 += cj2;
    a2 += aj2;
  }
  cert.c_norm = std::sqrt(c2);
  cert.a_norm = std::sqrt(a2);

  const auto& lp = opts_.lyapunov;
  if (lp.tau <= 1) {
    cert.b_norm = 0.0;
  } else {
    // B weights (tau - i) on step k - i, i = 1..tau-1; recent_ ends at step k.
    double b2 = 0.0;
    for (std::size_t i = 1; i < lp.tau && i < recent_.size(); ++i) {
      const double w = static_cast<double>(lp.tau - i);
      b2 += w * w * recent_[recent_.size() - 1 - i];
    }
    cert.b_norm = lp.M * std::sqrt(static_cast<double>(lp.rho_tau)) /
                  std::sqrt(static_cast<double>(lp.tau)) * std::sqrt(b2);
  }
  return cert;
}

ResidualCertificate Monitor::stochastic_certificate(const BlockVector& xk,
                                                    const BlockVector& snapshot,
                                                    double* y_out) const {
  const auto& lp = opts_.lyapunov;
  const std::size_t m = problem_.num_blocks();
  StepRule rule;
  rule.variant = Variant::kStochastic;
  rule.c = opts_.c;
  rule.M = lp.M;
  rule.tau = lp.tau;
  rule.m = m;

  BlockVector w = xk;
  std::vector<double> inv_gamma(m);
  double y = 0.0;
  const double delay_term =
      2.0 * lp.M * static_cast<double>(lp.tau) / std::sqrt(static_cast<double>(m));
  double max_scaled = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    StepOutcome o = ruled_step(problem_, rule, snapshot, xk.block(j), j);
    w.set_block(j, o.new_block);
    const double L_here = coordinate_lipschitz(problem_, xk, j);
    const double s2 = o.step_norm * o.step_norm;
    y += (1.0 / o.gamma - L_here - delay_term) * s2;
    inv_gamma[j] = 1.0 / o.gamma;
    max_scaled = std::max(max_scaled, inv_gamma[j]);
  }
  if (y_out) *y_out = y / (2.0 * static_cast<double>(m));

  const BlockVector gw = full_gradient(problem_, w);
  const BlockVector gs = full_gradient(problem_, snapshot);
  double a2 = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const auto xj = xk.block(j);
    const auto wj = w.block(j);
    for (std::size_t i = 0; i < xj.size(); ++i) {
      const double v = inv_gamma[j] * (xj[i] - wj[i]) + gw.block(j)[i] -
                       gs.block(j)[i];
      a2 += v * v;
    }
  }
  ResidualCertificate cert;
  cert.a_norm = std::sqrt(a2);
  cert.w_residual = max_scaled * std::sqrt(squared_diff(xk, w)) +
                    std::sqrt(squared_diff(gw, gs));
  return cert;
}

const TraceRow& Monitor::consume(const CommitRecord& rec) {
  const std::uint64_t k = replica_.current_k();
  if (rec.k != k) {
    throw ContractViolation("monitor expected record " + std::to_string(k) +
                            ", got " + std::to_string(rec.k));
  }
  const StepOutcome& out = rec.outcome;
  const std::size_t j = out.j;
  const auto& lp = opts_.lyapunov;
  const bool stochastic = lp.variant == Variant::kStochastic;
  const bool stride_row = (k + 1) % opts_.residual_stride == 0;
  const std::size_t d_max = rec.delay.max_delay();

  const BlockVector xk = replica_.current();
  BlockVector snapshot;
  if (d_max > 0 || stochastic) snapshot = replica_.compose_delayed(k, rec.delay.d);

  ResidualCertificate cert;
  double y = kNaN;
  if (stochastic && (stride_row || opts_.stochastic_terms_every_row)) {
    ResidualCertificate s = stochastic_certificate(xk, snapshot, &y);
    if (stride_row) cert = s;
  }

  if (d_max > 0 && !m_check(xk, snapshot, rec)) {
    ++trace_.m_check_violations;
    if (trace_.warnings.size() < kMaxWarnings) {
      trace_.warnings.push_back("M-check failed at k=" + std::to_string(k) +
                                ": gradient difference exceeds M times the delay gap");
    }
  }

  double L_cur = 0.0;
  if (!stochastic && !opts_.linesearch_C) {
    L_cur = coordinate_lipschitz(problem_, xk, j);
  }

  replica_.commit(j, out.new_block);
  BlockVector x_next = xk;
  x_next.set_block(j, out.new_block);

  const double s2 = out.step_norm * out.step_norm;
  recent_.push_back(s2);
  while (recent_.size() > std::max<std::size_t>(lp.tau, 1)) recent_.pop_front();

  TraceRow row;
  row.k = k + 1;
  row.j = j;
  row.gamma = out.gamma;
  row.d_max = d_max;
  row.step_norm = out.step_norm;
  row.psi = psi_value(problem_, x_next);
  if (lp.tau == 0) {
    row.phi = row.psi;
  } else {
    row.phi = row.psi + lyapunov_tail(std::vector<double>(recent_.begin(), recent_.end()), lp);
  }

  if (!stochastic) {
    if (opts_.linesearch_C) {
      y = *opts_.linesearch_C * s2;
    } else {
      y = 0.5 * (1.0 / out.gamma - L_cur - 2.0 * lp.delay_penalty()) * s2;
    }
    BlockMeta& meta = meta_[j];
    meta.updated = true;
    meta.gamma = out.gamma;
    meta.anchor = out.anchor;
    meta.gradient = out.gradient;
    if (stride_row) cert = deterministic_certificate(x_next, out);

    if (row.psi > psi0_ + tol_abs_) {
      ++trace_.level_set_violations;
      if (trace_.warnings.size() < kMaxWarnings) {
        trace_.warnings.push_back("iterate left the initial level set at k=" +
                                  std::to_string(k + 1));
      }
    }
    const double prev_phi = trace_.rows.back().phi;
    if (row.phi + y > prev_phi + tol_abs_) {
      ++trace_.decrease_violations;
      if (trace_.warnings.size() < kMaxWarnings) {
        trace_.warnings.push_back("Lyapunov decrease violated at k=" +
                                  std::to_string(k + 1));
      }
    }
  }
  row.y = y;
  row.res_a = cert.a_norm;
  row.res_b = stochastic ? kNaN : cert.b_norm;
  row.res_c = stochastic ? kNaN : cert.c_norm;
  row.res_w = stochastic ? cert.w_residual : kNaN;

  const double res = stochastic ? cert.w_residual : cert.c_norm;
  if (!std::isnan(res) && res <= opts_.tol_residual) converged_ = true;

  trace_.schedule.indices.push_back(j);
  trace_.schedule.delays.push_back(rec.delay);
  trace_.rows.push_back(row);
  return trace_.rows.back();
}

Trace Monitor::finish() {
  trace_.final_x = replica_.current();
  trace_.converged = converged_;
  return std::move(trace_);
}

std::vector<std::uint64_t> check_decrease(std::span<const TraceRow> rows,
                                          std::optional<double> tol_abs) {
  std::vector<std::uint64_t> bad;
  if (rows.empty()) return bad;
  if (std::isnan(rows.front().phi)) throw ContractViolation("trace lacks phi");
  const double tol =
      tol_abs.value_or(1e-9 * std::max(1.0, std::abs(rows.front().phi)));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (std::isnan(rows[i].phi)) throw ContractViolation("trace lacks phi");
    const double y = std::isnan(rows[i].y) ? 0.0 : rows[i].y;
    if (rows[i].phi + y > rows[i - 1].phi + tol) bad.push_back(rows[i].k);
  }
  return bad;
}

SupermartingaleVerdict check_supermartingale(
    std::span<const std::vector<TraceRow>> replays, std::size_t width) {
  if (width == 0) throw ContractViolation("stratum width must be positive");
  SupermartingaleVerdict verdict;
  std::size_t longest = 0;
  for (const auto& r : replays) longest = std::max(longest, r.size());
  for (std::size_t begin = 1; begin < longest; begin += width) {
    const std::size_t end = std::min(begin + width, longest);
    std::vector<double> sums;
    for (const auto& r : replays) {
      if (r.size() < end) continue;
      double s = 0.0;
      for (std::size_t i = begin; i < end; ++i) {
        if (std::isnan(r[i].y)) {
          throw ContractViolation("replay row " + std::to_string(i) +
                                  " lacks the decrease term Y");
        }
        s += r[i].phi - r[i - 1].phi + r[i].y;
      }
      sums.push_back(s);
    }
    if (sums.size() < 2) continue;
    Stratum st;
    st.k_begin = begin;
    st.k_end = end;
    st.replays = sums.size();
    for (double s : sums) st.mean += s;
    st.mean /= static_cast<double>(sums.size());
    double var = 0.0;
    for (double s : sums) var += (s - st.mean) * (s - st.mean);
    var /= static_cast<double>(sums.size() - 1);
    st.std_error = std::sqrt(var / static_cast<double>(sums.size()));
    // Floor at rounding level so exactly-zero strata (converged tails) pass.
    const double floor = 1e-12 * std::max(1.0, std::abs(replays[0].front().phi));
    st.pass = st.mean <= 3.0 * st.std_error + floor;
    verdict.pass = verdict.pass && st.pass;
    verdict.strata.push_back(st);
  }
  return verdict;
}

std::string to_string(RateRegime r) {
  switch (r) {
    case RateRegime::kFinite:
      return "finite";
    case RateRegime::kLinear:
      return "linear";
    case RateRegime::kSublinear:
      return "sublinear";
    case RateRegime::kInconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

RateFit fit_rate(std::span<const double> gaps) {
  RateFit fit;
  const std::size_t n = gaps.size();
  // The final value stands in for the limit; its neighbourhood is biased.
  const std::size_t usable = n - n / 20;
  fit.points = usable;
  if (usable < 20) return fit;

  std::size_t first_zero = usable;
  for (std::size_t k = 0; k < usable; ++k) {
    if (gaps[k] == 0.0) {
      first_zero = k;
      break;
    }
  }
  if (first_zero < usable) {
    bool stays = true;
    for (std::size_t k = first_zero; k < usable; ++k) stays = stays && gaps[k] == 0.0;
    if (stays) {
      fit.regime = RateRegime::kFinite;
      fit.points = first_zero;
      return fit;
    }
  }

  std::vector<double> ks;
  std::vector<double> logk;
  std::vector<double> logg;
  for (std::size_t k = 0; k < usable; ++k) {
    if (!(gaps[k] > 0.0) || !std::isfinite(gaps[k])) continue;
    ks.push_back(static_cast<double>(k));
    logk.push_back(std::log(static_cast<double>(k) + 1.0));
    logg.push_back(std::log(gaps[k]));
  }
  fit.points = ks.size();
  if (ks.size() < 20) return fit;

  const LineFit lin = least_squares(ks, logg);
  const LineFit pw = least_squares(logk, logg);
  const bool lin_ok = lin.r2 >= 0.99 && lin.slope < 0.0;
  const bool pw_ok = pw.r2 >= 0.99 && pw.slope < 0.0;
  if (lin_ok && (!pw_ok || lin.r2 >= pw.r2)) {
    fit.regime = RateRegime::kLinear;
    fit.rho_hat = std::exp(lin.slope);
    fit.r2 = lin.r2;
  } else if (pw_ok) {
    fit.regime = RateRegime::kSublinear;
    fit.exponent_hat = -pw.slope;
    fit.theta_hat = 0.5 * (1.0 + 1.0 / fit.exponent_hat);
    fit.r2 = pw.r2;
  } else {
    fit.r2 = std::max(lin.r2, pw.r2);
  }
  return fit;
}

std::vector<double> phi_gaps(std::span<const TraceRow> rows) {
  std::vector<double> gaps;
  if (rows.empty()) return gaps;
  const double last = rows.back().phi;
  gaps.reserve(rows.size());
  for (const auto& r : rows) gaps.push_back(std::max(0.0, r.phi - last));
  return gaps;
}

double fit_subgradient_constant(std::span<const TraceRow> rows, std::size_t tau,
                                std::size_t K) {
  double c0 = 0.0;
  // rows[i].step_norm is ||x^i - x^{i-1}||, i.e. step h = i - 1.
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (std::isnan(r.res_a)) continue;
    const double mass = r.res_a + (std::isnan(r.res_b) ? 0.0 : r.res_b);
    const std::size_t lo = i > tau + K ? i - tau - K : 1;
    double steps = 0.0;
    for (std::size_t q = lo; q <= i; ++q) steps += rows[q].step_norm;
    if (steps == 0.0) {
      if (mass > 0.0) return std::numeric_limits<double>::infinity();
      continue;
    }
    c0 = std::max(c0, mass / steps);
  }
  return c0;
}

}  // namespace apalm
