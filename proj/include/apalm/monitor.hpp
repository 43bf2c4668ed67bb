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

#ifndef APALM_MONITOR_HPP_
#define APALM_MONITOR_HPP_

#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "apalm/core.hpp"
#include "apalm/history.hpp"
#include "apalm/solver.hpp"

namespace apalm {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct LyapunovParams {
  Variant variant = Variant::kDeterministic;
  double M = 1.0;
  std::size_t tau = 0;
  std::size_t m = 1;
  std::size_t rho_tau = 0;

  /// M/(2 sqrt m) or M sqrt(rho)/(2 sqrt tau); zero when tau = 0.
  double coefficient() const noexcept;
  /// M sqrt(rho tau) for the deterministic variant, 0 otherwise.
  double delay_penalty() const noexcept;
};

/// Phi(z^k) = Psi(x^k) + coeff * sum_{h=1..tau} (tau - h + 1) ||x^{k-h+1} - x^{k-h}||^2.
double lyapunov(const Problem& problem, const IterateHistory& history,
                std::uint64_t k, const LyapunovParams& p);

/// Same sum from squared step norms, most recent last.
double lyapunov_tail(std::span<const double> squared_steps,
                     const LyapunovParams& p);

struct ResidualCertificate {
  double a_norm = kNaN;
  double b_norm = kNaN;
  double c_norm = kNaN;
  double w_residual = kNaN;
};

/// Everything a committed update carries to the monitor.
struct CommitRecord {
  std::uint64_t k = 0;
  DelayRecord delay;
  StepOutcome outcome;
};

struct TraceRow {
  std::uint64_t k = 0;
  std::optional<std::size_t> j;  // 0-based; empty on the initial row
  double gamma = 0.0;
  std::size_t d_max = 0;
  double step_norm = 0.0;
  double psi = kNaN;
  double phi = kNaN;
  double res_a = kNaN;
  double res_b = kNaN;
  double res_c = kNaN;
  double res_w = kNaN;
  /// Decrease term Y of the transition into this row (not part of the CSV).
  double y = kNaN;
};

struct Trace {
  std::vector<TraceRow> rows;
  Schedule schedule;
  LyapunovParams params;
  BlockVector final_x;
  bool converged = false;
  std::size_t m_check_violations = 0;
  std::size_t level_set_violations = 0;
  std::size_t decrease_violations = 0;
  std::vector<std::string> warnings;
};

struct MonitorOptions {
  LyapunovParams lyapunov;
  double c = 0.9;
  std::size_t residual_stride = 1;
  double tol_residual = 1e-6;
  /// Deterministic: Y = C ||step||^2 instead of the stepsize form.
  std::optional<double> linesearch_C;
  /// Stochastic: compute w^k and Y on every row (needed for the
  /// supermartingale check), not just on stride rows.
  bool stochastic_terms_every_row = false;
  /// Additional versions the monitor keeps beyond tau.
  std::size_t extra_depth = 8;
};

/// Single-threaded consumer of the committed record stream. Keeps its own
/// replica of the iterates; never touches the executor's store.
class Monitor {
 public:
  Monitor(const Problem& problem, const BlockVector& x0, MonitorOptions opts);

  /// Apply record k (must equal the number of records consumed so far) and
  /// append row k+1.
  const TraceRow& consume(const CommitRecord& rec);

  bool converged() const noexcept { return converged_; }
  std::uint64_t iterations() const noexcept { return replica_.current_k(); }
  const std::vector<TraceRow>& rows() const noexcept { return trace_.rows; }
  const IterateHistory& replica() const noexcept { return replica_; }
  double psi0() const noexcept { return psi0_; }

  Trace finish();

 private:
  struct BlockMeta {
    bool updated = false;
    double gamma = 0.0;
    std::vector<double> anchor;
    std::vector<double> gradient;
  };

  ResidualCertificate deterministic_certificate(const BlockVector& x_next,
                                                const StepOutcome& out) const;
  ResidualCertificate stochastic_certificate(const BlockVector& xk,
                                             const BlockVector& snapshot,
                                             double* y_out) const;
  bool m_check(const BlockVector& xk, const BlockVector& snapshot,
               const CommitRecord& rec) const;

  const Problem& problem_;
  MonitorOptions opts_;
  IterateHistory replica_;
  std::vector<BlockMeta> meta_;
  std::deque<double> recent_;  // last tau squared step norms, newest last
  double psi0_;
  double tol_abs_;
  bool converged_ = false;
  Trace trace_;
};

/// Indices (row k values) where Phi_{k} + Y > Phi_{k-1} + tol_abs.
/// tol_abs defaults to 1e-9 max(1, |Phi_0|). Rows with nan Y count Y = 0.
std::vector<std::uint64_t> check_decrease(std::span<const TraceRow> rows,
                                          std::optional<double> tol_abs = {});

struct Stratum {
  std::uint64_t k_begin = 0;
  std::uint64_t k_end = 0;  // exclusive row index
  std::size_t replays = 0;
  double mean = 0.0;
  double std_error = 0.0;
  bool pass = true;
};

struct SupermartingaleVerdict {
  bool pass = true;
  std::vector<Stratum> strata;
};

/// One-sided check of E[Phi_{k+1} - Phi_k + Y_k] <= 0 across replays: for each
/// stratum of `width` rows, the mean over replays of the summed increments
/// must not exceed 3 standard errors. Throws ContractViolation on missing Y.
SupermartingaleVerdict check_supermartingale(
    std::span<const std::vector<TraceRow>> replays, std::size_t width = 25);

enum class RateRegime { kFinite, kLinear, kSublinear, kInconclusive };
std::string to_string(RateRegime r);

struct RateFit {
  RateRegime regime = RateRegime::kInconclusive;
  double rho_hat = kNaN;
  double exponent_hat = kNaN;
  double theta_hat = kNaN;
  double r2 = kNaN;
  std::size_t points = 0;
};

RateFit fit_rate(std::span<const double> gaps);

/// Phi_k - Phi_last for every row.
std::vector<double> phi_gaps(std::span<const TraceRow> rows);

/// Smallest c_0 with a + b <= c_0 * sum_{h=k-tau-K}^{k} step_h on every row
/// carrying residuals; +inf if some row has residual mass but no steps.
double fit_subgradient_constant(std::span<const TraceRow> rows, std::size_t tau,
                                std::size_t K);

}  // namespace apalm

#endif  // APALM_MONITOR_HPP_
