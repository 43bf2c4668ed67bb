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

#ifndef APALM_EXECUTOR_HPP_
#define APALM_EXECUTOR_HPP_

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <variant>

#include "apalm/core.hpp"
#include "apalm/history.hpp"
#include "apalm/monitor.hpp"
#include "apalm/solver.hpp"

namespace apalm {

enum class DelayPattern { kZero, kMax, kRandom };

/// Replays a fixed (j_k, d_k) script. With `cyclic`, a script shorter than
/// max_iters is repeated with k shifted.
struct ReplayOptions {
  Schedule script;
  bool cyclic = false;
  /// Extra monitor switches (stochastic per-row Y for bundle checks).
  bool stochastic_terms_every_row = false;
};

enum class Throttle { kBlock, kError };

struct ParallelConfig {
  std::size_t workers = 1;
  std::optional<std::size_t> tau_max;  // defaults to 4 * workers
  Throttle throttle = Throttle::kBlock;
  /// Test hook: sleep between reading the snapshot and committing, to force
  /// stale reads.
  std::chrono::microseconds read_delay{0};

  std::size_t resolved_tau_max() const noexcept {
    return tau_max.value_or(4 * workers);
  }
};

/// Script of `length` iterations: indices from index_sequence(cfg, m) and
/// delays from `pattern` (random delays uniform on {0..tau} from `seed`).
Schedule make_schedule(const SolverConfig& cfg, std::size_t m,
                       std::uint64_t length, DelayPattern pattern,
                       std::uint64_t seed);

/// Deterministic single-threaded execution of a script. Throws
/// StalenessError if a scripted delay exceeds cfg.tau and
/// ContractViolation if a deterministic script is not K-cyclic.
Trace replay(const Problem& problem, const BlockVector& x0,
             const SolverConfig& cfg, const ReplayOptions& opts);

/// Multi-threaded bounded-staleness execution. Commits are serialized in
/// ticket order; the realized (j_k, d_k) are returned in the trace schedule so
/// the run can be replayed bit-for-bit. cfg.tau is replaced by tau_max.
Trace parallel_run(const Problem& problem, const BlockVector& x0,
                   const SolverConfig& cfg, const ParallelConfig& pcfg);

using ExecutorConfig = std::variant<ReplayOptions, ParallelConfig>;

Trace run(const Problem& problem, const BlockVector& x0,
          const SolverConfig& cfg, const ExecutorConfig& exec);

}  // namespace apalm

#endif  // APALM_EXECUTOR_HPP_
