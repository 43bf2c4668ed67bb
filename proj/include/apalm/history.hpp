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

#ifndef APALM_HISTORY_HPP_
#define APALM_HISTORY_HPP_

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "apalm/core.hpp"

namespace apalm {

/// Per-block ages of the snapshot used at iteration k: block j of the
/// snapshot is x_j^{k - d[j]}.
struct DelayRecord {
  std::uint64_t k = 0;
  std::vector<std::size_t> d;

  std::size_t max_delay() const noexcept;
  bool operator==(const DelayRecord&) const = default;
};

/// The block chosen at each iteration and the delays it read with.
/// indices[k] is j_k (0-based); delays[k].k == k.
struct Schedule {
  std::vector<std::size_t> indices;
  std::vector<DelayRecord> delays;

  std::size_t size() const noexcept { return indices.size(); }
  bool operator==(const Schedule&) const = default;
};

struct BlockRead {
  std::vector<double> value;
  std::uint64_t stamp = 0;  // first iteration at which this value was current
};

/// Versioned iterate store.
///
/// Commit k writes one block and produces x^{k+1}; every version carries the
/// stamp of the first iterate it belongs to, and the initial values carry
/// stamp 0. Stamps at or below 0 resolve to x^0. Each block has its own
/// lock, so a read never sees a torn block, while reads of different blocks
/// may come from different iterations. Commits must be serialized by the
/// caller (one writer at a time).
class IterateHistory {
 public:
  /// Every stamp in [current_k - depth + 1, current_k] stays retrievable.
  IterateHistory(const BlockVector& x0, std::size_t depth);

  std::size_t num_blocks() const noexcept { return slots_.size(); }
  std::size_t depth() const noexcept { return depth_; }
  std::uint64_t current_k() const noexcept {
    return current_k_.load(std::memory_order_acquire);
  }

  /// Latest value of block j and its stamp.
  BlockRead read_block(std::size_t j) const;

  /// x_j^stamp. Throws StalenessError if the stamp fell out of the window
  /// and ContractViolation if it lies in the future.
  std::vector<double> block_at(std::size_t j, std::int64_t stamp) const;

  /// x^{k-d} = (x_1^{k-d_1}, ..., x_m^{k-d_m}).
  BlockVector compose_delayed(std::uint64_t k,
                              std::span<const std::size_t> d) const;
  BlockVector compose_delayed(const DelayRecord& rec) const {
    return compose_delayed(rec.k, rec.d);
  }
  /// x^k.
  BlockVector iterate(std::uint64_t k) const;
  BlockVector current() const { return iterate(current_k()); }

  /// Writes block j, advancing current_k by one. Returns the new stamp.
  std::uint64_t commit(std::size_t j, std::span<const double> value);

  /// Smallest d such that x_j^{k-d} equals the version read with
  /// `read_stamp`. Throws StalenessError if that version was evicted.
  std::size_t realized_delay(std::size_t j, std::uint64_t read_stamp,
                             std::uint64_t k) const;

 private:
  struct Version {
    std::uint64_t stamp;
    std::vector<double> value;
  };
  struct Slot {
    mutable std::mutex mu;
    std::deque<Version> versions;
  };

  std::uint64_t window_floor(std::uint64_t k) const noexcept;

  std::size_t depth_;
  std::vector<std::unique_ptr<Slot>> slots_;
  std::atomic<std::uint64_t> current_k_{0};
};

/// l(k, j): the last iteration q < k with j_q = j, or 0 if there is none.
std::uint64_t last_update(std::span<const std::size_t> indices,
                          std::uint64_t k, std::size_t j);
inline std::uint64_t last_update(const Schedule& s, std::uint64_t k,
                                 std::size_t j) {
  return last_update(s.indices, k, j);
}

/// Largest number of times one block appears among j_{k-tau}, ..., j_{k-1},
/// over all k. Returns 0 for tau == 0.
std::size_t rho_tau(std::span<const std::size_t> indices, std::size_t tau);
inline std::size_t rho_tau(const Schedule& s, std::size_t tau) {
  return rho_tau(s.indices, tau);
}

/// True if every window of K consecutive indices contained in the sequence
/// covers {0, ..., m-1}.
bool essentially_cyclic(std::span<const std::size_t> indices, std::size_t m,
                        std::size_t K);

/// Smallest K for which essentially_cyclic holds, or nullopt if even the
/// whole sequence misses a block.
std::optional<std::size_t> cyclicity(std::span<const std::size_t> indices,
                                     std::size_t m);

/// Line format: "k j d_1 ... d_m" with j 1-based. Lines starting with '#'
/// and blank lines are ignored on read.
void write_schedule(std::ostream& os, const Schedule& s);
/// Throws ParseError with the offending line and field.
Schedule read_schedule(std::istream& is, std::size_t m);

}  // namespace apalm

#endif  // APALM_HISTORY_HPP_
