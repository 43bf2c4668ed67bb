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

#include "apalm/history.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "apalm/error.hpp"

namespace apalm {

std::size_t DelayRecord::max_delay() const noexcept {
  std::size_t m = 0;
  for (std::size_t v : d) m = std::max(m, v);
  return m;
}

IterateHistory::IterateHistory(const BlockVector& x0, std::size_t depth)
    : depth_(std::max<std::size_t>(depth, 1)) {
  slots_.reserve(x0.num_blocks());
  for (std::size_t j = 0; j < x0.num_blocks(); ++j) {
    auto slot = std::make_unique<Slot>();
    auto b = x0.block(j);
    slot->versions.push_back({0, std::vector<double>(b.begin(), b.end())});
    slots_.push_back(std::move(slot));
  }
}

std::uint64_t IterateHistory::window_floor(std::uint64_t k) const noexcept {
  return k + 1 > depth_ ? k + 1 - depth_ : 0;
}

BlockRead IterateHistory::read_block(std::size_t j) const {
  const Slot& slot = *slots_.at(j);
  std::lock_guard lock(slot.mu);
  const Version& v = slot.versions.back();
  return {v.value, v.stamp};
}

std::vector<double> IterateHistory::block_at(std::size_t j,
                                             std::int64_t stamp) const {
  const Slot& slot = *slots_.at(j);
  const std::uint64_t t = stamp < 0 ? 0 : static_cast<std::uint64_t>(stamp);
  const std::uint64_t now = current_k();
  if (t > now) {
    throw ContractViolation("requested iterate " + std::to_string(t) +
                            " lies beyond the current iteration " +
                            std::to_string(now));
  }
  if (t < window_floor(now)) {
    throw StalenessError("iterate " + std::to_string(t) +
                         " evicted from the history window (depth " +
                         std::to_string(depth_) + ")");
  }
  std::lock_guard lock(slot.mu);
  // Last version with stamp <= t.
  auto it = std::upper_bound(
      slot.versions.begin(), slot.versions.end(), t,
      [](std::uint64_t s, const Version& v) { return s < v.stamp; });
  if (it == slot.versions.begin()) {
    throw StalenessError("iterate " + std::to_string(t) + " of block " +
                         std::to_string(j) + " no longer retained");
  }
  return std::prev(it)->value;
}

BlockVector IterateHistory::compose_delayed(
    std::uint64_t k, std::span<const std::size_t> d) const {
  if (d.size() != slots_.size()) {
    throw ContractViolation("delay vector length does not match block count");
  }
  std::vector<std::vector<double>> blocks(slots_.size());
  for (std::size_t j = 0; j < slots_.size(); ++j) {
    blocks[j] = block_at(j, static_cast<std::int64_t>(k) -
                                static_cast<std::int64_t>(d[j]));
  }
  return BlockVector(std::move(blocks));
}

BlockVector IterateHistory::iterate(std::uint64_t k) const {
  std::vector<std::size_t> zero(slots_.size(), 0);
  return compose_delayed(k, zero);
}

std::uint64_t IterateHistory::commit(std::size_t j,
                                     std::span<const double> value) {
  Slot& slot = *slots_.at(j);
  const std::uint64_t stamp = current_k() + 1;
  {
    std::lock_guard lock(slot.mu);
    if (value.size() != slot.versions.back().value.size()) {
      throw ContractViolation("committed block has the wrong dimension");
    }
    slot.versions.push_back({stamp, std::vector<double>(value.begin(), value.end())});
    const std::uint64_t floor = window_floor(stamp);
    while (slot.versions.size() >= 2 && slot.versions[1].stamp <= floor) {
      slot.versions.pop_front();
    }
  }
  current_k_.store(stamp, std::memory_order_release);
  return stamp;
}

std::size_t IterateHistory::realized_delay(std::size_t j,
                                           std::uint64_t read_stamp,
                                           std::uint64_t k) const {
  const Slot& slot = *slots_.at(j);
  std::lock_guard lock(slot.mu);
  auto it = std::find_if(slot.versions.begin(), slot.versions.end(),
                         [&](const Version& v) { return v.stamp == read_stamp; });
  if (it == slot.versions.end()) {
    throw StalenessError("version read at stamp " + std::to_string(read_stamp) +
                         " of block " + std::to_string(j) + " was evicted");
  }
  auto next = std::next(it);
  if (next == slot.versions.end() || next->stamp > k) return 0;
  // The read value is x_j^s for s in [read_stamp, next->stamp - 1].
  return static_cast<std::size_t>(k - (next->stamp - 1));
}

std::uint64_t last_update(std::span<const std::size_t> indices,
                          std::uint64_t k, std::size_t j) {
  const std::uint64_t hi = std::min<std::uint64_t>(k, indices.size());
  for (std::uint64_t q = hi; q-- > 0;) {
    if (indices[q] == j) return q;
  }
  return 0;
}

std::size_t rho_tau(std::span<const std::size_t> indices, std::size_t tau) {
  if (tau == 0 || indices.empty()) return 0;
  std::size_t m = *std::max_element(indices.begin(), indices.end()) + 1;
  std::vector<std::size_t> count(m, 0);
  std::size_t best = 0;
  // Sliding window {h : k - tau <= h <= k - 1}, clipped at h = 0.
  for (std::size_t h = 0; h < indices.size(); ++h) {
    best = std::max(best, ++count[indices[h]]);
    if (h + 1 >= tau) --count[indices[h + 1 - tau]];
  }
  return best;
}

bool essentially_cyclic(std::span<const std::size_t> indices, std::size_t m,
                        std::size_t K) {
  if (K < m) return false;
  if (indices.size() < K) return true;
  std::vector<std::size_t> count(m, 0);
  std::size_t covered = 0;
  for (std::size_t h = 0; h < indices.size(); ++h) {
    if (indices[h] >= m) return false;
    if (count[indices[h]]++ == 0) ++covered;
    if (h >= K) {
      if (--count[indices[h - K]] == 0) --covered;
    }
    if (h + 1 >= K && covered < m) return false;
  }
  return true;
}

std::optional<std::size_t> cyclicity(std::span<const std::size_t> indices,
                                     std::size_t m) {
  if (!essentially_cyclic(indices, m, indices.size())) return std::nullopt;
  std::size_t lo = m;
  std::size_t hi = indices.size();
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (essentially_cyclic(indices, m, mid)) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return lo;
}

void write_schedule(std::ostream& os, const Schedule& s) {
  for (std::size_t k = 0; k < s.indices.size(); ++k) {
    os << k << ' ' << (s.indices[k] + 1);
    for (std::size_t d : s.delays.at(k).d) os << ' ' << d;
    os << '\n';
  }
}

Schedule read_schedule(std::istream& is, std::size_t m) {
  Schedule s;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    std::string tok;
    std::vector<std::uint64_t> vals;
    std::size_t col = 0;
    while (fields >> tok) {
      ++col;
      std::uint64_t v = 0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw ParseError("expected a nonnegative integer, got '" + tok + "'",
                         lineno, col);
      }
      vals.push_back(v);
    }
    if (vals.size() != m + 2) {
      throw ParseError("expected " + std::to_string(m + 2) + " fields, got " +
                           std::to_string(vals.size()),
                       lineno, std::min(vals.size(), m + 2) + 1);
    }
    if (vals[0] != s.indices.size()) {
      throw ParseError("iteration numbers must run 0, 1, 2, ...", lineno, 1);
    }
    if (vals[1] < 1 || vals[1] > m) {
      throw ParseError("block index out of range 1.." + std::to_string(m),
                       lineno, 2);
    }
    s.indices.push_back(static_cast<std::size_t>(vals[1] - 1));
    DelayRecord rec;
    rec.k = vals[0];
    rec.d.assign(vals.begin() + 2, vals.end());
    s.delays.push_back(std::move(rec));
  }
  return s;
}

}  // namespace apalm
