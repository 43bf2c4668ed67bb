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

#ifndef APALM_TRACE_IO_HPP_
#define APALM_TRACE_IO_HPP_

#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "apalm/monitor.hpp"

namespace apalm {

inline constexpr std::string_view kTraceHeader =
    "k,j,gamma,d_max,step_norm,psi,phi,res_a,res_b,res_c,res_w";
inline constexpr std::string_view kBundleHeader = "replay,k,phi,y";

/// Shortest round-tripping decimal; "nan" / "inf" / "-inf".
std::string format_double(double v);
/// Inverse of format_double; throws std::invalid_argument on junk.
double parse_double(std::string_view s);

/// Trace CSV: the initial row has an empty j; other rows carry j 1-based.
void write_trace_csv(std::ostream& os, std::span<const TraceRow> rows);
/// Throws ParseError on header mismatch or malformed rows. y is left nan.
std::vector<TraceRow> read_trace_csv(std::istream& is);

/// Per-row (phi, y) of several replays, for the offline supermartingale check.
void write_bundle_csv(std::ostream& os,
                      std::span<const std::vector<TraceRow>> replays);
std::vector<std::vector<TraceRow>> read_bundle_csv(std::istream& is);

using Summary = std::vector<std::pair<std::string, std::string>>;

/// Flat "key = value" lines.
void write_summary(std::ostream& os, const Summary& s);
Summary read_summary(std::istream& is);
const std::string* find_key(const Summary& s, std::string_view key);

}  // namespace apalm

#endif  // APALM_TRACE_IO_HPP_
