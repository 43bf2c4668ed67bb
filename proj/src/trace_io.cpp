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

#include "apalm/trace_io.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "apalm/error.hpp"

namespace apalm {
namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t c = line.find(',', start);
    if (c == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, c - start));
    start = c + 1;
  }
}

std::string_view chomp(const std::string& line) {
  std::string_view v(line);
  if (!v.empty() && v.back() == '\r') v.remove_suffix(1);
  return v;
}

std::uint64_t parse_count(std::string_view s, std::size_t line, std::size_t col) {
  if (s.empty()) throw ParseError("empty integer field", line, col);
  std::uint64_t v = 0;
  for (char ch : s) {
    if (ch < '0' || ch > '9') {
      throw ParseError("not an integer: '" + std::string(s) + "'", line, col);
    }
    v = v * 10 + static_cast<std::uint64_t>(ch - '0');
  }
  return v;
}

double parse_real(std::string_view s, std::size_t line, std::size_t col) {
  try {
    return parse_double(s);
  } catch (const std::invalid_argument&) {
    throw ParseError("not a number: '" + std::string(s) + "'", line, col);
  }
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  if (s == "nan") return kNaN;
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size()) {
    throw std::invalid_argument("not a number: " + std::string(s));
  }
  return v;
}

void write_trace_csv(std::ostream& os, std::span<const TraceRow> rows) {
  os << kTraceHeader << '\n';
  for (const auto& r : rows) {
    os << r.k << ',';
    if (r.j) os << (*r.j + 1);
    os << ',' << format_double(r.gamma) << ',' << r.d_max << ','
       << format_double(r.step_norm) << ',' << format_double(r.psi) << ','
       << format_double(r.phi) << ',' << format_double(r.res_a) << ','
       << format_double(r.res_b) << ',' << format_double(r.res_c) << ','
       << format_double(r.res_w) << '\n';
  }
}

std::vector<TraceRow> read_trace_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || chomp(line) != kTraceHeader) {
    throw ParseError("trace header must be '" + std::string(kTraceHeader) + "'",
                     1, 1);
  }
  std::vector<TraceRow> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    const auto view = chomp(line);
    if (view.empty()) continue;
    const auto f = split_commas(view);
    if (f.size() != 11) {
      throw ParseError("expected 11 fields, found " + std::to_string(f.size()),
                       lineno, std::min<std::size_t>(f.size(), 11) + 1);
    }
    TraceRow r;
    r.k = parse_count(f[0], lineno, 1);
    if (!f[1].empty()) {
      const auto j = parse_count(f[1], lineno, 2);
      if (j == 0) throw ParseError("block index is 1-based", lineno, 2);
      r.j = static_cast<std::size_t>(j - 1);
    }
    r.gamma = parse_real(f[2], lineno, 3);
    r.d_max = static_cast<std::size_t>(parse_count(f[3], lineno, 4));
    r.step_norm = parse_real(f[4], lineno, 5);
    r.psi = parse_real(f[5], lineno, 6);
    r.phi = parse_real(f[6], lineno, 7);
    r.res_a = parse_real(f[7], lineno, 8);
    r.res_b = parse_real(f[8], lineno, 9);
    r.res_c = parse_real(f[9], lineno, 10);
    r.res_w = parse_real(f[10], lineno, 11);
    rows.push_back(r);
  }
  return rows;
}

void write_bundle_csv(std::ostream& os,
                      std::span<const std::vector<TraceRow>> replays) {
  os << kBundleHeader << '\n';
  for (std::size_t r = 0; r < replays.size(); ++r) {
    for (const auto& row : replays[r]) {
      os << r << ',' << row.k << ',' << format_double(row.phi) << ','
         << format_double(row.y) << '\n';
    }
  }
}

std::vector<std::vector<TraceRow>> read_bundle_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || chomp(line) != kBundleHeader) {
    throw ParseError("bundle header must be '" + std::string(kBundleHeader) + "'",
                     1, 1);
  }
  std::vector<std::vector<TraceRow>> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    const auto view = chomp(line);
    if (view.empty()) continue;
    const auto f = split_commas(view);
    if (f.size() != 4) {
      throw ParseError("expected 4 fields, found " + std::to_string(f.size()),
                       lineno, std::min<std::size_t>(f.size(), 4) + 1);
    }
    const auto rep = parse_count(f[0], lineno, 1);
    if (rep > out.size()) throw ParseError("replays out of order", lineno, 1);
    if (rep == out.size()) out.emplace_back();
    TraceRow r;
    r.k = parse_count(f[1], lineno, 2);
    if (r.k != out[rep].size()) throw ParseError("rows out of order", lineno, 2);
    r.phi = parse_real(f[2], lineno, 3);
    r.y = parse_real(f[3], lineno, 4);
    out[rep].push_back(r);
  }
  return out;
}

void write_summary(std::ostream& os, const Summary& s) {
  for (const auto& [k, v] : s) os << k << " = " << v << '\n';
}

Summary read_summary(std::istream& is) {
  Summary s;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto view = chomp(line);
    if (view.empty() || view.front() == '#') continue;
    const auto eq = view.find(" = ");
    if (eq == std::string_view::npos) {
      throw ParseError("expected 'key = value'", lineno, 1);
    }
    s.emplace_back(std::string(view.substr(0, eq)),
                   std::string(view.substr(eq + 3)));
  }
  return s;
}

const std::string* find_key(const Summary& s, std::string_view key) {
  for (const auto& [k, v] : s) {
    if (k == key) return &v;
  }
  return nullptr;
}

}  // namespace apalm
