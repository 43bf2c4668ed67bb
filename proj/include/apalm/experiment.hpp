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

#ifndef APALM_EXPERIMENT_HPP_
#define APALM_EXPERIMENT_HPP_

#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "apalm/executor.hpp"
#include "apalm/glrm.hpp"
#include "apalm/monitor.hpp"
#include "apalm/trace_io.hpp"

namespace apalm {

/// Process exit statuses of the CLI.
enum ExitCode : int {
  kExitConverged = 0,
  kExitViolations = 1,  // verify only
  kExitNotConverged = 2,
  kExitAssumptionFlags = 3,
  kExitConfig = 10,
  kExitMissingFile = 11,
  kExitBadInput = 12,
  kExitAlgorithm = 13,
  kExitInternal = 14,
};

/// Maps an exception to the exit status it should produce.
int exit_code_for(const std::exception& e);

struct ProblemSection {
  std::optional<std::string> synthetic;
  std::optional<std::filesystem::path> data;  // resolved against the config dir
  // Model fields; for a synthetic problem, present keys override its defaults.
  std::optional<std::size_t> rank;
  std::optional<EntryLoss> loss;
  std::optional<Regularizer> row_reg;
  std::optional<Regularizer> col_reg;
  std::optional<double> quad_reg;
  std::uint64_t init_seed = 1;
  std::optional<double> M;  // nullopt = estimate
};

struct ReplaySection {
  std::optional<std::filesystem::path> script;  // resolved against the config dir
  bool script_cyclic = false;
  DelayPattern delays = DelayPattern::kZero;
};

struct OutputSection {
  std::filesystem::path trace;    // relative to the working directory
  std::filesystem::path summary;  // relative to the working directory
  std::optional<std::filesystem::path> script;
};

struct ExperimentConfig {
  std::filesystem::path source;
  ProblemSection problem;
  SolverConfig solver;
  std::size_t replays = 1;  // stochastic only; > 1 writes a replay bundle
  std::variant<ReplaySection, ParallelConfig> executor;
  OutputSection output;
};

/// Parses and validates an INI config. Throws ConfigError on schema or value
/// errors and MissingFileError for absent config/data/script files.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(std::istream& is,
                              const std::filesystem::path& source);

struct BuiltExperiment {
  GlrmSpec spec;
  DataMatrix data;
  Problem problem;  // with the global M resolved
  BlockVector x0;
  double M = 0.0;
};

BuiltExperiment build_experiment(const ExperimentConfig& cfg);

/// The staleness bound a run uses (tau, or tau_max for parallel runs).
std::size_t effective_tau(const ExperimentConfig& cfg);

struct RunReport {
  Trace trace;
  std::vector<std::vector<TraceRow>> bundle;  // empty unless replays > 1
  Summary summary;
  int exit_code = kExitConverged;
};

/// Runs the configured experiment without touching the file system outputs.
RunReport run_experiment(const ExperimentConfig& cfg);

struct VerifyReport {
  std::vector<std::string> messages;
  std::vector<std::uint64_t> violations;  // row k values
  bool pass = true;
};

VerifyReport verify_trace(std::span<const TraceRow> rows,
                          const ExperimentConfig& cfg, double M,
                          const std::vector<std::vector<TraceRow>>* bundle);

/// CLI entry points; return the process exit status.
int run_command(const std::filesystem::path& config, std::ostream& out,
                std::ostream& err);
int verify_command(const std::filesystem::path& trace,
                   const std::filesystem::path& config, std::ostream& out,
                   std::ostream& err);
int bench_command(const std::filesystem::path& config,
                  const std::vector<std::size_t>& workers, std::ostream& out,
                  std::ostream& err);

/// "<trace>.bundle.csv"
std::filesystem::path bundle_path(const std::filesystem::path& trace);

}  // namespace apalm

#endif  // APALM_EXPERIMENT_HPP_
