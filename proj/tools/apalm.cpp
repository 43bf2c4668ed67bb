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

// Command-line front end: run, verify, bench.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "apalm/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Asynchronous PALM experiment runner"};
  app.require_subcommand(1);

  std::string run_config;
  auto* run = app.add_subcommand("run", "Run an experiment and write its trace and summary");
  run->add_option("config", run_config, "INI config file")->required();

  std::string verify_trace;
  std::string verify_config;
  auto* verify = app.add_subcommand("verify", "Re-check a trace offline");
  verify->add_option("trace", verify_trace, "trace CSV")->required();
  verify->add_option("config", verify_config, "INI config the trace came from")->required();

  std::string bench_config;
  std::vector<std::size_t> bench_workers;
  auto* bench = app.add_subcommand("bench", "Wall-clock table over worker counts");
  bench->add_option("config", bench_config, "INI config file")->required();
  bench->add_option("--workers", bench_workers, "comma-separated worker counts")
      ->delimiter(',')
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : apalm::kExitConfig;
  }

  if (*run) return apalm::run_command(run_config, std::cout, std::cerr);
  if (*verify) return apalm::verify_command(verify_trace, verify_config, std::cout, std::cerr);
  return apalm::bench_command(bench_config, bench_workers, std::cout, std::cerr);
}
