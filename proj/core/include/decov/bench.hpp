// Part of decov, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace decov {

struct BenchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The six execution modes compared by the harness.
extern const std::vector<std::string> kBenchModes;

struct BenchRow {
  std::string program;  // file name within the suite
  std::string mode;
  double median_seconds = 0;
  double ratio = 1.0;  // overhead ratio vs mode=none, startup subtracted
};

struct BenchConfig {
  std::string decov_bin;  // binary to spawn for child runs
  int runs = 5;
  bool subtract_startup = true;
};

/// Wall-clock seconds for one child run of `decov run --mode <mode> <program>`,
/// stdout discarded. `extra_env` entries look like "NAME=value".
double time_child(const BenchConfig& cfg, const std::string& mode,
                  const std::string& program, const std::vector<std::string>& extra_env);

/// Run every `.mini` program in the suite under every mode, `runs` times
/// each, sequentially. Rows carry medians and overhead ratios.
std::vector<BenchRow> run_bench(const std::string& suite_dir, const BenchConfig& cfg);

std::string bench_table(const std::vector<BenchRow>& rows);
std::string bench_json(const std::vector<BenchRow>& rows);

}  // namespace decov
