// Part of decov, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#include "decov/bench.hpp"

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"

extern char** environ;

namespace fs = std::filesystem;

namespace decov {

const std::vector<std::string> kBenchModes = {
    "none", "trace-null", "trace-cov", "probe-full", "probe-flag-only",
    "probe-no-deinstr"};

namespace {

// mode name -> (--mode value, extra env)
void mode_setup(const std::string& mode, std::string& flag,
                std::vector<std::string>& env) {
  if (mode == "none") flag = "none";
  else if (mode == "trace-null") flag = "trace-null";
  else if (mode == "trace-cov") flag = "trace-cov";
  else if (mode == "probe-full") flag = "probe";
  else if (mode == "probe-flag-only") { flag = "probe"; env.push_back("DECOV_NO_ELIM=1"); }
  else if (mode == "probe-no-deinstr") { flag = "probe"; env.push_back("DECOV_NO_DEINSTR=1"); }
  else throw BenchError("unknown bench mode " + mode);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

}  // namespace

double time_child(const BenchConfig& cfg, const std::string& mode,
                  const std::string& program, const std::vector<std::string>& extra_env) {
  std::string mode_flag;
  std::vector<std::string> env_add = extra_env;
  mode_setup(mode, mode_flag, env_add);

  std::vector<std::string> args = {cfg.decov_bin, "run", "--mode", mode_flag, program};
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);

  std::vector<char*> envp;
  for (char** e = environ; *e; ++e) envp.push_back(*e);
  for (auto& e : env_add) envp.push_back(const_cast<char*>(e.c_str()));
  envp.push_back(nullptr);

  auto t0 = std::chrono::steady_clock::now();
  pid_t pid = fork();
  if (pid < 0) throw BenchError("fork failed");
  if (pid == 0) {
    int devnull = open("/dev/null", O_WRONLY);
    if (devnull >= 0) dup2(devnull, STDOUT_FILENO);
    execve(argv[0], argv.data(), envp.data());
    _exit(127);
  }
  int status = 0;
  if (waitpid(pid, &status, 0) < 0) throw BenchError("waitpid failed");
  auto t1 = std::chrono::steady_clock::now();
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
    throw BenchError(program + " under " + mode + " exited with status " +
                     std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1));
  return std::chrono::duration<double>(t1 - t0).count();
}

std::vector<BenchRow> run_bench(const std::string& suite_dir, const BenchConfig& cfg) {
  if (cfg.runs < 5) throw BenchError("need at least 5 runs per mode");

  std::vector<std::string> programs;
  for (auto& entry : fs::directory_iterator(suite_dir))
    if (entry.path().extension() == ".mini") programs.push_back(entry.path().string());
  std::sort(programs.begin(), programs.end());
  if (programs.empty()) throw BenchError("no .mini programs in " + suite_dir);

  // process startup constant: median none-mode run of an empty program
  double startup = 0;
  if (cfg.subtract_startup) {
    fs::path empty = fs::temp_directory_path() / "decov_bench_empty.mini";
    std::ofstream(empty.string()) << "";
    std::vector<double> times;
    for (int i = 0; i < cfg.runs; ++i)
      times.push_back(time_child(cfg, "none", empty.string(), {}));
    startup = median(times);
    fs::remove(empty);
  }

  std::vector<BenchRow> rows;
  for (auto& program : programs) {
    double base = 0;
    for (auto& mode : kBenchModes) {
      std::vector<double> times;
      for (int i = 0; i < cfg.runs; ++i)
        times.push_back(time_child(cfg, mode, program, {}));
      BenchRow row;
      row.program = fs::path(program).filename().string();
      row.mode = mode;
      row.median_seconds = median(times);
      double net = std::max(row.median_seconds - startup, 1e-9);
      if (mode == "none") base = net;
      row.ratio = net / std::max(base, 1e-9);
      rows.push_back(row);
    }
  }
  return rows;
}

std::string bench_table(const std::vector<BenchRow>& rows) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-24s %-18s %12s %8s\n", "program", "mode",
                "median (s)", "ratio");
  out += buf;
  for (auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-24s %-18s %12.4f %8.2f\n", r.program.c_str(),
                  r.mode.c_str(), r.median_seconds, r.ratio);
    out += buf;
  }
  return out;
}

std::string bench_json(const std::vector<BenchRow>& rows) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (auto& r : rows)
    arr.push_back({{"program", r.program},
                   {"mode", r.mode},
                   {"median_seconds", r.median_seconds},
                   {"ratio", r.ratio}});
  return arr.dump(2) + "\n";
}

}  // namespace decov
