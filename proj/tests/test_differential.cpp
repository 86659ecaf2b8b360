// Part of decov, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "decov/coverage.hpp"
#include "decov/loader.hpp"
#include "decov/report.hpp"
#include "decov/vm.hpp"
#include "fuzz.hpp"
#include "oracle.hpp"

using namespace decov;
namespace fs = std::filesystem;

namespace {

struct Observed {
  std::set<std::pair<std::string, int>> lines;
  std::set<std::tuple<std::string, int, int>> branches;
  std::string output;
  int status = 0;
  int skip_violations = 0;
  size_t verify_failures = 0;
  int batches = 0;
};

Observed probe_run(const std::string& main_path, uint32_t threshold) {
  Observed o;
  std::ostringstream out;
  VM vm(out);
  EngineConfig cfg;
  cfg.threshold = threshold;
  cfg.debug_checks = true;
  CoverageEngine engine(vm, cfg);
  vm.set_probe_sink(&engine);
  vm.set_check_probe_skips(true);
  Loader loader(vm, RunKind::Probe, {}, &engine);
  auto r = loader.run_main(main_path);
  REQUIRE(r.status != ExitStatus::VmFault);
  auto facts = engine.snapshot();
  o.lines = std::move(facts.lines);
  o.branches = std::move(facts.branches);
  o.output = out.str();
  o.status = r.status == ExitStatus::Ok ? 0 : 1;
  o.skip_violations = vm.probe_skip_violations();
  o.verify_failures = engine.verify_failures().size();
  o.batches = engine.batches();
  return o;
}

Observed trace_run(const std::string& main_path) {
  Observed o;
  std::ostringstream out;
  VM vm(out);
  TraceConfig tc;
  tc.mode = TraceConfig::Mode::Collect;
  tc.path_prefix = fs::path(main_path).parent_path().string();
  vm.set_trace(tc);
  Loader loader(vm, RunKind::Trace, {});
  auto r = loader.run_main(main_path);
  REQUIRE(r.status != ExitStatus::VmFault);
  auto facts = facts_from_trace(vm.trace_store());
  o.lines = std::move(facts.lines);
  o.branches = std::move(facts.branches);
  o.output = out.str();
  o.status = r.status == ExitStatus::Ok ? 0 : 1;
  return o;
}

// the oracle names files by absolute lexically-normal path; match it
std::string canon(const std::string& p) {
  return fs::absolute(p).lexically_normal().string();
}

}  // namespace

TEST_CASE("probe mode, trace mode, and the AST oracle agree on 220 fuzz programs") {
  fs::path dir = fs::temp_directory_path() / ("decov_diff_" + std::to_string(getpid()));
  fs::create_directories(dir);
  for (uint32_t seed = 1; seed <= 220; ++seed) {
    auto src = testing::generate_program(seed);
    auto file = dir / ("s" + std::to_string(seed) + ".mini");
    std::ofstream(file) << src;
    std::string path = canon(file.string());

    auto want = testing::oracle_run(path);
    uint32_t threshold = seed % 3 == 0 ? 1 : seed % 3 == 1 ? 2 : 64;
    auto probe = probe_run(path, threshold);
    auto trace = trace_run(path);

    CAPTURE(seed);
    CAPTURE(threshold);
    // full-fidelity probe collector against the oracle
    CHECK(probe.lines == want.lines);
    CHECK(probe.branches == want.branches);
    CHECK(probe.output == want.output);
    CHECK(probe.status == want.status);
    CHECK(probe.skip_violations == 0);
    CHECK(probe.verify_failures == 0);
    // the tracing collector sees the same lines (branches differ by design:
    // arc inference misses same-line transitions)
    CHECK(trace.lines == want.lines);
    CHECK(trace.output == want.output);
    CHECK(trace.status == want.status);
  }
  fs::remove_all(dir);
}

TEST_CASE("probe mode matches the oracle on the hand-written corpus") {
  std::vector<fs::path> files;
  for (auto& e : fs::directory_iterator(DECOV_CORPUS_DIR))
    if (e.path().extension() == ".mini") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  REQUIRE(files.size() >= 30);
  for (auto& f : files) {
    std::string path = canon(f.string());
    auto want = testing::oracle_run(path);
    for (uint32_t threshold : {1u, 64u}) {
      auto probe = probe_run(path, threshold);
      CAPTURE(path);
      CAPTURE(threshold);
      CHECK(probe.lines == want.lines);
      CHECK(probe.branches == want.branches);
      CHECK(probe.output == want.output);
      CHECK(probe.status == want.status);
      CHECK(probe.skip_violations == 0);
      CHECK(probe.verify_failures == 0);
    }
    auto trace = trace_run(path);
    CHECK(trace.lines == want.lines);
    CHECK(trace.output == want.output);
  }
}

TEST_CASE("same-line branch: probes see what arc inference cannot") {
  fs::path dir = fs::temp_directory_path() / ("decov_sameline_" + std::to_string(getpid()));
  fs::create_directories(dir);
  auto file = dir / "s.mini";
  std::ofstream(file) << "x = 5\nif x > 0: x = x + 1\nprint(x)\n";
  std::string path = canon(file.string());

  auto probe = probe_run(path, 64);
  auto trace = trace_run(path);
  // the taken then-arm is a same-line branch (2,2)
  CHECK(probe.branches.count({path, 2, 2}) == 1);
  CHECK(trace.branches.count({path, 2, 2}) == 0);
  fs::remove_all(dir);
}
