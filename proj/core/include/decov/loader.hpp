// Part of decov, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "decov/coverage.hpp"
#include "decov/instrument.hpp"
#include "decov/universe.hpp"
#include "decov/vm.hpp"

namespace decov {

struct LoadError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// How modules are prepared for execution.
enum class RunKind {
  Plain,  // transform, compile, strip markers; no collection
  Trace,  // compile the untransformed tree; the line tracer collects
  Probe,  // transform, compile, instrument; the coverage engine collects
};

struct LoadPolicy {
  std::vector<std::string> include_prefixes;  // default: main file's directory
  InstrumentMode mode = InstrumentMode::LineAndBranch;
};

/// Prepares and executes modules, instrumenting those whose absolute path
/// matches an include prefix. Registers a `load` builtin so Mini programs
/// can pull in other files at runtime; preparation (the whole static phase)
/// happens while execution is suspended inside that call. Each absolute
/// path is prepared once and executed once per process.
class Loader {
 public:
  Loader(VM& vm, RunKind kind, LoadPolicy policy, CoverageEngine* engine = nullptr);

  /// Prepare `path` and run it as the program entry point.
  RunResult run_main(const std::string& path);

  /// Universe of every included module prepared so far.
  const CoverableUniverse& universe() const { return universe_; }

 private:
  CodePtr prepare(const std::string& abs);
  RunResult execute(const std::string& abs, CodePtr root);
  std::string resolve(const std::string& path) const;
  bool included(const std::string& abs) const;

  VM& vm_;
  RunKind kind_;
  LoadPolicy policy_;
  CoverageEngine* engine_;
  std::string base_dir_;  // relative load() targets resolve against this
  std::unordered_map<std::string, CodePtr> cache_;
  std::unordered_set<std::string> executed_;
  std::vector<std::string> executing_;  // for cycle diagnostics
  CoverableUniverse universe_;
};

}  // namespace decov
