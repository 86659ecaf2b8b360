// Part of decov, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <set>
#include <string>
#include <vector>

#include "decov/instrument.hpp"
#include "decov/universe.hpp"
#include "decov/vm.hpp"

namespace decov {

/// Facts observed at runtime; same shape as the universe so reports can
/// subtract one from the other.
struct CoverageFacts {
  std::set<std::pair<std::string, int>> lines;
  std::set<std::tuple<std::string, int, int>> branches;

  void merge(CoverageFacts&& other) {
    lines.merge(other.lines);
    branches.merge(other.branches);
  }
};

struct EngineConfig {
  uint32_t threshold = 64;  // redundant fires of one probe before a batch
  bool no_elim = false;     // keep flags/counters but never rewrite code
  bool no_deinstr = false;  // record fully on every fire, no flags at all
  bool debug_checks = false;
};

/// Reads DECOV_THRESHOLD, DECOV_NO_ELIM, DECOV_NO_DEINSTR.
EngineConfig engine_config_from_env();

/// The dynamic half of the collector. Receives probe fires, records each
/// fact once, and — once any already-covered probe has fired `threshold`
/// more times — rewrites every covered probe's NOP header into a
/// JUMP_FORWARD over the probe sequence and rebinds the VM registry so
/// future calls run the cheaper code. Active frames are left alone; a stale
/// frame firing an eliminated probe takes the counter fast path.
class CoverageEngine : public ProbeSink {
 public:
  CoverageEngine(VM& vm, EngineConfig cfg);

  /// Next free probe id; instrument new modules starting here.
  uint32_t next_probe_id() const { return (uint32_t)states_.size(); }

  void add_module(const std::string& file, CodePtr root, InstrumentationMap map);
  CodePtr module_root(const std::string& file) const;

  void fire(uint32_t probe_id) override;

  /// Force a batch now (normally triggered from fire()).
  void eliminate_batch();

  CoverageFacts snapshot() const;

  int batches() const { return batches_; }
  uint64_t fires() const { return fires_; }
  const std::vector<std::string>& verify_failures() const { return verify_failures_; }

 private:
  struct Module {
    std::string file;
    CodePtr root;
    InstrumentationMap map;
    std::vector<uint32_t> eliminated_sites;  // indices into map.sites
  };

  struct ProbeState {
    uint32_t module = 0;
    uint32_t site = 0;  // index into the module's map.sites
    uint32_t counter = 0;
    bool no_record = false;
    bool eliminated = false;
  };

  void record(const ProbeState& p);
  void rebuild_module(Module& m, const std::vector<uint32_t>& site_indices);

  VM& vm_;
  EngineConfig cfg_;
  std::vector<Module> modules_;
  std::vector<ProbeState> states_;
  std::vector<uint32_t> pending_;  // covered, not yet eliminated probe ids
  CoverageFacts known_, newly_;
  int batches_ = 0;
  uint64_t fires_ = 0;
  std::vector<std::string> verify_failures_;
};

}  // namespace decov
