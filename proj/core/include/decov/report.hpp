// Part of decov, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "decov/coverage.hpp"
#include "decov/universe.hpp"
#include "decov/vm.hpp"

namespace decov {

struct ReportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FileReport {
  std::vector<int> executed_lines, missing_lines;
  std::vector<std::pair<int, int>> executed_branches, missing_branches;
};

struct CoverageReport {
  std::map<std::string, FileReport> files;
  double line_percent = 100.0;    // 100·executed/universe, 0/0 counts as 100
  double branch_percent = 100.0;
};

/// Executed = facts ∩ universe, missing = universe − facts.
CoverageReport build_report(const CoverableUniverse& universe, const CoverageFacts& facts);

/// Project tracer output onto coverage facts: lines directly; a branch
/// (origin, dest) counts as executed iff the line-transition arc
/// origin→dest was observed. Same-line branches can never appear.
CoverageFacts facts_from_trace(const TraceStore& store);

// JSON schema (field names are stable):
// {"files": {path: {"executed_lines": [int], "missing_lines": [int],
//                   "executed_branches": [[int,int]], "missing_branches": [[int,int]]}},
//  "summary": {"line_percent": float, "branch_percent": float}}
std::string report_to_json(const CoverageReport& report);
CoverageReport report_from_json(const std::string& text);  // throws ReportError

std::string report_to_text(const CoverageReport& report);

/// Fact-level differences, empty iff the reports are identical.
std::vector<std::string> diff_reports(const CoverageReport& a, const CoverageReport& b);

}  // namespace decov
