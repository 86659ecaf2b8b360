// Part of decov, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <set>
#include <string>

#include "decov/ast.hpp"

namespace decov {

/// Denominators for coverage reports: every coverable line and every
/// possible branch, keyed by file.
struct CoverableUniverse {
  std::set<std::pair<std::string, int>> lines;
  std::set<std::tuple<std::string, int, int>> branches;

  void merge(const CoverableUniverse& other) {
    lines.insert(other.lines.begin(), other.lines.end());
    branches.insert(other.branches.begin(), other.branches.end());
  }
};

/// Enumerate the universe of a transformed module: lines holding at least
/// one non-synthetic statement, and the (origin, dest) of every marker.
CoverableUniverse enumerate_universe(const AstNode& transformed);

}  // namespace decov
