// Part of decov, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#include "decov/universe.hpp"

namespace decov {
namespace {

void walk(const AstNode& n, const std::string& file, CoverableUniverse& u) {
  if (n.kind == NodeKind::BranchMarker) {
    u.branches.emplace(file, n.origin, n.dest);
  } else if (is_statement(n.kind) && !n.synthetic && n.kind != NodeKind::Module) {
    u.lines.emplace(file, n.pos.line);
    if (n.kind == NodeKind::Try && n.handler_line > 0)
      u.lines.emplace(file, n.handler_line);
  }
  for (auto& c : n.body) walk(*c, file, u);
  for (auto& c : n.orelse) walk(*c, file, u);
  for (auto& c : n.cases) walk(*c, file, u);
}

}  // namespace

CoverableUniverse enumerate_universe(const AstNode& transformed) {
  CoverableUniverse u;
  walk(transformed, transformed.pos.file, u);
  return u;
}

}  // namespace decov
