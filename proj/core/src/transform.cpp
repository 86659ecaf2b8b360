// Part of decov, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#include "decov/transform.hpp"

#include <stdexcept>

namespace decov {
namespace {

bool is_branching(NodeKind k) {
  return k == NodeKind::If || k == NodeKind::While || k == NodeKind::ForRange;
}

AstPtr synthetic_pass(const SourcePosition& pos) {
  auto p = make_node(NodeKind::Pass, pos);
  p->synthetic = true;
  return p;
}

void split_in_place(AstNode& n) {
  if (is_branching(n.kind) && n.orelse.empty())
    n.orelse.push_back(synthetic_pass(n.pos));
  if (n.kind == NodeKind::Match) {
    bool has_wildcard = false;
    for (auto& c : n.cases)
      if (!c->test) has_wildcard = true;
    if (!has_wildcard) {
      auto c = make_node(NodeKind::Case, n.pos);
      c->synthetic = true;
      c->body.push_back(synthetic_pass(n.pos));
      n.cases.push_back(c);
    }
  }
  for (auto& c : n.body) split_in_place(*c);
  for (auto& c : n.orelse) split_in_place(*c);
  for (auto& c : n.cases) split_in_place(*c);
}

AstPtr marker(int origin, int dest, const SourcePosition& pos) {
  auto m = make_node(NodeKind::BranchMarker, pos);
  m->synthetic = true;
  m->origin = origin;
  m->dest = dest;
  return m;
}

// Destination line of an arm: the line of its first real statement, or the
// line following the construct for skip arms, or the construct's own line
// when the construct is in tail position.
int arm_dest(const std::vector<AstPtr>& arm, int following_line, int origin_line) {
  for (auto& s : arm)
    if (!s->synthetic) return s->pos.line;
  if (following_line > 0) return following_line;
  return origin_line;
}

void demarcate_block(std::vector<AstPtr>& stmts);

void demarcate_stmt(AstNode& n, int following_line) {
  switch (n.kind) {
    case NodeKind::If:
    case NodeKind::While:
    case NodeKind::ForRange: {
      int origin = n.pos.line;
      int then_dest = arm_dest(n.body, following_line, origin);
      int else_dest = arm_dest(n.orelse, following_line, origin);
      demarcate_block(n.body);
      demarcate_block(n.orelse);
      n.body.insert(n.body.begin(), marker(origin, then_dest, n.pos));
      n.orelse.insert(n.orelse.begin(), marker(origin, else_dest, n.pos));
      break;
    }
    case NodeKind::Match: {
      int origin = n.pos.line;
      for (auto& c : n.cases) {
        int dest = arm_dest(c->body, following_line, origin);
        demarcate_block(c->body);
        c->body.insert(c->body.begin(), marker(origin, dest, c->pos));
      }
      break;
    }
    case NodeKind::FunctionDef:
    case NodeKind::Try:
      demarcate_block(n.body);
      demarcate_block(n.orelse);
      break;
    default:
      break;
  }
}

void demarcate_block(std::vector<AstPtr>& stmts) {
  for (size_t i = 0; i < stmts.size(); ++i) {
    int following = 0;
    for (size_t j = i + 1; j < stmts.size(); ++j) {
      if (!stmts[j]->synthetic) {
        following = stmts[j]->pos.line;
        break;
      }
    }
    demarcate_stmt(*stmts[i], following);
  }
}

void check_totality(const AstNode& n) {
  auto arm_ok = [](const std::vector<AstPtr>& arm) {
    return !arm.empty() && arm.front()->kind == NodeKind::BranchMarker;
  };
  if (is_branching(n.kind)) {
    if (!arm_ok(n.body) || !arm_ok(n.orelse))
      throw std::logic_error("arm without marker at line " + std::to_string(n.pos.line));
  }
  if (n.kind == NodeKind::Match) {
    bool wildcard = false;
    for (auto& c : n.cases) {
      if (!c->test) wildcard = true;
      if (!arm_ok(c->body))
        throw std::logic_error("case arm without marker at line " + std::to_string(c->pos.line));
    }
    if (!wildcard)
      throw std::logic_error("match without wildcard at line " + std::to_string(n.pos.line));
  }
  for (auto& c : n.body) check_totality(*c);
  for (auto& c : n.orelse) check_totality(*c);
  for (auto& c : n.cases) check_totality(*c);
}

}  // namespace

AstPtr split_critical_edges(const AstNode& ast) {
  auto out = clone(ast);
  split_in_place(*out);
  return out;
}

AstPtr demarcate_branches(const AstNode& ast) {
  auto out = clone(ast);
  demarcate_block(out->body);
  return out;
}

AstPtr transform(const AstNode& ast) {
  auto split = split_critical_edges(ast);
  return demarcate_branches(*split);
}

void assert_arm_totality(const AstNode& ast) { check_totality(ast); }

}  // namespace decov
