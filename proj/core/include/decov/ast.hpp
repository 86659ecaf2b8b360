// Part of decov, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <vector>

namespace decov {

struct SourcePosition {
  std::string file;
  int line = 1;  // 1-based physical line
};

enum class NodeKind {
  Module,
  FunctionDef,
  If,
  While,
  ForRange,
  Match,
  Case,
  Try,
  Assign,
  ExprStmt,
  Return,
  Raise,
  Pass,
  Print,
  Load,
  BranchMarker,
  // expressions
  IntLit,
  FloatLit,
  StrLit,
  BoolLit,
  NoneLit,
  Name,
  Unary,
  Binary,
  Compare,
  BoolOp,
  Call,
  TupleExpr,
};

enum class BinOp { Add, Sub, Mul, Div, Mod };
enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };
enum class UnOp { Neg, Not };
enum class BoolKind { And, Or };

struct AstNode;
using AstPtr = std::shared_ptr<AstNode>;

/// One syntax tree node. A single struct covers all kinds; which fields are
/// meaningful depends on `kind`.
struct AstNode {
  NodeKind kind;
  SourcePosition pos;
  bool synthetic = false;  // inserted by the branch transform, never by the parser

  std::string name;     // Name, Assign target, FunctionDef, ForRange variable
  long long int_val = 0;
  double float_val = 0.0;
  std::string str_val;  // StrLit, Load path
  bool bool_val = false;

  int op = 0;  // BinOp/CmpOp/UnOp/BoolKind, depending on kind

  AstPtr test;                  // condition, match subject, case pattern (null = wildcard),
                                // return value (optional), assign value, expr payload
  std::vector<AstPtr> children; // expression operands / call arguments
  std::vector<AstPtr> body;     // statement block
  std::vector<AstPtr> orelse;   // else arm / except block (Try)
  std::vector<AstPtr> cases;    // Match: Case nodes
  std::vector<std::string> params;  // FunctionDef

  int handler_line = 0;  // Try: line of the `except` keyword

  // BranchMarker payload
  int origin = 0;
  int dest = 0;
};

AstPtr make_node(NodeKind kind, SourcePosition pos);

/// Structural deep copy.
AstPtr clone(const AstNode& node);

bool is_statement(NodeKind k);

/// Stable s-expression rendering, used by `decov dump-ast` and golden tests.
std::string to_sexpr(const AstNode& node);

}  // namespace decov
