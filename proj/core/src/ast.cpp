// Part of decov, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#include "decov/ast.hpp"

#include <sstream>

namespace decov {

AstPtr make_node(NodeKind kind, SourcePosition pos) {
  auto n = std::make_shared<AstNode>();
  n->kind = kind;
  n->pos = std::move(pos);
  return n;
}

AstPtr clone(const AstNode& node) {
  auto n = std::make_shared<AstNode>(node);
  auto clone_list = [](std::vector<AstPtr>& v) {
    for (auto& c : v) c = clone(*c);
  };
  if (n->test) n->test = clone(*n->test);
  clone_list(n->children);
  clone_list(n->body);
  clone_list(n->orelse);
  clone_list(n->cases);
  return n;
}

bool is_statement(NodeKind k) {
  switch (k) {
    case NodeKind::Module:
    case NodeKind::FunctionDef:
    case NodeKind::If:
    case NodeKind::While:
    case NodeKind::ForRange:
    case NodeKind::Match:
    case NodeKind::Case:
    case NodeKind::Try:
    case NodeKind::Assign:
    case NodeKind::ExprStmt:
    case NodeKind::Return:
    case NodeKind::Raise:
    case NodeKind::Pass:
    case NodeKind::Print:
    case NodeKind::Load:
    case NodeKind::BranchMarker:
      return true;
    default:
      return false;
  }
}

namespace {

const char* kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::Module: return "Module";
    case NodeKind::FunctionDef: return "FunctionDef";
    case NodeKind::If: return "If";
    case NodeKind::While: return "While";
    case NodeKind::ForRange: return "ForRange";
    case NodeKind::Match: return "Match";
    case NodeKind::Case: return "Case";
    case NodeKind::Try: return "Try";
    case NodeKind::Assign: return "Assign";
    case NodeKind::ExprStmt: return "ExprStmt";
    case NodeKind::Return: return "Return";
    case NodeKind::Raise: return "Raise";
    case NodeKind::Pass: return "Pass";
    case NodeKind::Print: return "Print";
    case NodeKind::Load: return "Load";
    case NodeKind::BranchMarker: return "BranchMarker";
    case NodeKind::IntLit: return "Int";
    case NodeKind::FloatLit: return "Float";
    case NodeKind::StrLit: return "Str";
    case NodeKind::BoolLit: return "Bool";
    case NodeKind::NoneLit: return "None";
    case NodeKind::Name: return "Name";
    case NodeKind::Unary: return "Unary";
    case NodeKind::Binary: return "Binary";
    case NodeKind::Compare: return "Compare";
    case NodeKind::BoolOp: return "BoolOp";
    case NodeKind::Call: return "Call";
    case NodeKind::TupleExpr: return "Tuple";
  }
  return "?";
}

const char* op_name(const AstNode& n) {
  switch (n.kind) {
    case NodeKind::Binary:
      switch ((BinOp)n.op) {
        case BinOp::Add: return "+";
        case BinOp::Sub: return "-";
        case BinOp::Mul: return "*";
        case BinOp::Div: return "/";
        case BinOp::Mod: return "%";
      }
      break;
    case NodeKind::Compare:
      switch ((CmpOp)n.op) {
        case CmpOp::Eq: return "==";
        case CmpOp::Ne: return "!=";
        case CmpOp::Lt: return "<";
        case CmpOp::Le: return "<=";
        case CmpOp::Gt: return ">";
        case CmpOp::Ge: return ">=";
      }
      break;
    case NodeKind::Unary:
      return (UnOp)n.op == UnOp::Neg ? "-" : "not";
    case NodeKind::BoolOp:
      return (BoolKind)n.op == BoolKind::And ? "and" : "or";
    default:
      break;
  }
  return "";
}

void escape_into(std::ostream& os, const std::string& s) {
  os << '"';
  for (char c : s) {
    switch (c) {
      case '\n': os << "\\n"; break;
      case '\t': os << "\\t"; break;
      case '\\': os << "\\\\"; break;
      case '"': os << "\\\""; break;
      default: os << c;
    }
  }
  os << '"';
}

void sexpr(std::ostream& os, const AstNode& n, int indent) {
  auto pad = [&] { for (int i = 0; i < indent; ++i) os << "  "; };
  pad();
  os << '(' << kind_name(n.kind) << " :line " << n.pos.line;
  if (n.synthetic) os << " :synthetic";
  switch (n.kind) {
    case NodeKind::Name:
    case NodeKind::Assign:
    case NodeKind::FunctionDef:
    case NodeKind::ForRange:
    case NodeKind::Call:
      os << " :name " << n.name;
      break;
    case NodeKind::IntLit: os << ' ' << n.int_val; break;
    case NodeKind::FloatLit: os << ' ' << n.float_val; break;
    case NodeKind::BoolLit: os << (n.bool_val ? " True" : " False"); break;
    case NodeKind::StrLit: os << ' '; escape_into(os, n.str_val); break;
    case NodeKind::Load: os << ' '; escape_into(os, n.str_val); break;
    case NodeKind::BranchMarker:
      os << " :origin " << n.origin << " :dest " << n.dest;
      break;
    default: break;
  }
  if (const char* op = op_name(n); op[0]) os << " :op \"" << op << '"';
  if (n.kind == NodeKind::FunctionDef) {
    os << " :params (";
    for (size_t i = 0; i < n.params.size(); ++i)
      os << (i ? " " : "") << n.params[i];
    os << ')';
  }
  if (n.kind == NodeKind::Try) os << " :except-line " << n.handler_line;

  bool flat = !n.test && n.children.empty() && n.body.empty() && n.orelse.empty() &&
              n.cases.empty();
  if (flat) {
    os << ')';
    return;
  }
  auto sub = [&](const char* tag, const std::vector<AstPtr>& v) {
    if (v.empty()) return;
    os << '\n';
    pad();
    os << "  (" << tag;
    for (auto& c : v) {
      os << '\n';
      sexpr(os, *c, indent + 2);
    }
    os << ')';
  };
  if (n.test) {
    os << '\n';
    pad();
    os << "  (:test\n";
    sexpr(os, *n.test, indent + 2);
    os << ')';
  }
  sub(":args", n.children);
  sub(":body", n.body);
  sub(":else", n.orelse);
  sub(":cases", n.cases);
  os << ')';
}

}  // namespace

std::string to_sexpr(const AstNode& node) {
  std::ostringstream os;
  sexpr(os, node, 0);
  os << '\n';
  return os.str();
}

}  // namespace decov
