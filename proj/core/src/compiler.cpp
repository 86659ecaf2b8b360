// Part of decov, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#include "decov/compiler.hpp"

#include <unordered_map>

#include "decov/instrlist.hpp"

namespace decov {
namespace {

constexpr uint32_t kMaxConsts = (1u << 26) - 1;
const char* kBranchName = "_branch";

class FunctionCompiler {
 public:
  explicit FunctionCompiler(const std::string& source) : source_(source) {}

  CodePtr compile_function(const AstNode& node) {
    auto co = std::make_shared<CodeObject>();
    co->source = source_;
    if (node.kind == NodeKind::Module) {
      co->name = "<module>";
    } else {
      co->name = node.name;
      co->params = node.params;
    }
    cur_line_ = node.pos.line;
    block(node.body);
    // implicit return; line 0 marks it synthetic so the tracer skips it
    cur_line_ = 0;
    emit(OP_RETURN_CONST, const_index(Constant{}));
    auto res = assemble(list_);
    co->code = std::move(res.code);
    co->line_table = std::move(res.line_table);
    co->exc_table = std::move(res.exc_table);
    co->consts = std::move(consts_);
    co->names = std::move(names_);
    return co;
  }

 private:
  size_t emit(uint8_t op, uint32_t arg = 0) {
    Instr ins;
    ins.op = op;
    ins.arg = arg;
    ins.line = cur_line_;
    list_.instrs.push_back(ins);
    return list_.instrs.size() - 1;
  }

  size_t emit_jump(uint8_t op) { return emit(op, 0); }

  void patch(size_t jump_index, size_t target_index) {
    list_.instrs[jump_index].target = (int32_t)target_index;
  }

  size_t here() const { return list_.instrs.size(); }

  uint32_t const_index(const Constant& c) {
    for (size_t i = 0; i < consts_.size(); ++i)
      if (consts_[i] == c) return (uint32_t)i;
    if (consts_.size() >= kMaxConsts) throw CompileError("too many constants");
    consts_.push_back(c);
    return (uint32_t)(consts_.size() - 1);
  }

  uint32_t name_index(const std::string& n) {
    auto it = name_map_.find(n);
    if (it != name_map_.end()) return it->second;
    names_.push_back(n);
    uint32_t idx = (uint32_t)(names_.size() - 1);
    name_map_[n] = idx;
    return idx;
  }

  void block(const std::vector<AstPtr>& stmts) {
    for (auto& s : stmts) statement(*s);
  }

  void statement(const AstNode& n) {
    cur_line_ = n.pos.line;
    switch (n.kind) {
      case NodeKind::Assign:
        expr(*n.test);
        emit(OP_STORE_NAME, name_index(n.name));
        break;
      case NodeKind::ExprStmt:
        expr(*n.test);
        emit(OP_POP_TOP);
        break;
      case NodeKind::Print:
        expr(*n.test);
        emit(OP_PRINT);
        break;
      case NodeKind::Load: {
        emit(OP_LOAD_NAME, name_index("load"));
        emit(OP_LOAD_CONST, const_index(Constant{n.str_val}));
        emit(OP_CALL, 1);
        emit(OP_POP_TOP);
        break;
      }
      case NodeKind::Return:
        // range iterators of enclosing loops live on the stack; drop them so
        // every path reaching a return closes at depth 0
        for (int i = 0; i < iter_depth_; ++i) emit(OP_POP_TOP);
        if (n.test) {
          expr(*n.test);
          emit(OP_RETURN_VALUE);
        } else {
          emit(OP_RETURN_CONST, const_index(Constant{}));
        }
        break;
      case NodeKind::Raise:
        emit(OP_RAISE);
        break;
      case NodeKind::Pass:
        emit(OP_NOP, 0);
        break;
      case NodeKind::BranchMarker: {
        Constant::Tuple t{Constant{(int64_t)n.origin}, Constant{(int64_t)n.dest}};
        emit(OP_LOAD_CONST, const_index(Constant{t}));
        emit(OP_STORE_NAME, name_index(kBranchName));
        break;
      }
      case NodeKind::If: {
        expr(*n.test);
        size_t jf = emit_jump(OP_POP_JUMP_IF_FALSE);
        block(n.body);
        if (n.orelse.empty()) {
          patch(jf, here());
        } else {
          // the end jump is a synthetic join target; give it no line so a
          // chain of joins landing here records nothing
          cur_line_ = 0;
          size_t end = emit_jump(OP_JUMP_FORWARD);
          patch(jf, here());
          block(n.orelse);
          patch(end, here());
        }
        break;
      }
      case NodeKind::While: {
        size_t head = here();
        cur_line_ = n.pos.line;
        expr(*n.test);
        size_t exit_jump = emit_jump(OP_POP_JUMP_IF_FALSE);
        block(n.body);
        cur_line_ = n.pos.line;
        patch(emit_jump(OP_JUMP_BACKWARD), head);
        patch(exit_jump, here());
        block(n.orelse);
        break;
      }
      case NodeKind::ForRange: {
        expr(*n.test);
        emit(OP_GET_RANGE_ITER);
        size_t head = here();
        size_t next = emit_jump(OP_FOR_RANGE_NEXT);
        emit(OP_STORE_NAME, name_index(n.name));
        ++iter_depth_;
        block(n.body);
        --iter_depth_;
        cur_line_ = n.pos.line;
        patch(emit_jump(OP_JUMP_BACKWARD), head);
        patch(next, here());
        block(n.orelse);
        break;
      }
      case NodeKind::Match: {
        expr(*n.test);
        std::vector<size_t> end_jumps;
        bool consumed = false;
        for (auto& c : n.cases) {
          cur_line_ = c->pos.line;
          if (c->test) {
            emit(OP_MATCH_LITERAL, const_index(literal_const(*c->test)));
            size_t skip = emit_jump(OP_POP_JUMP_IF_FALSE);
            emit(OP_POP_TOP);
            block(c->body);
            cur_line_ = 0;  // synthetic join, see the if case
            end_jumps.push_back(emit_jump(OP_JUMP_FORWARD));
            patch(skip, here());
          } else {
            emit(OP_NOP, 0);  // anchors the wildcard case's line
            emit(OP_POP_TOP);
            block(c->body);
            consumed = true;
            break;  // wildcard always matches; later cases are unreachable
          }
        }
        if (!consumed) {
          cur_line_ = n.pos.line;
          emit(OP_POP_TOP);
        }
        for (size_t j : end_jumps) patch(j, here());
        break;
      }
      case NodeKind::FunctionDef: {
        FunctionCompiler sub(source_);
        CodePtr fn = sub.compile_function(n);
        emit(OP_MAKE_FUNCTION, const_index(Constant{fn}));
        emit(OP_STORE_NAME, name_index(n.name));
        break;
      }
      case NodeKind::Try: {
        size_t start = here();
        emit(OP_NOP, 0);  // anchors the try line
        block(n.body);
        size_t end = here();
        // the jump over the handler doubles as the join target for branches
        // inside the body; give it no line so landing here never reports a
        // line that did not run
        cur_line_ = 0;
        size_t over = emit_jump(OP_JUMP_FORWARD);
        size_t handler = here();
        cur_line_ = n.handler_line;
        emit(OP_NOP, 0);  // anchors the except line
        block(n.orelse);
        patch(over, here());
        list_.exc.push_back({(uint32_t)start, (uint32_t)end, (uint32_t)handler});
        break;
      }
      default:
        throw CompileError("unexpected node kind in statement position");
    }
  }

  Constant literal_const(const AstNode& n) {
    switch (n.kind) {
      case NodeKind::IntLit: return Constant{(int64_t)n.int_val};
      case NodeKind::FloatLit: return Constant{n.float_val};
      case NodeKind::StrLit: return Constant{n.str_val};
      case NodeKind::BoolLit: return Constant{n.bool_val};
      case NodeKind::NoneLit: return Constant{};
      default: throw CompileError("expected literal");
    }
  }

  void expr(const AstNode& n) {
    switch (n.kind) {
      case NodeKind::IntLit:
      case NodeKind::FloatLit:
      case NodeKind::StrLit:
      case NodeKind::BoolLit:
      case NodeKind::NoneLit:
        emit(OP_LOAD_CONST, const_index(literal_const(n)));
        break;
      case NodeKind::Name:
        emit(OP_LOAD_NAME, name_index(n.name));
        break;
      case NodeKind::Unary:
        expr(*n.children[0]);
        emit((UnOp)n.op == UnOp::Neg ? OP_UNARY_NEG : OP_UNARY_NOT);
        break;
      case NodeKind::Binary:
        expr(*n.children[0]);
        expr(*n.children[1]);
        emit(OP_BINARY_OP, (uint32_t)n.op);
        break;
      case NodeKind::Compare:
        expr(*n.children[0]);
        expr(*n.children[1]);
        emit(OP_COMPARE_OP, (uint32_t)n.op);
        break;
      case NodeKind::BoolOp: {
        // short-circuit; the result is always a bool
        bool is_and = (BoolKind)n.op == BoolKind::And;
        expr(*n.children[0]);
        if (!is_and) emit(OP_UNARY_NOT);
        size_t shortcut = emit_jump(OP_POP_JUMP_IF_FALSE);
        expr(*n.children[1]);
        emit(OP_UNARY_NOT);
        emit(OP_UNARY_NOT);  // normalize the operand to a bool
        size_t done = emit_jump(OP_JUMP_FORWARD);
        patch(shortcut, here());
        emit(OP_LOAD_CONST, const_index(Constant{!is_and}));
        patch(done, here());
        break;
      }
      case NodeKind::Call: {
        emit(OP_LOAD_NAME, name_index(n.name));
        for (auto& a : n.children) expr(*a);
        emit(OP_CALL, (uint32_t)n.children.size());
        break;
      }
      case NodeKind::TupleExpr: {
        for (auto& e : n.children) expr(*e);
        emit(OP_BUILD_TUPLE, (uint32_t)n.children.size());
        break;
      }
      default:
        throw CompileError("unexpected node kind in expression position");
    }
  }

  const std::string& source_;
  InstrList list_;
  ConstList consts_;
  std::vector<std::string> names_;
  std::unordered_map<std::string, uint32_t> name_map_;
  int cur_line_ = 1;
  int iter_depth_ = 0;  // enclosing for-loop iterators currently on the stack
};

}  // namespace

CodePtr compile(const AstNode& ast) {
  if (ast.kind != NodeKind::Module && ast.kind != NodeKind::FunctionDef)
    throw CompileError("compile() expects a Module or FunctionDef");
  FunctionCompiler fc(ast.pos.file);
  return fc.compile_function(ast);
}

}  // namespace decov
