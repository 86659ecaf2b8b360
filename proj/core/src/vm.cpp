// Part of decov, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#include "decov/vm.hpp"

#include <cmath>
#include <ostream>

#include "decov/ast.hpp"
#include "decov/verify.hpp"

namespace decov {

namespace {

constexpr size_t kMaxFrames = 200;

struct Frame {
  CodePtr keep;  // keeps the object alive even if the registry is rebound
  const CodeObject* co = nullptr;
  uint32_t pc = 0;
  uint32_t call_instr = 0;  // offset of the CALL while a callee runs
  int cur_line = -1;
  bool is_module = false;
  std::vector<Value> stack;
  std::vector<Value> locals;  // indexed by name index; modules use globals
  std::vector<char> bound;
};

bool as_number(const Value& v, double& out) {
  if (auto* i = std::get_if<int64_t>(&v.v)) { out = (double)*i; return true; }
  if (auto* d = std::get_if<double>(&v.v)) { out = *d; return true; }
  return false;
}

// Arithmetic: int op int stays integral (Div truncates toward zero), any
// double operand promotes, Add concatenates strings. Anything else — and
// division or modulo by zero — reports failure, which the caller raises.
bool apply_binary(BinOp op, const Value& a, const Value& b, Value& out) {
  auto* ia = std::get_if<int64_t>(&a.v);
  auto* ib = std::get_if<int64_t>(&b.v);
  if (ia && ib) {
    uint64_t x = (uint64_t)*ia, y = (uint64_t)*ib;
    switch (op) {
      case BinOp::Add: out = Value{(int64_t)(x + y)}; return true;
      case BinOp::Sub: out = Value{(int64_t)(x - y)}; return true;
      case BinOp::Mul: out = Value{(int64_t)(x * y)}; return true;
      case BinOp::Div:
        if (*ib == 0) return false;
        if (*ia == INT64_MIN && *ib == -1) { out = Value{*ia}; return true; }
        out = Value{*ia / *ib};
        return true;
      case BinOp::Mod:
        if (*ib == 0) return false;
        if (*ia == INT64_MIN && *ib == -1) { out = Value{(int64_t)0}; return true; }
        out = Value{*ia % *ib};
        return true;
    }
    return false;
  }
  double x, y;
  if (as_number(a, x) && as_number(b, y)) {
    switch (op) {
      case BinOp::Add: out = Value{x + y}; return true;
      case BinOp::Sub: out = Value{x - y}; return true;
      case BinOp::Mul: out = Value{x * y}; return true;
      case BinOp::Div:
        if (y == 0.0) return false;
        out = Value{x / y};
        return true;
      case BinOp::Mod:
        if (y == 0.0) return false;
        out = Value{std::fmod(x, y)};
        return true;
    }
    return false;
  }
  if (op == BinOp::Add) {
    auto* sa = std::get_if<std::string>(&a.v);
    auto* sb = std::get_if<std::string>(&b.v);
    if (sa && sb) { out = Value{*sa + *sb}; return true; }
  }
  return false;
}

// Eq/Ne work on everything; ordering only on numbers and on string pairs.
bool apply_compare(CmpOp op, const Value& a, const Value& b, Value& out) {
  if (op == CmpOp::Eq) { out = Value{value_equal(a, b)}; return true; }
  if (op == CmpOp::Ne) { out = Value{!value_equal(a, b)}; return true; }
  int sign;  // -1, 0, 1
  auto* sa = std::get_if<std::string>(&a.v);
  auto* sb = std::get_if<std::string>(&b.v);
  if (sa && sb) {
    int c = sa->compare(*sb);
    sign = c < 0 ? -1 : c > 0 ? 1 : 0;
  } else {
    auto* ia = std::get_if<int64_t>(&a.v);
    auto* ib = std::get_if<int64_t>(&b.v);
    if (ia && ib) {
      sign = *ia < *ib ? -1 : *ia > *ib ? 1 : 0;
    } else {
      double x, y;
      if (!as_number(a, x) || !as_number(b, y)) return false;
      sign = x < y ? -1 : x > y ? 1 : 0;
    }
  }
  switch (op) {
    case CmpOp::Lt: out = Value{sign < 0}; break;
    case CmpOp::Le: out = Value{sign <= 0}; break;
    case CmpOp::Gt: out = Value{sign > 0}; break;
    case CmpOp::Ge: out = Value{sign >= 0}; break;
    default: return false;
  }
  return true;
}

}  // namespace

/// One run() activation. Keeps its own frame stack so native builtins can
/// reenter the VM (the `load` builtin executes module bodies this way).
class Interp {
 public:
  explicit Interp(VM& vm) : vm_(vm) {}

  RunResult run(CodePtr root) {
    push_frame(std::move(root), true, nullptr, 0);
    try {
      loop();
    } catch (const VmFaultError& e) {
      return {ExitStatus::VmFault, e.message};
    }
    return {uncaught_ ? ExitStatus::UncaughtException : ExitStatus::Ok, {}};
  }

 private:
  VM& vm_;
  std::vector<Frame> frames_;
  bool uncaught_ = false;

  [[noreturn]] void fault(const Frame& f, uint32_t at, const std::string& what) {
    throw VmFaultError{f.co->name + "+" + std::to_string(at) + ": " + what};
  }

  void push_frame(CodePtr code, bool is_module, Value* args, size_t nargs) {
    Frame fr;
    fr.keep = std::move(code);
    fr.co = fr.keep.get();
    fr.is_module = is_module;
    if (!is_module) {
      auto& cache = vm_.cache_for(fr.co);
      fr.locals.resize(fr.co->names.size());
      fr.bound.assign(fr.co->names.size(), 0);
      for (size_t i = 0; i < nargs; ++i) {
        int slot = cache.param_slots[i];
        if (slot >= 0) {
          fr.locals[slot] = std::move(args[i]);
          fr.bound[slot] = 1;
        }
      }
    } else {
      vm_.cache_for(fr.co);
    }
    frames_.push_back(std::move(fr));
  }

  // kept out of line so the per-transition cost is a real call + prefix scan
  __attribute__((noinline)) void trace_hit(VM::CodeCache* cache, const CodeObject* co,
                                           int prev, int line) {
    const std::string& src = co->source;
    const std::string& prefix = vm_.trace_.path_prefix;
    if (src.compare(0, prefix.size(), prefix) != 0) return;
    if (vm_.trace_.mode != TraceConfig::Mode::Collect) return;
    VM::FileTrace* ft = cache->trace;
    if (!ft) ft = cache->trace = &vm_.file_trace_[src];
    if ((size_t)line >= ft->lines.size()) ft->lines.resize((size_t)line + 1, 0);
    ft->lines[(size_t)line] = 1;
    if (prev > 0) ft->arcs.insert(((uint64_t)(uint32_t)prev << 32) | (uint32_t)line);
  }

  // Unwind after a raise at byte offset `at` of the innermost frame. Leaves
  // the machine at the matching handler, or empties the frame stack.
  bool unwind(uint32_t at) {
    for (;;) {
      Frame& fr = frames_.back();
      const ExcEntry* found = nullptr;
      for (auto& e : fr.co->exc_table) {
        if (e.start <= at && at < e.end) { found = &e; break; }
      }
      if (found) {
        auto& cache = vm_.cache_for(fr.co);
        if (cache.depths.empty()) cache.depths = stack_depths(*fr.co);
        int depth = cache.depths[found->handler >> 1];
        if (depth < 0 || (size_t)depth > fr.stack.size())
          fault(fr, at, "handler entry depth mismatch");
        fr.stack.resize(depth);
        fr.pc = found->handler;
        return true;
      }
      frames_.pop_back();
      if (frames_.empty()) {
        uncaught_ = true;
        return false;
      }
      at = frames_.back().call_instr;
    }
  }

  void loop() {
    const bool tracing = vm_.trace_.mode != TraceConfig::Mode::Off;
    Frame* f = &frames_.back();
    VM::CodeCache* cc = &vm_.cache_for(f->co);
    const uint8_t* bc = f->co->code.data();
    size_t len = f->co->code.size();
    const int* unit_lines = cc->unit_lines.data();

    auto reload = [&] {
      f = &frames_.back();
      cc = &vm_.cache_for(f->co);
      bc = f->co->code.data();
      len = f->co->code.size();
      unit_lines = cc->unit_lines.data();
    };
    // `raise` and every runtime error funnel through here
    auto raise_at = [&](uint32_t at) {
      if (!unwind(at)) return false;
      reload();
      return true;
    };

    for (;;) {
      uint32_t instr_start = f->pc;
      if (instr_start + 1 >= len) fault(*f, instr_start, "execution fell off the end");
      if (tracing) {
        int line = unit_lines[instr_start >> 1];
        if (line != f->cur_line && line > 0) {
          trace_hit(cc, f->co, f->cur_line, line);
          f->cur_line = line;
        }
      }
      uint8_t op = bc[f->pc];
      uint32_t arg = bc[f->pc + 1];
      f->pc += 2;
      while (op == OP_EXTENDED_ARG) {
        if (f->pc + 1 >= len) fault(*f, instr_start, "truncated EXTENDED_ARG chain");
        op = bc[f->pc];
        arg = (arg << 8) | bc[f->pc + 1];
        f->pc += 2;
      }

      switch (op) {
        case OP_NOP:
          break;
        case OP_LOAD_CONST:
          if (arg >= f->co->consts.size()) fault(*f, instr_start, "const index out of range");
          f->stack.push_back(constant_to_value(f->co->consts[arg]));
          break;
        case OP_LOAD_NAME: {
          if (arg >= f->co->names.size()) fault(*f, instr_start, "name index out of range");
          if (!f->is_module && f->bound[arg]) {
            f->stack.push_back(f->locals[arg]);
            break;
          }
          auto it = vm_.globals_.find(f->co->names[arg]);
          if (it == vm_.globals_.end()) {
            if (!raise_at(instr_start)) return;  // undefined name
            break;
          }
          f->stack.push_back(it->second);
          break;
        }
        case OP_STORE_NAME: {
          if (arg >= f->co->names.size()) fault(*f, instr_start, "name index out of range");
          if (f->stack.empty()) fault(*f, instr_start, "stack underflow");
          if (f->is_module)
            vm_.globals_[f->co->names[arg]] = std::move(f->stack.back());
          else {
            f->locals[arg] = std::move(f->stack.back());
            f->bound[arg] = 1;
          }
          f->stack.pop_back();
          break;
        }
        case OP_POP_TOP:
          if (f->stack.empty()) fault(*f, instr_start, "stack underflow");
          f->stack.pop_back();
          break;
        case OP_UNARY_NEG: {
          if (f->stack.empty()) fault(*f, instr_start, "stack underflow");
          Value& top = f->stack.back();
          if (auto* i = std::get_if<int64_t>(&top.v))
            top = Value{(int64_t)(0 - (uint64_t)*i)};
          else if (auto* d = std::get_if<double>(&top.v))
            top = Value{-*d};
          else if (!raise_at(instr_start))
            return;
          break;
        }
        case OP_UNARY_NOT: {
          if (f->stack.empty()) fault(*f, instr_start, "stack underflow");
          Value& top = f->stack.back();
          top = Value{!value_truthy(top)};
          break;
        }
        case OP_BINARY_OP: {
          if (f->stack.size() < 2) fault(*f, instr_start, "stack underflow");
          Value b = std::move(f->stack.back());
          f->stack.pop_back();
          Value out;
          if (!apply_binary((BinOp)arg, f->stack.back(), b, out)) {
            if (!raise_at(instr_start)) return;
            break;
          }
          f->stack.back() = std::move(out);
          break;
        }
        case OP_COMPARE_OP: {
          if (f->stack.size() < 2) fault(*f, instr_start, "stack underflow");
          Value b = std::move(f->stack.back());
          f->stack.pop_back();
          Value out;
          if (!apply_compare((CmpOp)arg, f->stack.back(), b, out)) {
            if (!raise_at(instr_start)) return;
            break;
          }
          f->stack.back() = std::move(out);
          break;
        }
        case OP_BUILD_TUPLE: {
          if (f->stack.size() < arg) fault(*f, instr_start, "stack underflow");
          auto vec = std::make_shared<std::vector<Value>>();
          vec->reserve(arg);
          for (size_t i = f->stack.size() - arg; i < f->stack.size(); ++i)
            vec->push_back(std::move(f->stack[i]));
          f->stack.resize(f->stack.size() - arg);
          f->stack.push_back(Value{std::move(vec)});
          break;
        }
        case OP_JUMP_FORWARD: {
          if (vm_.check_skips_) {
            auto it = vm_.skip_expect_.find(f->co);
            if (it != vm_.skip_expect_.end()) {
              auto jt = it->second.find(instr_start);
              if (jt != it->second.end() && jt->second != f->pc + 2 * arg)
                ++vm_.skip_violations_;
            }
          }
          f->pc += 2 * arg;
          break;
        }
        case OP_JUMP_BACKWARD:
          f->pc -= 2 * arg;
          break;
        case OP_POP_JUMP_IF_FALSE: {
          if (f->stack.empty()) fault(*f, instr_start, "stack underflow");
          bool t = value_truthy(f->stack.back());
          f->stack.pop_back();
          if (!t) f->pc += 2 * arg;
          break;
        }
        case OP_CALL: {
          size_t n = arg;
          if (f->stack.size() < n + 1) fault(*f, instr_start, "stack underflow");
          size_t base = f->stack.size() - n - 1;
          auto* ref = std::get_if<FuncRef>(&f->stack[base].v);
          if (!ref) {
            if (!raise_at(instr_start)) return;  // not callable
            break;
          }
          if (ref->registry_id >= vm_.registry_.size())
            fault(*f, instr_start, "dangling function reference");
          VM::RegistryEntry& entry = vm_.registry_[ref->registry_id];
          if (entry.native) {
            std::vector<Value> args(std::make_move_iterator(f->stack.begin() + base + 1),
                                    std::make_move_iterator(f->stack.end()));
            f->stack.resize(base);
            Value result;
            try {
              result = entry.native(vm_, args);
            } catch (const MiniRaise&) {
              if (!raise_at(instr_start)) return;
              break;
            }
            f->stack.push_back(std::move(result));
            break;
          }
          CodePtr callee = entry.code;  // snapshot: rebinds affect later calls
          if (!callee) fault(*f, instr_start, "empty registry entry");
          if (callee->params.size() != n || frames_.size() >= kMaxFrames) {
            if (!raise_at(instr_start)) return;  // arity error / recursion limit
            break;
          }
          f->call_instr = instr_start;
          push_frame(std::move(callee), false, f->stack.data() + base + 1, n);
          // drop callee+args from the caller now that params are bound
          frames_[frames_.size() - 2].stack.resize(base);
          reload();
          break;
        }
        case OP_MAKE_FUNCTION: {
          if (arg >= f->co->consts.size()) fault(*f, instr_start, "const index out of range");
          auto* code = std::get_if<CodePtr>(&f->co->consts[arg].v);
          if (!code) fault(*f, instr_start, "MAKE_FUNCTION on non-code constant");
          f->stack.push_back(Value{FuncRef{vm_.function_id(*code)}});
          break;
        }
        case OP_RETURN_VALUE:
        case OP_RETURN_CONST: {
          Value result;
          if (op == OP_RETURN_VALUE) {
            if (f->stack.empty()) fault(*f, instr_start, "stack underflow");
            result = std::move(f->stack.back());
          } else {
            if (arg >= f->co->consts.size())
              fault(*f, instr_start, "const index out of range");
            result = constant_to_value(f->co->consts[arg]);
          }
          frames_.pop_back();
          if (frames_.empty()) return;
          frames_.back().stack.push_back(std::move(result));
          reload();
          break;
        }
        case OP_RAISE:
          if (!raise_at(instr_start)) return;
          break;
        case OP_PROBE: {
          if (arg >= f->co->consts.size()) fault(*f, instr_start, "const index out of range");
          auto* h = std::get_if<ProbeHandle>(&f->co->consts[arg].v);
          if (!h) fault(*f, instr_start, "PROBE on non-probe constant");
          if (vm_.sink_) vm_.sink_->fire(h->probe_id);
          break;
        }
        case OP_PRINT: {
          if (f->stack.empty()) fault(*f, instr_start, "stack underflow");
          vm_.out_ << format_value(f->stack.back()) << '\n';
          vm_.out_.flush();
          f->stack.pop_back();
          break;
        }
        case OP_GET_RANGE_ITER: {
          if (f->stack.empty()) fault(*f, instr_start, "stack underflow");
          auto* i = std::get_if<int64_t>(&f->stack.back().v);
          if (!i) {
            if (!raise_at(instr_start)) return;  // range bound must be an int
            break;
          }
          f->stack.back() = Value{RangeIter{0, *i}};
          break;
        }
        case OP_FOR_RANGE_NEXT: {
          if (f->stack.empty()) fault(*f, instr_start, "stack underflow");
          auto* it = std::get_if<RangeIter>(&f->stack.back().v);
          if (!it) fault(*f, instr_start, "FOR_RANGE_NEXT without iterator");
          if (it->cur >= it->stop) {
            f->stack.pop_back();
            f->pc += 2 * arg;
          } else {
            f->stack.push_back(Value{it->cur++});
          }
          break;
        }
        case OP_MATCH_LITERAL: {
          if (f->stack.empty()) fault(*f, instr_start, "stack underflow");
          if (arg >= f->co->consts.size()) fault(*f, instr_start, "const index out of range");
          f->stack.push_back(
              Value{value_equal(f->stack.back(), constant_to_value(f->co->consts[arg]))});
          break;
        }
        default:
          fault(*f, instr_start, std::string("bad opcode ") + std::to_string(op));
      }
    }
  }
};

VM::VM(std::ostream& out) : out_(out) {}

void VM::register_builtin(const std::string& name, NativeFn fn) {
  uint32_t id = (uint32_t)registry_.size();
  registry_.push_back({nullptr, std::move(fn), name});
  globals_[name] = Value{FuncRef{id}};
}

RunResult VM::run(CodePtr root) {
  Interp interp(*this);
  return interp.run(std::move(root));
}

TraceStore VM::trace_store() const {
  TraceStore store;
  for (auto& [file, ft] : file_trace_) {
    for (size_t l = 0; l < ft.lines.size(); ++l)
      if (ft.lines[l]) store.lines.insert({file, (int)l});
    for (uint64_t packed : ft.arcs)
      store.arcs.insert({file, (int)(packed >> 32), (int)(uint32_t)packed});
  }
  return store;
}

void VM::rebind(uint32_t registry_id, CodePtr new_code) {
  RegistryEntry& e = registry_.at(registry_id);
  registry_ids_[new_code.get()] = registry_id;  // old key stays mapped too
  e.code = std::move(new_code);
}

void VM::rebind_all(const std::unordered_map<const CodeObject*, CodePtr>& old_to_new) {
  for (uint32_t id = 0; id < registry_.size(); ++id) {
    RegistryEntry& e = registry_[id];
    if (!e.code) continue;
    auto it = old_to_new.find(e.code.get());
    if (it != old_to_new.end()) rebind(id, it->second);
  }
}

const Value* VM::global(const std::string& name) const {
  auto it = globals_.find(name);
  return it == globals_.end() ? nullptr : &it->second;
}

void VM::expect_probe_skip(const CodeObject* code, uint32_t jump_offset,
                           uint32_t expected_next) {
  skip_expect_[code][jump_offset] = expected_next;
}

VM::CodeCache& VM::cache_for(const CodeObject* co) {
  auto it = cache_.find(co);
  if (it != cache_.end()) return it->second;
  CodeCache cache;
  size_t units = co->code.size() / 2;
  cache.unit_lines.assign(units, 0);
  size_t entry = 0;
  int line = 0;
  for (size_t u = 0; u < units; ++u) {
    while (entry < co->line_table.size() && co->line_table[entry].offset <= u * 2)
      line = co->line_table[entry++].line;
    cache.unit_lines[u] = line;
  }
  cache.param_slots.reserve(co->params.size());
  for (auto& p : co->params) {
    int slot = -1;
    for (size_t i = 0; i < co->names.size(); ++i)
      if (co->names[i] == p) { slot = (int)i; break; }
    cache.param_slots.push_back(slot);
  }
  return cache_.emplace(co, std::move(cache)).first->second;
}

uint32_t VM::function_id(CodePtr code) {
  auto it = registry_ids_.find(code.get());
  if (it != registry_ids_.end()) return it->second;
  uint32_t id = (uint32_t)registry_.size();
  registry_ids_[code.get()] = id;
  std::string name = code->name;
  registry_.push_back({std::move(code), nullptr, std::move(name)});
  return id;
}

}  // namespace decov
