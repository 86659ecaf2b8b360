// Part of decov, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#include "decov/verify.hpp"

#include <deque>
#include <set>

#include "decov/instrlist.hpp"

namespace decov {
namespace {

struct Unit {
  uint32_t start;    // offset of first EXTENDED_ARG
  uint32_t base;     // offset of the base unit
  uint8_t op;
  uint32_t arg;
  uint32_t next;     // offset after the instruction
};

bool decode_units(const CodeObject& co, std::vector<Unit>& out,
                  std::vector<std::string>& violations) {
  const auto& bytes = co.code;
  if (bytes.size() % 2 != 0) {
    violations.push_back("odd code length");
    return false;
  }
  uint32_t i = 0;
  while (i < bytes.size()) {
    Unit u;
    u.start = i;
    uint32_t ext = 0;
    int n_ext = 0;
    while (i < bytes.size() && bytes[i] == OP_EXTENDED_ARG) {
      if (++n_ext > 3) {
        violations.push_back("more than three EXTENDED_ARGs at offset " +
                             std::to_string(u.start));
        return false;
      }
      ext = (ext << 8) | bytes[i + 1];
      i += 2;
    }
    if (i >= bytes.size()) {
      violations.push_back("EXTENDED_ARG chain runs off the end");
      return false;
    }
    u.base = i;
    u.op = bytes[i];
    u.arg = (ext << 8) | bytes[i + 1];
    i += 2;
    u.next = i;
    if (u.op < OP_NOP || u.op > OP_MATCH_LITERAL) {
      violations.push_back("unknown opcode " + std::to_string(u.op) + " at offset " +
                           std::to_string(u.base));
      return false;
    }
    out.push_back(u);
  }
  return true;
}

// net stack effect; jumps handled separately
int stack_effect(uint8_t op, uint32_t arg) {
  switch (op) {
    case OP_NOP:
    case OP_EXTENDED_ARG:
    case OP_JUMP_FORWARD:
    case OP_JUMP_BACKWARD:
    case OP_UNARY_NEG:
    case OP_UNARY_NOT:
    case OP_GET_RANGE_ITER:
    case OP_RAISE:
    case OP_PROBE:
    case OP_RETURN_CONST:
      return 0;
    case OP_LOAD_CONST:
    case OP_LOAD_NAME:
    case OP_MAKE_FUNCTION:
    case OP_MATCH_LITERAL:
      return 1;
    case OP_STORE_NAME:
    case OP_POP_TOP:
    case OP_BINARY_OP:
    case OP_COMPARE_OP:
    case OP_POP_JUMP_IF_FALSE:
    case OP_PRINT:
    case OP_RETURN_VALUE:
      return -1;
    case OP_BUILD_TUPLE:
      return 1 - (int)arg;
    case OP_CALL:
      return -(int)arg;
    case OP_FOR_RANGE_NEXT:
      return 1;  // fall-through; the exhaust edge is -1
    default:
      return 0;
  }
}

}  // namespace

std::vector<int> stack_depths(const CodeObject& code) {
  std::vector<std::string> ignored;
  std::vector<Unit> units;
  std::vector<int> depths(code.code.size() / 2, -1);
  if (!decode_units(code, units, ignored)) return depths;

  std::set<uint32_t> starts;
  std::vector<size_t> start_to_idx(code.code.size() / 2 + 1, SIZE_MAX);
  for (size_t k = 0; k < units.size(); ++k) {
    starts.insert(units[k].start);
    start_to_idx[units[k].start / 2] = k;
  }

  std::deque<std::pair<uint32_t, int>> work;  // (instruction start, depth)
  work.push_back({0, 0});
  auto push_edge = [&](uint32_t off, int depth) { work.push_back({off, depth}); };

  while (!work.empty()) {
    auto [off, depth] = work.front();
    work.pop_front();
    if (off == code.code.size()) continue;  // falls off the end: module tail
    if (off / 2 >= start_to_idx.size() || start_to_idx[off / 2] == SIZE_MAX) continue;
    size_t k = start_to_idx[off / 2];
    if (depths[off / 2] != -1) continue;  // already visited (consistency checked in verify)
    depths[off / 2] = depth;
    const Unit& u = units[k];
    int after = depth + stack_effect(u.op, u.arg);
    switch (u.op) {
      case OP_RETURN_VALUE:
      case OP_RETURN_CONST:
      case OP_RAISE:
        break;
      case OP_JUMP_FORWARD:
        push_edge(u.next + 2 * u.arg, after);
        break;
      case OP_JUMP_BACKWARD:
        push_edge(u.next - 2 * u.arg, after);
        break;
      case OP_POP_JUMP_IF_FALSE:
        push_edge(u.next + 2 * u.arg, after);
        push_edge(u.next, after);
        break;
      case OP_FOR_RANGE_NEXT:
        push_edge(u.next + 2 * u.arg, depth - 1);  // exhaust pops the iterator
        push_edge(u.next, depth + 1);
        break;
      default:
        push_edge(u.next, after);
    }
  }
  // seed exception handlers with the depth at their range start
  bool progressed = true;
  while (progressed) {
    progressed = false;
    for (auto& e : code.exc_table) {
      if (e.start / 2 < depths.size() && depths[e.start / 2] >= 0 &&
          e.handler / 2 < depths.size() && depths[e.handler / 2] == -1) {
        work.push_back({e.handler, depths[e.start / 2]});
        progressed = true;
        while (!work.empty()) {
          auto [off, depth] = work.front();
          work.pop_front();
          if (off >= code.code.size()) continue;
          if (start_to_idx[off / 2] == SIZE_MAX) continue;
          if (depths[off / 2] != -1) continue;
          depths[off / 2] = depth;
          const Unit& u = units[start_to_idx[off / 2]];
          int after = depth + stack_effect(u.op, u.arg);
          switch (u.op) {
            case OP_RETURN_VALUE:
            case OP_RETURN_CONST:
            case OP_RAISE:
              break;
            case OP_JUMP_FORWARD:
              work.push_back({u.next + 2 * u.arg, after});
              break;
            case OP_JUMP_BACKWARD:
              work.push_back({u.next - 2 * u.arg, after});
              break;
            case OP_POP_JUMP_IF_FALSE:
              work.push_back({u.next + 2 * u.arg, after});
              work.push_back({u.next, after});
              break;
            case OP_FOR_RANGE_NEXT:
              work.push_back({u.next + 2 * u.arg, depth - 1});
              work.push_back({u.next, depth + 1});
              break;
            default:
              work.push_back({u.next, after});
          }
        }
      }
    }
  }
  return depths;
}

VerifyResult verify(const CodeObject& code, const ProbeSpans& spans) {
  VerifyResult res;
  auto& v = res.violations;

  std::vector<Unit> units;
  if (!decode_units(code, units, v)) return res;

  std::set<uint32_t> boundaries;
  for (auto& u : units) boundaries.insert(u.start);
  boundaries.insert((uint32_t)code.code.size());

  auto check_target = [&](uint32_t target, uint32_t from) {
    if (!boundaries.count(target)) {
      v.push_back("jump target " + std::to_string(target) + " from offset " +
                  std::to_string(from) + " not on an instruction boundary");
      return;
    }
    for (auto& s : spans)
      if (target > s.first && target < s.second)
        v.push_back("jump from offset " + std::to_string(from) +
                    " lands inside probe sequence at " + std::to_string(s.first));
  };

  for (auto& u : units) {
    if (op_is_forward_jump(u.op)) {
      uint32_t t = u.next + 2 * u.arg;
      if (t > code.code.size())
        v.push_back("forward jump past end at offset " + std::to_string(u.base));
      else
        check_target(t, u.base);
    } else if (op_is_backward_jump(u.op)) {
      if (2 * u.arg > u.next)
        v.push_back("backward jump before start at offset " + std::to_string(u.base));
      else
        check_target(u.next - 2 * u.arg, u.base);
    }
    if (u.op == OP_LOAD_CONST || u.op == OP_RETURN_CONST || u.op == OP_MAKE_FUNCTION ||
        u.op == OP_MATCH_LITERAL || u.op == OP_PROBE) {
      if (u.arg >= code.consts.size())
        v.push_back("constant index out of range at offset " + std::to_string(u.base));
    }
    if (u.op == OP_LOAD_NAME || u.op == OP_STORE_NAME) {
      if (u.arg >= code.names.size())
        v.push_back("name index out of range at offset " + std::to_string(u.base));
    }
  }

  uint32_t prev = 0;
  bool first = true;
  for (auto& e : code.line_table) {
    if (!first && e.offset <= prev)
      v.push_back("line table offsets not strictly increasing at " +
                  std::to_string(e.offset));
    prev = e.offset;
    first = false;
    if (e.offset > code.code.size())
      v.push_back("line table offset past end: " + std::to_string(e.offset));
  }

  for (auto& e : code.exc_table) {
    if (!(e.start < e.end && e.end <= code.code.size()))
      v.push_back("malformed exception range " + std::to_string(e.start) + ".." +
                  std::to_string(e.end));
    if (!boundaries.count(e.handler))
      v.push_back("exception handler " + std::to_string(e.handler) +
                  " not on an instruction boundary");
  }

  // depth simulation: consistent depths, closing at 0 on returns
  auto depths = stack_depths(code);
  for (auto& u : units) {
    int d = depths[u.start / 2];
    if (d < 0) continue;  // unreachable
    if (u.op == OP_RETURN_VALUE && d != 1)
      v.push_back("RETURN_VALUE at offset " + std::to_string(u.base) + " with depth " +
                  std::to_string(d));
    if (u.op == OP_RETURN_CONST && d != 0)
      v.push_back("RETURN_CONST at offset " + std::to_string(u.base) + " with depth " +
                  std::to_string(d));
    int after = d + stack_effect(u.op, u.arg);
    if (after < 0 ||
        (u.op == OP_FOR_RANGE_NEXT && d < 1) ||
        (stack_effect(u.op, u.arg) < 0 && d < -stack_effect(u.op, u.arg)))
      v.push_back("stack underflow at offset " + std::to_string(u.base));
    // successor consistency
    auto check_succ = [&](uint32_t off, int depth) {
      if (off >= code.code.size()) return;
      int d2 = depths[off / 2];
      if (d2 >= 0 && d2 != depth)
        v.push_back("inconsistent stack depth at offset " + std::to_string(off));
    };
    switch (u.op) {
      case OP_RETURN_VALUE:
      case OP_RETURN_CONST:
      case OP_RAISE:
        break;
      case OP_JUMP_FORWARD:
        check_succ(u.next + 2 * u.arg, after);
        break;
      case OP_JUMP_BACKWARD:
        if (2 * u.arg <= u.next) check_succ(u.next - 2 * u.arg, after);
        break;
      case OP_POP_JUMP_IF_FALSE:
        check_succ(u.next + 2 * u.arg, after);
        check_succ(u.next, after);
        break;
      case OP_FOR_RANGE_NEXT:
        check_succ(u.next + 2 * u.arg, d - 1);
        check_succ(u.next, d + 1);
        break;
      default:
        check_succ(u.next, after);
    }
  }

  // recurse into nested code objects
  for (size_t i = 0; i < code.consts.size(); ++i) {
    if (auto* p = std::get_if<CodePtr>(&code.consts[i].v)) {
      auto sub = verify(**p);
      for (auto& s : sub.violations)
        v.push_back(code.name + ".consts[" + std::to_string(i) + "]: " + s);
    }
  }
  return res;
}

}  // namespace decov
