// Part of decov, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#include "decov/instrlist.hpp"

#include <algorithm>
#include <unordered_map>

namespace decov {

const char* op_name(uint8_t op) {
  switch (op) {
    case OP_NOP: return "NOP";
    case OP_EXTENDED_ARG: return "EXTENDED_ARG";
    case OP_LOAD_CONST: return "LOAD_CONST";
    case OP_LOAD_NAME: return "LOAD_NAME";
    case OP_STORE_NAME: return "STORE_NAME";
    case OP_POP_TOP: return "POP_TOP";
    case OP_UNARY_NEG: return "UNARY_NEG";
    case OP_UNARY_NOT: return "UNARY_NOT";
    case OP_BINARY_OP: return "BINARY_OP";
    case OP_COMPARE_OP: return "COMPARE_OP";
    case OP_BUILD_TUPLE: return "BUILD_TUPLE";
    case OP_JUMP_FORWARD: return "JUMP_FORWARD";
    case OP_JUMP_BACKWARD: return "JUMP_BACKWARD";
    case OP_POP_JUMP_IF_FALSE: return "POP_JUMP_IF_FALSE";
    case OP_CALL: return "CALL";
    case OP_MAKE_FUNCTION: return "MAKE_FUNCTION";
    case OP_RETURN_VALUE: return "RETURN_VALUE";
    case OP_RETURN_CONST: return "RETURN_CONST";
    case OP_RAISE: return "RAISE";
    case OP_PROBE: return "PROBE";
    case OP_PRINT: return "PRINT";
    case OP_GET_RANGE_ITER: return "GET_RANGE_ITER";
    case OP_FOR_RANGE_NEXT: return "FOR_RANGE_NEXT";
    case OP_MATCH_LITERAL: return "MATCH_LITERAL";
  }
  return "INVALID";
}

bool op_is_forward_jump(uint8_t op) {
  return op == OP_JUMP_FORWARD || op == OP_POP_JUMP_IF_FALSE || op == OP_FOR_RANGE_NEXT;
}

bool op_is_backward_jump(uint8_t op) { return op == OP_JUMP_BACKWARD; }

int CodeObject::line_at(uint32_t offset) const {
  int line = 0;
  for (auto& e : line_table) {
    if (e.offset > offset) break;
    line = e.line;
  }
  return line;
}

bool Constant::operator==(const Constant& o) const { return v == o.v; }

InstrList decode(const CodeObject& code) {
  InstrList out;
  const auto& bytes = code.code;
  if (bytes.size() % 2 != 0)
    throw BytecodeError("odd code length", (uint32_t)bytes.size());

  // first pass: fold EXTENDED_ARG chains, remember offsets
  std::unordered_map<uint32_t, int32_t> offset_to_index;
  struct Pending {
    size_t instr_index;
    uint32_t target_offset;
    bool backward;
    uint32_t offset;
  };
  std::vector<Pending> pending;
  std::vector<uint32_t> start_offsets;

  uint32_t i = 0;
  while (i < bytes.size()) {
    uint32_t start = i;
    uint32_t ext = 0;
    int n_ext = 0;
    uint8_t op = bytes[i];
    while (op == OP_EXTENDED_ARG) {
      if (++n_ext > 3) throw BytecodeError("more than three EXTENDED_ARGs", start);
      ext = (ext << 8) | bytes[i + 1];
      i += 2;
      if (i >= bytes.size()) throw BytecodeError("EXTENDED_ARG at end of code", start);
      op = bytes[i];
    }
    uint32_t arg = (ext << 8) | bytes[i + 1];
    i += 2;

    Instr ins;
    ins.op = op;
    ins.arg = arg;
    ins.line = code.line_at(start);
    ins.min_units = (uint8_t)(n_ext + 1);
    offset_to_index[start] = (int32_t)out.instrs.size();
    start_offsets.push_back(start);

    if (op_is_forward_jump(op)) {
      pending.push_back({out.instrs.size(), i + 2 * arg, false, start});
    } else if (op_is_backward_jump(op)) {
      uint32_t span = 2 * arg;
      if (span > i) throw BytecodeError("backward jump before start of code", start);
      pending.push_back({out.instrs.size(), i - span, true, start});
    }
    out.instrs.push_back(ins);
  }
  // end-of-code is a valid forward target
  offset_to_index[(uint32_t)bytes.size()] = (int32_t)out.instrs.size();

  for (auto& p : pending) {
    auto it = offset_to_index.find(p.target_offset);
    if (it == offset_to_index.end())
      throw BytecodeError("jump target not on an instruction boundary", p.offset);
    out.instrs[p.instr_index].target = it->second;
  }

  for (auto& e : code.exc_table) {
    auto s = offset_to_index.find(e.start);
    auto en = offset_to_index.find(e.end);
    auto h = offset_to_index.find(e.handler);
    if (s == offset_to_index.end() || en == offset_to_index.end() ||
        h == offset_to_index.end())
      throw BytecodeError("exception range not on instruction boundaries", e.start);
    out.exc.push_back({(uint32_t)s->second, (uint32_t)en->second, (uint32_t)h->second});
  }
  return out;
}

AssembleResult assemble(const InstrList& list, int max_iterations) {
  const auto& instrs = list.instrs;
  size_t n = instrs.size();
  std::vector<uint8_t> width(n);
  for (size_t i = 0; i < n; ++i)
    width[i] = std::max<uint8_t>(1, instrs[i].target >= 0 ? 1 : operand_width_units(instrs[i].arg));
  // honor pre-existing widths so re-assembly of untouched code is stable
  for (size_t i = 0; i < n; ++i) width[i] = std::max(width[i], instrs[i].min_units);

  std::vector<uint32_t> offsets(n + 1);
  std::vector<uint32_t> args(n);
  int iter = 0;
  bool changed = true;
  while (changed) {
    if (++iter > max_iterations)
      throw BytecodeError("jump relocation did not reach a fixpoint", 0);
    changed = false;
    uint32_t off = 0;
    for (size_t i = 0; i < n; ++i) {
      offsets[i] = off;
      off += 2u * width[i];
    }
    offsets[n] = off;
    for (size_t i = 0; i < n; ++i) {
      uint32_t arg = instrs[i].arg;
      if (instrs[i].target >= 0) {
        uint32_t end = offsets[i] + 2u * width[i];
        uint32_t tgt = offsets[instrs[i].target];
        uint32_t span = op_is_backward_jump(instrs[i].op) ? end - tgt : tgt - end;
        arg = span / 2;
      }
      args[i] = arg;
      uint8_t need = (uint8_t)operand_width_units(arg);
      if (need > 4) throw BytecodeError("operand exceeds three EXTENDED_ARGs", offsets[i]);
      if (need > width[i]) {
        width[i] = need;  // widths only grow; guarantees termination
        changed = true;
      }
    }
  }

  AssembleResult res;
  res.iterations = iter;
  res.offsets.assign(offsets.begin(), offsets.end() - 1);
  for (size_t i = 0; i < n; ++i) {
    uint32_t arg = args[i];
    if (operand_width_units(arg) > 4 || arg > 0xFFFFFFFFu)
      throw BytecodeError("operand out of range", offsets[i]);
    for (int u = width[i] - 1; u >= 1; --u) {
      res.code.push_back(OP_EXTENDED_ARG);
      res.code.push_back((uint8_t)(arg >> (8 * u)));
    }
    res.code.push_back(instrs[i].op);
    res.code.push_back((uint8_t)(arg & 0xFF));
    int line = instrs[i].line;
    if (res.line_table.empty() || res.line_table.back().line != line)
      res.line_table.push_back({offsets[i], line});
  }
  for (auto& e : list.exc) {
    uint32_t start = e.start < n ? res.offsets[e.start] : (uint32_t)res.code.size();
    uint32_t end = e.end < n ? res.offsets[e.end] : (uint32_t)res.code.size();
    uint32_t handler = e.handler < n ? res.offsets[e.handler] : (uint32_t)res.code.size();
    res.exc_table.push_back({start, end, handler});
  }
  return res;
}

CodeObject relocate_jumps(const CodeObject& code, const std::vector<Insertion>& insertions) {
  InstrList list = decode(code);
  // insert runs back-to-front so earlier offsets stay valid
  std::vector<Insertion> sorted = insertions;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const Insertion& a, const Insertion& b) { return a.offset < b.offset; });

  // map byte offset -> instruction index in the original code
  InstrList orig = list;
  std::unordered_map<uint32_t, size_t> off_to_idx;
  {
    uint32_t off = 0;
    InstrList tmp = decode(code);
    // recompute offsets by re-walking the bytes
    size_t idx = 0;
    uint32_t i = 0;
    const auto& bytes = code.code;
    while (i < bytes.size()) {
      off_to_idx[i] = idx;
      uint32_t j = i;
      while (bytes[j] == OP_EXTENDED_ARG) j += 2;
      i = j + 2;
      ++idx;
    }
    off_to_idx[(uint32_t)bytes.size()] = idx;
    (void)off;
    (void)tmp;
  }

  // build new instruction vector with index remapping
  size_t n = list.instrs.size();
  std::vector<std::vector<Instr>> before(n + 1);
  for (auto& ins : sorted) {
    auto it = off_to_idx.find(ins.offset);
    if (it == off_to_idx.end())
      throw BytecodeError("insertion offset not on an instruction boundary", ins.offset);
    auto& v = before[it->second];
    v.insert(v.end(), ins.instrs.begin(), ins.instrs.end());
  }
  std::vector<int32_t> remap(n + 1);
  InstrList out;
  for (size_t i = 0; i <= n; ++i) {
    remap[i] = (int32_t)(out.instrs.size() + before[i].size());
    for (auto& ins : before[i]) out.instrs.push_back(ins);
    if (i < n) out.instrs.push_back(list.instrs[i]);
  }
  for (auto& ins : out.instrs)
    if (ins.target >= 0 && (size_t)ins.target <= n) {
      // only original instructions carry targets into the original index space;
      // inserted instructions must use original-space targets too
      ins.target = remap[ins.target];
    }
  for (auto& e : list.exc)
    out.exc.push_back({(uint32_t)remap[e.start], (uint32_t)remap[e.end],
                       (uint32_t)remap[e.handler]});

  auto res = assemble(out);
  CodeObject nc = code;
  nc.code = std::move(res.code);
  nc.line_table = std::move(res.line_table);
  nc.exc_table = std::move(res.exc_table);
  return nc;
}

}  // namespace decov
