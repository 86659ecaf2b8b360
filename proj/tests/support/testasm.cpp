// Part of decov, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#include "testasm.hpp"

#include <stdexcept>

namespace decov::testing {

std::vector<RefInstr> ref_decode(const std::vector<uint8_t>& code) {
  if (code.size() % 2) throw std::runtime_error("ref_decode: odd byte count");
  std::vector<RefInstr> out;
  size_t i = 0;
  while (i < code.size()) {
    RefInstr ins;
    ins.offset = (uint32_t)i;
    uint32_t arg = 0;
    int prefixes = 0;
    while (i < code.size() && code[i] == OP_EXTENDED_ARG) {
      arg = (arg << 8) | code[i + 1];
      i += 2;
      if (++prefixes > 3) throw std::runtime_error("ref_decode: >3 EXTENDED_ARG");
    }
    if (i >= code.size()) throw std::runtime_error("ref_decode: dangling prefix");
    ins.op = code[i];
    ins.arg = (arg << 8) | code[i + 1];
    i += 2;
    if (op_is_forward_jump(ins.op))
      ins.target = (int64_t)i + 2 * (int64_t)ins.arg;
    else if (op_is_backward_jump(ins.op))
      ins.target = (int64_t)i - 2 * (int64_t)ins.arg;
    if (ins.target >= 0 && (ins.target % 2 || (size_t)ins.target > code.size()))
      throw std::runtime_error("ref_decode: jump outside code");
    out.push_back(ins);
  }
  return out;
}

std::vector<uint8_t> ref_assemble(const InstrList& list) {
  size_t n = list.instrs.size();
  std::vector<int> width(n);
  for (size_t i = 0; i < n; ++i) width[i] = list.instrs[i].min_units;

  std::vector<uint32_t> offset(n + 1);
  std::vector<uint32_t> arg(n);
  for (int round = 0; round < 64; ++round) {
    offset[0] = 0;
    for (size_t i = 0; i < n; ++i) offset[i + 1] = offset[i] + 2 * (uint32_t)width[i];
    bool changed = false;
    for (size_t i = 0; i < n; ++i) {
      const Instr& ins = list.instrs[i];
      uint32_t a = ins.arg;
      if (ins.target >= 0) {
        uint32_t end = offset[i + 1];
        uint32_t tgt = offset[ins.target];
        a = (op_is_backward_jump(ins.op) ? end - tgt : tgt - end) / 2;
      }
      arg[i] = a;
      int need = operand_width_units(a);
      if (need > 4) throw std::runtime_error("ref_assemble: operand too wide");
      if (need > width[i]) {
        width[i] = need;
        changed = true;
      }
    }
    if (!changed) {
      std::vector<uint8_t> code;
      for (size_t i = 0; i < n; ++i) {
        uint32_t a = arg[i];
        for (int u = width[i] - 1; u >= 1; --u)
          code.insert(code.end(), {(uint8_t)OP_EXTENDED_ARG, (uint8_t)(a >> (8 * u))});
        code.insert(code.end(), {list.instrs[i].op, (uint8_t)a});
      }
      return code;
    }
  }
  throw std::runtime_error("ref_assemble: no fixpoint");
}

}  // namespace decov::testing
