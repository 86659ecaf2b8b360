// Part of decov, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "decov/bytecode.hpp"

namespace decov {

/// One logical instruction (EXTENDED_ARG prefixes folded in).
struct Instr {
  uint8_t op = OP_NOP;
  uint32_t arg = 0;        // literal operand; ignored for resolved jumps
  int32_t target = -1;     // jump target as an instruction index, -1 if not a jump
  int line = 0;
  uint8_t min_units = 1;   // encoded width floor; widths only grow during fixpoint
};

struct InstrList {
  std::vector<Instr> instrs;
  // exception ranges in instruction indices: [start, end) with handler index
  struct ExcRange {
    uint32_t start, end, handler;
  };
  std::vector<ExcRange> exc;
};

struct BytecodeError : std::runtime_error {
  BytecodeError(const std::string& msg, uint32_t offset)
      : std::runtime_error(msg + " (offset " + std::to_string(offset) + ")"),
        offset(offset) {}
  uint32_t offset;
};

/// Decode code bytes into a logical instruction list, resolving jump operands
/// to instruction indices and attaching lines from the line table.
InstrList decode(const CodeObject& code);

struct AssembleResult {
  std::vector<uint8_t> code;
  std::vector<LineEntry> line_table;
  std::vector<ExcEntry> exc_table;
  std::vector<uint32_t> offsets;  // instruction index -> byte offset of first unit
  int iterations = 0;             // jump-relocation fixpoint rounds
};

/// Encode an instruction list, re-resolving jumps to a fixpoint. Operand
/// widths only grow; more than `max_iterations` rounds is an invariant breach.
/// Throws BytecodeError if an operand needs more than three EXTENDED_ARGs.
AssembleResult assemble(const InstrList& list, int max_iterations = 8);

/// Relocation primitive: apply insertions (given as instruction runs at byte
/// offsets of the original code) and re-resolve all jumps.
struct Insertion {
  uint32_t offset;  // byte offset in the original code; new instructions go before it
  std::vector<Instr> instrs;
};
CodeObject relocate_jumps(const CodeObject& code, const std::vector<Insertion>& insertions);

}  // namespace decov
