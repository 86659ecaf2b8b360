// Part of decov, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace decov {

// Word-coded ISA: every instruction unit is 2 bytes (opcode, operand).
// Operands wider than one byte chain up to three EXTENDED_ARG prefixes,
// big-endian (each prefix contributes the next 8 higher bits).
enum Op : uint8_t {
  OP_NOP = 1,
  OP_EXTENDED_ARG,
  OP_LOAD_CONST,
  OP_LOAD_NAME,
  OP_STORE_NAME,
  OP_POP_TOP,
  OP_UNARY_NEG,
  OP_UNARY_NOT,
  OP_BINARY_OP,
  OP_COMPARE_OP,
  OP_BUILD_TUPLE,
  OP_JUMP_FORWARD,
  OP_JUMP_BACKWARD,
  OP_POP_JUMP_IF_FALSE,
  OP_CALL,
  OP_MAKE_FUNCTION,
  OP_RETURN_VALUE,
  OP_RETURN_CONST,
  OP_RAISE,
  OP_PROBE,
  OP_PRINT,
  OP_GET_RANGE_ITER,
  OP_FOR_RANGE_NEXT,
  OP_MATCH_LITERAL,
};

const char* op_name(uint8_t op);
bool op_is_forward_jump(uint8_t op);   // JUMP_FORWARD, POP_JUMP_IF_FALSE, FOR_RANGE_NEXT
bool op_is_backward_jump(uint8_t op);  // JUMP_BACKWARD

// Operand sub-codes for BINARY_OP / COMPARE_OP match BinOp / CmpOp in ast.hpp.

struct CodeObject;
using CodePtr = std::shared_ptr<const CodeObject>;

/// Index into the coverage engine's probe table; lives only in consts.
struct ProbeHandle {
  uint32_t probe_id = 0;
  bool operator==(const ProbeHandle& o) const { return probe_id == o.probe_id; }
};

struct Constant;
using ConstList = std::vector<Constant>;

struct Constant {
  using Tuple = std::vector<Constant>;
  std::variant<std::monostate, bool, int64_t, double, std::string, Tuple, CodePtr,
               ProbeHandle>
      v;

  Constant() = default;
  template <typename T>
  Constant(T&& x) : v(std::forward<T>(x)) {}

  bool operator==(const Constant& o) const;
};

struct LineEntry {
  uint32_t offset;  // start byte offset, strictly increasing across entries
  int line;
};

struct ExcEntry {
  uint32_t start;    // inclusive byte offset
  uint32_t end;      // exclusive
  uint32_t handler;  // instruction boundary
};

/// Immutable compiled unit. All rewrites produce a new CodeObject.
struct CodeObject {
  std::string name;
  std::string source;  // file path
  std::vector<uint8_t> code;
  ConstList consts;
  std::vector<std::string> names;
  std::vector<std::string> params;
  std::vector<LineEntry> line_table;
  std::vector<ExcEntry> exc_table;

  int line_at(uint32_t offset) const;
};

// Operand encoding helpers.
inline int operand_width_units(uint32_t v) {
  if (v < 0x100u) return 1;
  if (v < 0x10000u) return 2;
  if (v < 0x1000000u) return 3;
  return 4;  // three EXTENDED_ARGs plus the base unit
}

}  // namespace decov
