// Part of decov, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "decov/instrlist.hpp"

namespace decov::testing {

/// One decoded instruction as seen by the reference decoder; jump targets
/// are absolute byte offsets, -1 for non-jumps.
struct RefInstr {
  uint32_t offset = 0;  // of the first EXTENDED_ARG, if any
  uint8_t op = 0;
  uint32_t arg = 0;
  int64_t target = -1;
};

/// Minimal independent decoder: folds EXTENDED_ARG chains and resolves jump
/// operands to byte offsets. Throws std::runtime_error on malformed input.
std::vector<RefInstr> ref_decode(const std::vector<uint8_t>& code);

/// Naive reference encoder for an instruction list: recompute operand widths
/// from scratch until nothing changes, then emit. Used to cross-check the
/// production assembler's jump arithmetic.
std::vector<uint8_t> ref_assemble(const InstrList& list);

}  // namespace decov::testing
