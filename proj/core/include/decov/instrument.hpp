// Part of decov, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "decov/bytecode.hpp"
#include "decov/universe.hpp"

namespace decov {

enum class ProbeKind : uint8_t { Line, Branch };

enum class InstrumentMode { LineOnly, LineAndBranch };

struct InstrumentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Where a probe lives: the owning CodeObject (as const indices from the
/// root) and the byte offset of the probe's NOP header. The NOP operand
/// pre-encodes the length of the rest of the sequence in code units, so
/// elimination can rewrite it to JUMP_FORWARD with the same operand.
struct ProbeSite {
  uint32_t probe_id = 0;
  ProbeKind kind = ProbeKind::Line;
  int line = 0;    // Line probes
  int origin = 0;  // Branch probes
  int dest = 0;
  std::vector<uint32_t> code_path;  // const indices from the root CodeObject
  uint32_t nop_offset = 0;
  uint32_t seq_units = 0;  // units after the NOP header (1..4)
};

struct InstrumentationMap {
  std::vector<ProbeSite> sites;
  uint32_t first_probe_id = 0;
};

/// Static phase: insert a line probe before the first instruction of each
/// coverable line of every CodeObject in the tree (children first), and in
/// LineAndBranch mode replace each `_branch` marker idiom with a branch
/// probe. In LineOnly mode markers are stripped instead. All jumps and
/// metadata are fixed up; verify() holds on the result.
std::pair<CodePtr, InstrumentationMap> insert_probes(const CodeObject& code,
                                                     const CoverableUniverse& universe,
                                                     InstrumentMode mode,
                                                     uint32_t first_probe_id = 0);

/// Remove `_branch` marker idioms without inserting anything (the path used
/// when no coverage is collected).
CodePtr strip_markers(const CodeObject& code);

/// Probe spans of a single (non-nested) code object for verify().
std::vector<std::pair<uint32_t, uint32_t>> probe_spans(const InstrumentationMap& map,
                                                       const std::vector<uint32_t>& code_path);

}  // namespace decov
