// Part of decov, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "decov/bytecode.hpp"

namespace decov {

/// Byte ranges occupied by probe sequences (inclusive header offset,
/// exclusive end); jumps may land on the header or past the end, never inside.
using ProbeSpans = std::vector<std::pair<uint32_t, uint32_t>>;

struct VerifyResult {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

/// Structural checks on a CodeObject tree: instruction decoding, jump
/// boundaries, line/exception table well-formedness, and a stack depth
/// simulation that must close at depth 0 on every path. Never throws on
/// malformed input; problems come back as violations.
VerifyResult verify(const CodeObject& code, const ProbeSpans& spans = {});

/// Stack depth before each code unit (indexed by offset/2), -1 for
/// unreachable units. Used by the VM to restore depth at handler entry.
std::vector<int> stack_depths(const CodeObject& code);

}  // namespace decov
