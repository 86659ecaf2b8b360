// Part of decov, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "decov/bytecode.hpp"

namespace decov {

/// Stable textual listing of a CodeObject tree: one row per code unit
/// (EXTENDED_ARG rows included), with resolved jump targets and source lines.
std::string disassemble(const CodeObject& code);

}  // namespace decov
