// Part of decov, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>

#include "decov/ast.hpp"
#include "decov/bytecode.hpp"

namespace decov {

struct CompileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Compile a Module (or FunctionDef subtree) into a CodeObject.
/// `_branch = (o, d)` markers compile to the recognizable idiom
/// LOAD_CONST tuple(o, d); STORE_NAME `_branch`.
CodePtr compile(const AstNode& ast);

}  // namespace decov
