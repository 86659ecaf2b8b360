// Part of decov, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

#include "decov/ast.hpp"

namespace decov {

struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, int line, int col)
      : std::runtime_error(msg + " (line " + std::to_string(line) + ", col " +
                           std::to_string(col) + ")"),
        line(line),
        col(col) {}
  int line;
  int col;
};

/// Parse Mini source into a Module node. All nodes come out non-synthetic
/// with exact 1-based source lines. Rejects use of the reserved `_branch`
/// identifier and nesting deeper than 64 levels.
AstPtr parse(const std::string& source, const std::string& file);

}  // namespace decov
