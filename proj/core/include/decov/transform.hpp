// Part of decov, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "decov/ast.hpp"

namespace decov {

/// Give every If/While/ForRange an explicit else arm and every Match a
/// wildcard case. Inserted arms hold a single synthetic Pass carrying the
/// construct's own line. Returns a new tree; the input is not modified.
AstPtr split_critical_edges(const AstNode& ast);

/// Insert a BranchMarker as the first statement of every arm of every
/// branching construct. Requires split_critical_edges output.
AstPtr demarcate_branches(const AstNode& ast);

/// split + demarcate in one call.
AstPtr transform(const AstNode& ast);

/// Tree assertion: no If/While/ForRange with an empty else arm, no Match
/// without a wildcard case, and every arm headed by a marker. Throws
/// std::logic_error on violation.
void assert_arm_totality(const AstNode& ast);

}  // namespace decov
