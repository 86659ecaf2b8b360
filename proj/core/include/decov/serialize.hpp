// Part of decov, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "decov/bytecode.hpp"

namespace decov {

struct SerializeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Container format: magic "DCOV", u16 version, then the CodeObject tree.
// All integers little-endian.
constexpr uint16_t kMinicVersion = 1;

void write_minic(std::ostream& os, const CodeObject& code);
CodePtr read_minic(std::istream& is);

void save_minic(const std::string& path, const CodeObject& code);
CodePtr load_minic(const std::string& path);

/// True if any constant in the tree is a ProbeHandle.
bool has_probes(const CodeObject& code);

}  // namespace decov
