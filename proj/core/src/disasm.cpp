// Part of decov, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#include "decov/disasm.hpp"

#include <iomanip>
#include <sstream>

#include "decov/instrlist.hpp"

namespace decov {
namespace {

void const_repr(std::ostream& os, const Constant& c) {
  struct V {
    std::ostream& os;
    void operator()(std::monostate) { os << "None"; }
    void operator()(bool b) { os << (b ? "True" : "False"); }
    void operator()(int64_t i) { os << i; }
    void operator()(double d) {
      std::ostringstream tmp;
      tmp << d;
      os << tmp.str();
      if (tmp.str().find_first_of(".einf") == std::string::npos) os << ".0";
    }
    void operator()(const std::string& s) { os << '"' << s << '"'; }
    void operator()(const Constant::Tuple& t) {
      os << '(';
      for (size_t i = 0; i < t.size(); ++i) {
        if (i) os << ", ";
        const_repr(os, t[i]);
      }
      if (t.size() == 1) os << ',';
      os << ')';
    }
    void operator()(const CodePtr& c) { os << "<code " << c->name << '>'; }
    void operator()(const ProbeHandle& p) { os << "<probe " << p.probe_id << '>'; }
  };
  std::visit(V{os}, c.v);
}

void dis_one(std::ostream& os, const CodeObject& co) {
  os << "code " << co.name << " (" << co.source << ")\n";
  if (!co.params.empty()) {
    os << "  params:";
    for (auto& p : co.params) os << ' ' << p;
    os << '\n';
  }
  if (!co.names.empty()) {
    os << "  names:";
    for (auto& n : co.names) os << ' ' << n;
    os << '\n';
  }
  os << "  consts:\n";
  for (size_t i = 0; i < co.consts.size(); ++i) {
    os << "    " << i << ": ";
    const_repr(os, co.consts[i]);
    os << '\n';
  }
  for (auto& e : co.exc_table)
    os << "  exc: " << e.start << ".." << e.end << " -> " << e.handler << '\n';

  const auto& bytes = co.code;
  uint32_t i = 0;
  int last_line = -1;
  while (i + 1 < bytes.size()) {
    uint32_t start = i;
    uint32_t ext = 0;
    int line = co.line_at(start);
    // EXTENDED_ARG rows carry their raw byte; the base row shows the full operand
    uint32_t j = i;
    while (bytes[j] == OP_EXTENDED_ARG) {
      os << "  " << (line != last_line ? "L" + std::to_string(line) : std::string(" "));
      last_line = line;
      os << '\t' << j << '\t' << op_name(bytes[j]) << '\t' << (unsigned)bytes[j + 1]
         << '\n';
      ext = (ext << 8) | bytes[j + 1];
      j += 2;
    }
    uint8_t op = bytes[j];
    uint32_t arg = (ext << 8) | bytes[j + 1];
    os << "  " << (line != last_line ? "L" + std::to_string(line) : std::string(" "));
    last_line = line;
    os << '\t' << j << '\t' << op_name(op) << '\t' << (unsigned)bytes[j + 1];
    if (ext) os << "\tfull=" << arg;
    if (op_is_forward_jump(op)) {
      os << "\t-> " << (j + 2 + 2 * arg);
    } else if (op_is_backward_jump(op)) {
      os << "\t-> " << (j + 2 - 2 * arg);
    } else if (op == OP_LOAD_CONST || op == OP_RETURN_CONST || op == OP_MAKE_FUNCTION ||
               op == OP_MATCH_LITERAL || op == OP_PROBE) {
      if (arg < co.consts.size()) {
        os << "\t(";
        const_repr(os, co.consts[arg]);
        os << ')';
      }
    } else if ((op == OP_LOAD_NAME || op == OP_STORE_NAME) && arg < co.names.size()) {
      os << "\t(" << co.names[arg] << ')';
    }
    os << '\n';
    i = j + 2;
  }
  os << "end\n";
}

void dis_tree(std::ostream& os, const CodeObject& co) {
  dis_one(os, co);
  for (auto& c : co.consts)
    if (auto* p = std::get_if<CodePtr>(&c.v)) {
      os << '\n';
      dis_tree(os, **p);
    }
}

}  // namespace

std::string disassemble(const CodeObject& code) {
  std::ostringstream os;
  dis_tree(os, code);
  return os.str();
}

}  // namespace decov
