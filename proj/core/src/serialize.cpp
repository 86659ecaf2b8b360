// Part of decov, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#include "decov/serialize.hpp"

#include <cstring>
#include <fstream>

namespace decov {
namespace {

void put_u8(std::ostream& os, uint8_t v) { os.put((char)v); }

void put_u16(std::ostream& os, uint16_t v) {
  os.put((char)(v & 0xFF));
  os.put((char)(v >> 8));
}

void put_u32(std::ostream& os, uint32_t v) {
  for (int i = 0; i < 4; ++i) os.put((char)((v >> (8 * i)) & 0xFF));
}

void put_u64(std::ostream& os, uint64_t v) {
  for (int i = 0; i < 8; ++i) os.put((char)((v >> (8 * i)) & 0xFF));
}

void put_str(std::ostream& os, const std::string& s) {
  put_u32(os, (uint32_t)s.size());
  os.write(s.data(), (std::streamsize)s.size());
}

uint8_t get_u8(std::istream& is) {
  int c = is.get();
  if (c == EOF) throw SerializeError("truncated file");
  return (uint8_t)c;
}

uint16_t get_u16(std::istream& is) {
  uint16_t v = get_u8(is);
  v |= (uint16_t)get_u8(is) << 8;
  return v;
}

uint32_t get_u32(std::istream& is) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= (uint32_t)get_u8(is) << (8 * i);
  return v;
}

uint64_t get_u64(std::istream& is) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= (uint64_t)get_u8(is) << (8 * i);
  return v;
}

std::string get_str(std::istream& is) {
  uint32_t n = get_u32(is);
  if (n > (1u << 30)) throw SerializeError("string length out of range");
  std::string s(n, '\0');
  is.read(s.data(), n);
  if ((uint32_t)is.gcount() != n) throw SerializeError("truncated file");
  return s;
}

enum ConstTag : uint8_t {
  TAG_NONE = 0,
  TAG_BOOL,
  TAG_INT,
  TAG_FLOAT,
  TAG_STR,
  TAG_TUPLE,
  TAG_CODE,
  TAG_PROBE,
};

void write_code(std::ostream& os, const CodeObject& co);

void write_const(std::ostream& os, const Constant& c) {
  struct V {
    std::ostream& os;
    void operator()(std::monostate) { put_u8(os, TAG_NONE); }
    void operator()(bool b) {
      put_u8(os, TAG_BOOL);
      put_u8(os, b ? 1 : 0);
    }
    void operator()(int64_t i) {
      put_u8(os, TAG_INT);
      put_u64(os, (uint64_t)i);
    }
    void operator()(double d) {
      put_u8(os, TAG_FLOAT);
      uint64_t bits;
      std::memcpy(&bits, &d, 8);
      put_u64(os, bits);
    }
    void operator()(const std::string& s) {
      put_u8(os, TAG_STR);
      put_str(os, s);
    }
    void operator()(const Constant::Tuple& t) {
      put_u8(os, TAG_TUPLE);
      put_u32(os, (uint32_t)t.size());
      for (auto& e : t) write_const(os, e);
    }
    void operator()(const CodePtr& p) {
      put_u8(os, TAG_CODE);
      write_code(os, *p);
    }
    void operator()(const ProbeHandle& p) {
      put_u8(os, TAG_PROBE);
      put_u32(os, p.probe_id);
    }
  };
  std::visit(V{os}, c.v);
}

Constant read_const(std::istream& is);
CodePtr read_code(std::istream& is);

Constant read_const(std::istream& is) {
  switch (get_u8(is)) {
    case TAG_NONE: return Constant{};
    case TAG_BOOL: return Constant{get_u8(is) != 0};
    case TAG_INT: return Constant{(int64_t)get_u64(is)};
    case TAG_FLOAT: {
      uint64_t bits = get_u64(is);
      double d;
      std::memcpy(&d, &bits, 8);
      return Constant{d};
    }
    case TAG_STR: return Constant{get_str(is)};
    case TAG_TUPLE: {
      uint32_t n = get_u32(is);
      Constant::Tuple t;
      t.reserve(n);
      for (uint32_t i = 0; i < n; ++i) t.push_back(read_const(is));
      return Constant{std::move(t)};
    }
    case TAG_CODE: return Constant{read_code(is)};
    case TAG_PROBE: return Constant{ProbeHandle{get_u32(is)}};
    default: throw SerializeError("unknown constant tag");
  }
}

void write_code(std::ostream& os, const CodeObject& co) {
  put_str(os, co.name);
  put_str(os, co.source);
  put_u32(os, (uint32_t)co.code.size());
  os.write((const char*)co.code.data(), (std::streamsize)co.code.size());
  put_u32(os, (uint32_t)co.params.size());
  for (auto& p : co.params) put_str(os, p);
  put_u32(os, (uint32_t)co.names.size());
  for (auto& n : co.names) put_str(os, n);
  put_u32(os, (uint32_t)co.line_table.size());
  for (auto& e : co.line_table) {
    put_u32(os, e.offset);
    put_u32(os, (uint32_t)e.line);
  }
  put_u32(os, (uint32_t)co.exc_table.size());
  for (auto& e : co.exc_table) {
    put_u32(os, e.start);
    put_u32(os, e.end);
    put_u32(os, e.handler);
  }
  put_u32(os, (uint32_t)co.consts.size());
  for (auto& c : co.consts) write_const(os, c);
}

CodePtr read_code(std::istream& is) {
  auto co = std::make_shared<CodeObject>();
  co->name = get_str(is);
  co->source = get_str(is);
  uint32_t n = get_u32(is);
  co->code.resize(n);
  is.read((char*)co->code.data(), n);
  if ((uint32_t)is.gcount() != n) throw SerializeError("truncated file");
  for (uint32_t i = 0, m = get_u32(is); i < m; ++i) co->params.push_back(get_str(is));
  for (uint32_t i = 0, m = get_u32(is); i < m; ++i) co->names.push_back(get_str(is));
  for (uint32_t i = 0, m = get_u32(is); i < m; ++i) {
    uint32_t off = get_u32(is);
    int line = (int)get_u32(is);
    co->line_table.push_back({off, line});
  }
  for (uint32_t i = 0, m = get_u32(is); i < m; ++i) {
    uint32_t s = get_u32(is), e = get_u32(is), h = get_u32(is);
    co->exc_table.push_back({s, e, h});
  }
  for (uint32_t i = 0, m = get_u32(is); i < m; ++i) co->consts.push_back(read_const(is));
  return co;
}

}  // namespace

void write_minic(std::ostream& os, const CodeObject& code) {
  os.write("DCOV", 4);
  put_u16(os, kMinicVersion);
  write_code(os, code);
}

CodePtr read_minic(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (is.gcount() != 4 || std::memcmp(magic, "DCOV", 4) != 0)
    throw SerializeError("not a decov bytecode file");
  uint16_t version = get_u16(is);
  if (version != kMinicVersion)
    throw SerializeError("unsupported format version " + std::to_string(version));
  return read_code(is);
}

void save_minic(const std::string& path, const CodeObject& code) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw SerializeError("cannot open " + path + " for writing");
  write_minic(f, code);
  if (!f) throw SerializeError("write failed: " + path);
}

CodePtr load_minic(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw SerializeError("cannot open " + path);
  return read_minic(f);
}

bool has_probes(const CodeObject& code) {
  for (auto& c : code.consts) {
    if (std::holds_alternative<ProbeHandle>(c.v)) return true;
    if (auto* t = std::get_if<Constant::Tuple>(&c.v)) {
      (void)t;  // tuples hold literals only
    }
    if (auto* p = std::get_if<CodePtr>(&c.v))
      if (has_probes(**p)) return true;
  }
  return false;
}

}  // namespace decov
