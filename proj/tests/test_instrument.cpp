// Part of decov, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "decov/compiler.hpp"
#include "decov/disasm.hpp"
#include "decov/instrument.hpp"
#include "decov/parser.hpp"
#include "decov/serialize.hpp"
#include "decov/transform.hpp"
#include "decov/universe.hpp"
#include "decov/verify.hpp"
#include "decov/vm.hpp"
#include "testasm.hpp"

using namespace decov;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Prepared {
  AstPtr transformed;
  CoverableUniverse universe;
  CodePtr plain;  // compiled, markers present
};

Prepared prep(const std::string& src, const std::string& file) {
  Prepared p;
  p.transformed = transform(*parse(src, file));
  p.universe = enumerate_universe(*p.transformed);
  p.plain = compile(*p.transformed);
  return p;
}

const CodeObject* at_path(const CodeObject& root, const std::vector<uint32_t>& path) {
  const CodeObject* co = &root;
  for (uint32_t idx : path) {
    auto* child = std::get_if<CodePtr>(&co->consts.at(idx).v);
    REQUIRE(child != nullptr);
    co = child->get();
  }
  return co;
}

std::vector<fs::path> corpus_files() {
  std::vector<fs::path> files;
  for (auto& e : fs::directory_iterator(DECOV_CORPUS_DIR))
    if (e.path().extension() == ".mini") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  REQUIRE(files.size() >= 30);
  return files;
}

struct NullSink : ProbeSink {
  uint64_t fires = 0;
  void fire(uint32_t) override { ++fires; }
};

int count_marker_stores(const CodeObject& co) {
  int slot = -1;
  for (size_t i = 0; i < co.names.size(); ++i)
    if (co.names[i] == "_branch") slot = (int)i;
  int n = 0;
  for (auto& r : testing::ref_decode(co.code))
    if (r.op == OP_STORE_NAME && (int)r.arg == slot) ++n;
  for (auto& k : co.consts)
    if (auto* child = std::get_if<CodePtr>(&k.v)) n += count_marker_stores(**child);
  return n;
}

int count_probe_ops(const CodeObject& co) {
  int n = 0;
  for (auto& r : testing::ref_decode(co.code))
    if (r.op == OP_PROBE) ++n;
  for (auto& k : co.consts)
    if (auto* child = std::get_if<CodePtr>(&k.v)) n += count_probe_ops(**child);
  return n;
}

}  // namespace

TEST_CASE("map invariants hold on the whole corpus") {
  for (auto& path : corpus_files()) {
    auto p = prep(slurp(path.string()), path.string());
    auto [probed, map] = insert_probes(*p.plain, p.universe, InstrumentMode::LineAndBranch);
    CAPTURE(path.string());
    for (auto& site : map.sites) {
      const CodeObject* owner = at_path(*probed, site.code_path);
      REQUIRE(site.nop_offset + 2 <= owner->code.size());
      // NOP header whose operand is the remaining sequence length in units
      CHECK(owner->code[site.nop_offset] == OP_NOP);
      CHECK(owner->code[site.nop_offset + 1] == site.seq_units);
      REQUIRE(site.seq_units >= 1);
      REQUIRE(site.seq_units <= 4);
      // the sequence ends with PROBE resolving to this site's handle
      uint32_t last = site.nop_offset + 2 * site.seq_units;
      CHECK(owner->code[last] == OP_PROBE);
      uint32_t arg = 0;
      for (uint32_t off = site.nop_offset + 2; off <= last; off += 2) {
        if (owner->code[off] == OP_EXTENDED_ARG)
          arg = (arg << 8) | owner->code[off + 1];
        else
          arg = (arg << 8) | owner->code[off + 1];
      }
      auto* handle = std::get_if<ProbeHandle>(&owner->consts.at(arg).v);
      REQUIRE(handle != nullptr);
      CHECK(handle->probe_id == site.probe_id);
      // line table maps the probe to the line it guards
      if (site.kind == ProbeKind::Line)
        CHECK(owner->line_at(site.nop_offset) == site.line);
    }
  }
}

TEST_CASE("verify passes with probe spans on the whole corpus") {
  for (auto& path : corpus_files()) {
    auto p = prep(slurp(path.string()), path.string());
    auto [probed, map] = insert_probes(*p.plain, p.universe, InstrumentMode::LineAndBranch);
    std::vector<std::vector<uint32_t>> paths;
    paths.push_back({});
    for (auto& site : map.sites)
      if (std::find(paths.begin(), paths.end(), site.code_path) == paths.end())
        paths.push_back(site.code_path);
    for (auto& cp : paths) {
      auto v = verify(*at_path(*probed, cp), probe_spans(map, cp));
      CAPTURE(path.string());
      CHECK(v.ok());
    }
  }
}

TEST_CASE("branch mode replaces every marker idiom") {
  auto p = prep("if x {\n  a = 1\n} else {\n  b = 1\n}\n", "t.mini");
  CHECK(count_marker_stores(*p.plain) == 2);
  auto [probed, map] = insert_probes(*p.plain, p.universe, InstrumentMode::LineAndBranch);
  CHECK(count_marker_stores(*probed) == 0);
  int branch_sites = 0;
  for (auto& s : map.sites)
    if (s.kind == ProbeKind::Branch) ++branch_sites;
  CHECK(branch_sites == 2);
}

TEST_CASE("line-only mode strips markers and emits no branch probes") {
  auto p = prep("if x {\n  a = 1\n} else {\n  b = 1\n}\n", "t.mini");
  auto [probed, map] = insert_probes(*p.plain, p.universe, InstrumentMode::LineOnly);
  CHECK(count_marker_stores(*probed) == 0);
  for (auto& s : map.sites) CHECK(s.kind == ProbeKind::Line);
}

TEST_CASE("strip_markers removes the idiom and nothing else fires") {
  auto p = prep("if x {\n  a = 1\n}\n", "t.mini");
  auto stripped = strip_markers(*p.plain);
  CHECK(count_marker_stores(*stripped) == 0);
  CHECK(count_probe_ops(*stripped) == 0);
}

TEST_CASE("probes recurse into nested code objects") {
  auto p = prep("def f(a) {\n  def g(b) {\n    return b + 1\n  }\n  return g(a)\n}\n"
                "print(f(1))\n", "t.mini");
  auto [probed, map] = insert_probes(*p.plain, p.universe, InstrumentMode::LineAndBranch);
  bool saw_depth2 = false;
  for (auto& s : map.sites) saw_depth2 = saw_depth2 || s.code_path.size() == 2;
  CHECK(saw_depth2);
  CHECK(count_probe_ops(*probed) == (int)map.sites.size());
}

TEST_CASE("a pass-only module gets exactly one line probe") {
  auto p = prep("pass\n", "t.mini");
  auto [probed, map] = insert_probes(*p.plain, p.universe, InstrumentMode::LineAndBranch);
  REQUIRE(map.sites.size() == 1);
  CHECK(map.sites[0].kind == ProbeKind::Line);
  CHECK(map.sites[0].line == 1);
}

TEST_CASE("probe ids are dense starting at first_probe_id") {
  auto p = prep("x = 1\ny = 2\n", "t.mini");
  auto [probed, map] = insert_probes(*p.plain, p.universe, InstrumentMode::LineAndBranch, 7);
  CHECK(map.first_probe_id == 7);
  for (size_t i = 0; i < map.sites.size(); ++i)
    CHECK(map.sites[i].probe_id == 7 + i);
}

TEST_CASE("instrumented execution is output-transparent") {
  for (auto& path : corpus_files()) {
    auto src = slurp(path.string());
    if (src.find("load(") != std::string::npos) continue;  // needs the loader
    auto p = prep(src, path.string());
    std::ostringstream plain_out, probed_out;
    {
      VM vm(plain_out);
      vm.run(strip_markers(*p.plain));
    }
    auto [probed, map] = insert_probes(*p.plain, p.universe, InstrumentMode::LineAndBranch);
    NullSink sink;
    {
      VM vm(probed_out);
      vm.set_probe_sink(&sink);
      vm.run(probed);
    }
    CAPTURE(path.string());
    CHECK(plain_out.str() == probed_out.str());
  }
}

TEST_CASE("a jump crossing the 255-unit boundary gains an EXTENDED_ARG") {
  // search upward until the loop-exit jump of a while needs two bytes
  for (int filler = 40; filler <= 90; filler += 5) {
    std::ostringstream src;
    src << "x = 1\nwhile x > 0 {\n";
    for (int i = 0; i < filler; ++i) src << "  x = x + " << i << "\n";
    src << "  x = 0\n}\nprint(x)\n";
    auto p = prep(src.str(), "big.mini");
    auto [probed, map] = insert_probes(*p.plain, p.universe, InstrumentMode::LineAndBranch);
    auto v = verify(*probed, probe_spans(map, {}));
    CAPTURE(filler);
    CHECK(v.ok());
    bool has_ea = false;
    for (auto& r : testing::ref_decode(probed->code))
      has_ea = has_ea || (r.op != OP_PROBE && r.arg > 255 &&
                          (r.op == OP_POP_JUMP_IF_FALSE || r.op == OP_JUMP_FORWARD ||
                           r.op == OP_JUMP_BACKWARD));
    if (filler >= 70) CHECK(has_ea);
  }
}

TEST_CASE("minic round trip preserves instrumented code") {
  auto p = prep("if x {\n  a = 1\n}\nprint(2)\n", "t.mini");
  auto [probed, map] = insert_probes(*p.plain, p.universe, InstrumentMode::LineAndBranch);
  CHECK(has_probes(*probed));
  CHECK_FALSE(has_probes(*strip_markers(*p.plain)));

  std::stringstream buf;
  write_minic(buf, *probed);
  auto back = read_minic(buf);
  CHECK(disassemble(*back) == disassemble(*probed));
  CHECK(back->code == probed->code);
}

TEST_CASE("corrupt minic input is rejected") {
  std::stringstream buf("DCOVxxxxgarbage");
  CHECK_THROWS_AS(read_minic(buf), SerializeError);
  std::stringstream empty;
  CHECK_THROWS_AS(read_minic(empty), SerializeError);
}
