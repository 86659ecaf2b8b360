// Part of decov, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#include "decov/instrument.hpp"

#include <optional>
#include <set>
#include <unordered_map>

#include "decov/instrlist.hpp"
#include "decov/verify.hpp"

namespace decov {
namespace {

const char* kBranchName = "_branch";

struct MarkerInfo {
  int origin;
  int dest;
};

// LOAD_CONST (o, d) followed by STORE_NAME `_branch`
std::optional<MarkerInfo> marker_at(const InstrList& list, size_t i, const CodeObject& co) {
  if (i + 1 >= list.instrs.size()) return std::nullopt;
  const Instr& a = list.instrs[i];
  const Instr& b = list.instrs[i + 1];
  if (a.op != OP_LOAD_CONST || b.op != OP_STORE_NAME) return std::nullopt;
  if (b.arg >= co.names.size() || co.names[b.arg] != kBranchName) return std::nullopt;
  if (a.arg >= co.consts.size()) return std::nullopt;
  auto* t = std::get_if<Constant::Tuple>(&co.consts[a.arg].v);
  if (!t || t->size() != 2) return std::nullopt;
  auto* o = std::get_if<int64_t>(&(*t)[0].v);
  auto* d = std::get_if<int64_t>(&(*t)[1].v);
  if (!o || !d) return std::nullopt;
  return MarkerInfo{(int)*o, (int)*d};
}

struct Rewriter {
  const CoverableUniverse* universe = nullptr;  // null: strip only
  InstrumentMode mode = InstrumentMode::LineOnly;
  bool insert_line_probes = false;
  uint32_t next_id = 0;
  std::vector<ProbeSite> sites;

  CodePtr rewrite(const CodeObject& co, std::vector<uint32_t>& path) {
    auto out = std::make_shared<CodeObject>(co);

    // children first
    for (uint32_t ci = 0; ci < out->consts.size(); ++ci) {
      if (auto* p = std::get_if<CodePtr>(&out->consts[ci].v)) {
        path.push_back(ci);
        out->consts[ci] = Constant{rewrite(**p, path)};
        path.pop_back();
      }
    }

    InstrList list = decode(*out);
    size_t n = list.instrs.size();

    // classify marker idioms
    std::vector<char> is_marker_head(n, 0), is_marker_part(n, 0);
    std::vector<MarkerInfo> markers(n);
    for (size_t i = 0; i < n; ++i) {
      if (auto m = marker_at(list, i, *out)) {
        is_marker_head[i] = 1;
        is_marker_part[i] = is_marker_part[i + 1] = 1;
        markers[i] = *m;
        ++i;  // skip the STORE_NAME
      }
    }

    // first surviving instruction of each coverable line
    std::vector<char> line_probe_here(n, 0);
    if (insert_line_probes) {
      std::set<int> seen;
      for (size_t i = 0; i < n; ++i) {
        if (is_marker_part[i]) continue;
        int line = list.instrs[i].line;
        if (line <= 0 || seen.count(line)) continue;
        seen.insert(line);
        if (universe && !universe->lines.count({out->source, line})) continue;
        line_probe_here[i] = 1;
      }
    }

    struct PendingSite {
      size_t instr_index;  // index of the NOP header in the new list
      ProbeSite site;
    };
    std::vector<PendingSite> pending;

    InstrList rebuilt;
    std::vector<int32_t> remap(n + 1, -1);

    auto emit_probe = [&](ProbeKind kind, int line, int origin, int dest, int attr_line) {
      uint32_t const_idx = (uint32_t)out->consts.size();
      out->consts.push_back(Constant{ProbeHandle{next_id}});
      uint32_t seq_units = (uint32_t)operand_width_units(const_idx);

      ProbeSite site;
      site.probe_id = next_id++;
      site.kind = kind;
      site.line = line;
      site.origin = origin;
      site.dest = dest;
      site.code_path = path;
      site.seq_units = seq_units;

      Instr nop;
      nop.op = OP_NOP;
      nop.arg = seq_units;
      nop.line = attr_line;
      pending.push_back({rebuilt.instrs.size(), site});
      rebuilt.instrs.push_back(nop);

      Instr probe;
      probe.op = OP_PROBE;
      probe.arg = const_idx;
      probe.line = attr_line;
      rebuilt.instrs.push_back(probe);
    };

    for (size_t i = 0; i < n; ++i) {
      remap[i] = (int32_t)rebuilt.instrs.size();
      if (line_probe_here[i]) {
        int line = list.instrs[i].line;
        emit_probe(ProbeKind::Line, line, 0, 0, line);
      }
      if (is_marker_head[i]) {
        if (mode == InstrumentMode::LineAndBranch && universe) {
          emit_probe(ProbeKind::Branch, 0, markers[i].origin, markers[i].dest,
                     list.instrs[i].line);
        }
        // marker instructions themselves are dropped in both modes
        remap[i + 1] = (int32_t)rebuilt.instrs.size();
        ++i;
        continue;
      }
      rebuilt.instrs.push_back(list.instrs[i]);
    }
    remap[n] = (int32_t)rebuilt.instrs.size();

    for (auto& ins : rebuilt.instrs)
      if (ins.target >= 0) ins.target = remap[ins.target];
    for (auto& e : list.exc)
      rebuilt.exc.push_back({(uint32_t)remap[e.start], (uint32_t)remap[e.end],
                             (uint32_t)remap[e.handler]});

    AssembleResult res;
    try {
      res = assemble(rebuilt);
    } catch (const BytecodeError& e) {
      throw InstrumentError("instrumenting " + out->name + ": " + e.what());
    }
    out->code = std::move(res.code);
    out->line_table = std::move(res.line_table);
    out->exc_table = std::move(res.exc_table);

    for (auto& p : pending) {
      p.site.nop_offset = res.offsets[p.instr_index];
      sites.push_back(p.site);
    }
    return out;
  }
};

}  // namespace

std::pair<CodePtr, InstrumentationMap> insert_probes(const CodeObject& code,
                                                     const CoverableUniverse& universe,
                                                     InstrumentMode mode,
                                                     uint32_t first_probe_id) {
  Rewriter rw;
  rw.universe = &universe;
  rw.mode = mode;
  rw.insert_line_probes = true;
  rw.next_id = first_probe_id;
  std::vector<uint32_t> path;
  CodePtr out = rw.rewrite(code, path);

  InstrumentationMap map;
  map.first_probe_id = first_probe_id;
  map.sites = std::move(rw.sites);

  auto vr = verify(*out);
  if (!vr.ok())
    throw InstrumentError("verification failed after instrumenting " + code.name + ": " +
                          vr.violations.front());
  return {out, std::move(map)};
}

CodePtr strip_markers(const CodeObject& code) {
  Rewriter rw;
  rw.universe = nullptr;
  rw.mode = InstrumentMode::LineOnly;
  rw.insert_line_probes = false;
  std::vector<uint32_t> path;
  return rw.rewrite(code, path);
}

std::vector<std::pair<uint32_t, uint32_t>> probe_spans(const InstrumentationMap& map,
                                                       const std::vector<uint32_t>& code_path) {
  std::vector<std::pair<uint32_t, uint32_t>> spans;
  for (auto& s : map.sites)
    if (s.code_path == code_path)
      spans.emplace_back(s.nop_offset, s.nop_offset + 2 + 2 * s.seq_units);
  return spans;
}

}  // namespace decov
