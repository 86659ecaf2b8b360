// Part of decov, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#include "decov/coverage.hpp"

#include <cstdlib>
#include <map>
#include <stdexcept>

#include "decov/verify.hpp"

namespace decov {

EngineConfig engine_config_from_env() {
  EngineConfig cfg;
  if (const char* t = std::getenv("DECOV_THRESHOLD")) {
    long v = std::strtol(t, nullptr, 10);
    if (v < 1) throw std::runtime_error("DECOV_THRESHOLD must be a positive integer");
    cfg.threshold = (uint32_t)v;
  }
  auto flag = [](const char* name) {
    const char* v = std::getenv(name);
    return v && *v && std::string(v) != "0";
  };
  cfg.no_elim = flag("DECOV_NO_ELIM");
  cfg.no_deinstr = flag("DECOV_NO_DEINSTR");
  cfg.debug_checks = flag("DECOV_DEBUG_CHECKS");
  return cfg;
}

CoverageEngine::CoverageEngine(VM& vm, EngineConfig cfg) : vm_(vm), cfg_(cfg) {}

void CoverageEngine::add_module(const std::string& file, CodePtr root,
                                InstrumentationMap map) {
  if (map.first_probe_id != states_.size())
    throw std::runtime_error("module probe ids do not extend the probe table");
  uint32_t mi = (uint32_t)modules_.size();
  for (uint32_t si = 0; si < map.sites.size(); ++si) {
    ProbeState st;
    st.module = mi;
    st.site = si;
    states_.push_back(st);
  }
  modules_.push_back({file, std::move(root), std::move(map), {}});
}

CodePtr CoverageEngine::module_root(const std::string& file) const {
  for (auto& m : modules_)
    if (m.file == file) return m.root;
  return nullptr;
}

void CoverageEngine::record(const ProbeState& p) {
  const Module& m = modules_[p.module];
  const ProbeSite& site = m.map.sites[p.site];
  if (site.kind == ProbeKind::Line)
    newly_.lines.insert({m.file, site.line});
  else
    newly_.branches.insert({m.file, site.origin, site.dest});
}

void CoverageEngine::fire(uint32_t probe_id) {
  ++fires_;
  ProbeState& p = states_[probe_id];
  if (cfg_.no_deinstr) {
    record(p);
    return;
  }
  if (!p.no_record) {
    record(p);
    p.no_record = true;
    pending_.push_back(probe_id);
    return;
  }
  // already covered: either still instrumented or a stale frame running
  // superseded code — both just bump the counter
  if (++p.counter >= cfg_.threshold) {
    p.counter = 0;
    if (!cfg_.no_elim && !pending_.empty()) eliminate_batch();
  }
}

void CoverageEngine::eliminate_batch() {
  // a batch with nothing pending still swaps the two-set store
  ++batches_;
  known_.merge(std::move(newly_));
  newly_ = {};
  if (pending_.empty()) return;

  std::vector<std::vector<uint32_t>> per_module(modules_.size());
  for (uint32_t id : pending_) {
    ProbeState& p = states_[id];
    p.eliminated = true;
    per_module[p.module].push_back(p.site);
  }
  pending_.clear();

  for (uint32_t mi = 0; mi < modules_.size(); ++mi) {
    if (per_module[mi].empty()) continue;
    rebuild_module(modules_[mi], per_module[mi]);
  }
}

namespace {

// Clone a code tree depth-first (children before parents), patching the NOP
// header of each listed probe into a JUMP_FORWARD with the same operand.
// Offsets are untouched, so every recorded site location stays valid.
CodePtr patch_tree(const CodeObject& co, std::vector<uint32_t>& path,
                   const std::map<std::vector<uint32_t>, std::vector<uint32_t>>& by_path,
                   std::unordered_map<const CodeObject*, CodePtr>& old_to_new) {
  auto out = std::make_shared<CodeObject>(co);
  for (uint32_t ci = 0; ci < out->consts.size(); ++ci) {
    if (auto* child = std::get_if<CodePtr>(&out->consts[ci].v)) {
      path.push_back(ci);
      CodePtr replaced = patch_tree(**child, path, by_path, old_to_new);
      old_to_new[child->get()] = replaced;
      out->consts[ci] = Constant{std::move(replaced)};
      path.pop_back();
    }
  }
  auto it = by_path.find(path);
  if (it != by_path.end())
    for (uint32_t off : it->second) out->code[off] = OP_JUMP_FORWARD;
  return out;
}

}  // namespace

void CoverageEngine::rebuild_module(Module& m, const std::vector<uint32_t>& site_indices) {
  std::map<std::vector<uint32_t>, std::vector<uint32_t>> by_path;
  for (uint32_t si : site_indices) {
    const ProbeSite& site = m.map.sites[si];
    by_path[site.code_path].push_back(site.nop_offset);
    m.eliminated_sites.push_back(si);
  }

  std::unordered_map<const CodeObject*, CodePtr> old_to_new;
  std::vector<uint32_t> path;
  CodePtr new_root = patch_tree(*m.root, path, by_path, old_to_new);
  old_to_new[m.root.get()] = new_root;

  auto vr = verify(*new_root);
  for (auto& v : vr.violations)
    verify_failures_.push_back(m.file + ": " + v);

  vm_.rebind_all(old_to_new);
  m.root = std::move(new_root);

  if (cfg_.debug_checks) {
    // every eliminated probe's jump must land exactly past its sequence
    for (uint32_t si : m.eliminated_sites) {
      const ProbeSite& site = m.map.sites[si];
      const CodeObject* co = m.root.get();
      for (uint32_t ci : site.code_path)
        co = std::get<CodePtr>(co->consts[ci].v).get();
      vm_.expect_probe_skip(co, site.nop_offset,
                            site.nop_offset + 2 + 2 * site.seq_units);
    }
  }
}

CoverageFacts CoverageEngine::snapshot() const {
  CoverageFacts out = known_;
  out.lines.insert(newly_.lines.begin(), newly_.lines.end());
  out.branches.insert(newly_.branches.begin(), newly_.branches.end());
  return out;
}

}  // namespace decov
