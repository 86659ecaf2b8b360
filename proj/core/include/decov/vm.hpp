// Part of decov, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <iosfwd>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "decov/bytecode.hpp"
#include "decov/value.hpp"

namespace decov {

struct ProbeSink {
  virtual ~ProbeSink() = default;
  virtual void fire(uint32_t probe_id) = 0;
};

struct TraceConfig {
  enum class Mode { Off, Null, Collect };
  Mode mode = Mode::Off;
  std::string path_prefix;  // callback fires only for sources with this prefix
};

/// Lines and line-transition arcs recorded by the tracing collector.
struct TraceStore {
  std::set<std::pair<std::string, int>> lines;
  std::set<std::tuple<std::string, int, int>> arcs;
};

enum class ExitStatus : int { Ok = 0, UncaughtException = 1, VmFault = 2 };

struct RunResult {
  ExitStatus status = ExitStatus::Ok;
  std::string fault;  // diagnostic for VmFault
};

/// Thrown by native builtins to raise into the calling frame, exactly as if
/// the callee had executed `raise`.
struct MiniRaise {};

/// Thrown by native builtins on unrecoverable errors; surfaces as VmFault.
struct VmFaultError {
  std::string message;
};

/// Stack-machine interpreter. Owns the function registry and the global
/// environment; calls always dispatch through the registry so rebinding
/// takes effect on the next call, never on active frames.
class VM {
 public:
  explicit VM(std::ostream& out);

  using NativeFn = std::function<Value(VM&, std::vector<Value>&)>;

  /// Install a native builtin under `name` in the global environment.
  void register_builtin(const std::string& name, NativeFn fn);

  void set_probe_sink(ProbeSink* sink) { sink_ = sink; }
  void set_trace(const TraceConfig& config) { trace_ = config; }
  const TraceConfig& trace_config() const { return trace_; }

  /// Lines and arcs observed so far (built from the collector's internal
  /// per-file storage on each call).
  TraceStore trace_store() const;

  /// Execute a root CodeObject in a fresh module frame (stores go to the
  /// global environment). Reentrant: native builtins may call back in.
  RunResult run(CodePtr root);

  /// Point a registry entry at new code; future calls use it, active frames
  /// finish on the code they started with.
  void rebind(uint32_t registry_id, CodePtr new_code);

  /// Sweep the registry, replacing every occurrence of a key of `old_to_new`.
  void rebind_all(const std::unordered_map<const CodeObject*, CodePtr>& old_to_new);

  const Value* global(const std::string& name) const;
  const std::unordered_map<std::string, Value>& globals() const { return globals_; }

  /// Debug aid: expected landing offset for an eliminated probe's
  /// JUMP_FORWARD; the interpreter checks each registered jump it executes.
  void expect_probe_skip(const CodeObject* code, uint32_t jump_offset,
                         uint32_t expected_next);
  void set_check_probe_skips(bool on) { check_skips_ = on; }
  int probe_skip_violations() const { return skip_violations_; }

 private:
  struct RegistryEntry {
    CodePtr code;     // null for native entries
    NativeFn native;
    std::string name;
  };

  friend class Interp;

  std::ostream& out_;
  ProbeSink* sink_ = nullptr;
  TraceConfig trace_;
  // per-file fast storage for the collector; one flag per line, arcs packed
  // as (from << 32 | to)
  struct FileTrace {
    std::vector<uint8_t> lines;
    std::unordered_set<uint64_t> arcs;
  };
  std::unordered_map<std::string, FileTrace> file_trace_;
  std::vector<RegistryEntry> registry_;
  std::unordered_map<const CodeObject*, uint32_t> registry_ids_;
  std::unordered_map<std::string, Value> globals_;

  bool check_skips_ = false;
  int skip_violations_ = 0;
  std::unordered_map<const CodeObject*, std::unordered_map<uint32_t, uint32_t>>
      skip_expect_;

  // per-code caches (line per unit, param name slots, stack depth per unit)
  struct CodeCache {
    std::vector<int> unit_lines;
    std::vector<int> param_slots;
    std::vector<int> depths;  // filled lazily, first time the code unwinds
    FileTrace* trace = nullptr;  // resolved on the first traced transition
  };
  std::unordered_map<const CodeObject*, CodeCache> cache_;
  CodeCache& cache_for(const CodeObject* co);

  uint32_t function_id(CodePtr code);
};

}  // namespace decov
