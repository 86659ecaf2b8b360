// Part of decov, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#include "decov/loader.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "decov/compiler.hpp"
#include "decov/parser.hpp"
#include "decov/serialize.hpp"
#include "decov/transform.hpp"

namespace fs = std::filesystem;

namespace decov {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

Loader::Loader(VM& vm, RunKind kind, LoadPolicy policy, CoverageEngine* engine)
    : vm_(vm), kind_(kind), policy_(std::move(policy)), engine_(engine) {
  if (kind_ == RunKind::Probe && !engine_)
    throw std::logic_error("probe mode needs a coverage engine");
  vm_.register_builtin("load", [this](VM&, std::vector<Value>& args) -> Value {
    if (args.size() != 1) throw MiniRaise{};
    auto* path = std::get_if<std::string>(&args[0].v);
    if (!path) throw MiniRaise{};
    std::string abs = resolve(*path);
    for (auto& active : executing_) {
      if (active == abs) {
        std::string chain;
        for (auto& e : executing_) chain += e + " -> ";
        throw VmFaultError{"load: cycle detected: " + chain + abs};
      }
    }
    if (executed_.count(abs)) return Value{};
    CodePtr root;
    try {
      root = prepare(abs);
    } catch (const LoadError& e) {
      throw VmFaultError{std::string("load: ") + e.what()};
    }
    RunResult r = execute(abs, std::move(root));
    if (r.status == ExitStatus::UncaughtException) throw MiniRaise{};
    if (r.status == ExitStatus::VmFault) throw VmFaultError{r.fault};
    return Value{};
  });
}

std::string Loader::resolve(const std::string& path) const {
  fs::path p(path);
  if (p.is_relative() && !base_dir_.empty()) p = fs::path(base_dir_) / p;
  return fs::absolute(p).lexically_normal().string();
}

bool Loader::included(const std::string& abs) const {
  for (auto& prefix : policy_.include_prefixes)
    if (abs.compare(0, prefix.size(), prefix) == 0) return true;
  return false;
}

CodePtr Loader::prepare(const std::string& abs) {
  auto it = cache_.find(abs);
  if (it != cache_.end()) return it->second;

  CodePtr root;
  if (ends_with(abs, ".minic")) {
    if (kind_ != RunKind::Plain)
      throw LoadError(abs + ": compiled modules can only run without coverage");
    try {
      root = load_minic(abs);
    } catch (const SerializeError& e) {
      throw LoadError(abs + ": " + e.what());
    }
    if (has_probes(*root))
      throw LoadError(abs + ": already instrumented; refusing to run");
  } else {
    std::string text = read_file(abs);
    AstPtr ast;
    try {
      ast = parse(text, abs);
    } catch (const ParseError& e) {
      throw LoadError(abs + ": " + e.what());
    }
    try {
      if (kind_ == RunKind::Probe && included(abs)) {
        AstPtr transformed = transform(*ast);
        CoverableUniverse mod_universe = enumerate_universe(*transformed);
        CodePtr marked = compile(*transformed);
        auto [instrumented, map] =
            insert_probes(*marked, mod_universe, policy_.mode, engine_->next_probe_id());
        universe_.merge(mod_universe);
        engine_->add_module(abs, instrumented, std::move(map));
        root = instrumented;
      } else if (kind_ == RunKind::Plain) {
        root = strip_markers(*compile(*transform(*ast)));
      } else {
        // trace baselines and non-included modules run the plain tree
        root = compile(*ast);
        if (kind_ == RunKind::Trace && included(abs))
          universe_.merge(enumerate_universe(*transform(*ast)));
      }
    } catch (const CompileError& e) {
      throw LoadError(abs + ": " + e.what());
    } catch (const InstrumentError& e) {
      throw LoadError(abs + ": " + e.what());
    }
  }
  cache_[abs] = root;
  return root;
}

RunResult Loader::execute(const std::string& abs, CodePtr root) {
  executed_.insert(abs);
  executing_.push_back(abs);
  RunResult r = vm_.run(std::move(root));
  executing_.pop_back();
  return r;
}

RunResult Loader::run_main(const std::string& path) {
  std::string abs = fs::absolute(path).lexically_normal().string();
  base_dir_ = fs::path(abs).parent_path().string();
  if (policy_.include_prefixes.empty())
    policy_.include_prefixes.push_back(base_dir_ + "/");
  CodePtr root = prepare(abs);
  return execute(abs, std::move(root));
}

}  // namespace decov
