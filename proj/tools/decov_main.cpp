// Part of decov, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "decov/bench.hpp"
#include "decov/compiler.hpp"
#include "decov/coverage.hpp"
#include "decov/disasm.hpp"
#include "decov/instrument.hpp"
#include "decov/loader.hpp"
#include "decov/parser.hpp"
#include "decov/report.hpp"
#include "decov/serialize.hpp"
#include "decov/transform.hpp"
#include "decov/universe.hpp"
#include "decov/vm.hpp"

namespace fs = std::filesystem;
using namespace decov;

namespace {

constexpr int kExitUsage = 64;
constexpr int kExitLoad = 65;
constexpr int kExitFault = 70;

std::string read_file_or_die(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "decov: cannot open " << path << "\n";
    std::exit(kExitLoad);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

AstPtr parse_or_die(const std::string& path) {
  try {
    return parse(read_file_or_die(path), fs::absolute(path).lexically_normal().string());
  } catch (const ParseError& e) {
    std::cerr << "decov: " << path << ": " << e.what() << "\n";
    std::exit(kExitLoad);
  }
}

struct RunFlags {
  std::string file;
  std::string mode = "probe";
  bool branch = false;
  int threshold = 0;  // 0: take DECOV_THRESHOLD / default
  std::vector<std::string> includes;
  std::string report_path;
  bool json = false;
};

int cmd_run(const RunFlags& flags) {
  LoadPolicy policy;
  policy.include_prefixes = flags.includes;
  policy.mode = flags.branch ? InstrumentMode::LineAndBranch : InstrumentMode::LineOnly;

  VM vm(std::cout);
  RunResult result;
  CoverageFacts facts;
  CoverableUniverse universe;
  bool have_report = false;
  const bool stats = [] {
    const char* v = std::getenv("DECOV_STATS");
    return v && *v && std::string(v) != "0";
  }();

  try {
    if (flags.mode == "none") {
      Loader loader(vm, RunKind::Plain, policy);
      result = loader.run_main(flags.file);
    } else if (flags.mode == "trace-null" || flags.mode == "trace-cov") {
      Loader loader(vm, RunKind::Trace, policy);
      TraceConfig tc;
      tc.mode = flags.mode == "trace-cov" ? TraceConfig::Mode::Collect
                                          : TraceConfig::Mode::Null;
      tc.path_prefix =
          flags.includes.empty()
              ? fs::absolute(flags.file).lexically_normal().parent_path().string()
              : flags.includes.front();
      vm.set_trace(tc);
      result = loader.run_main(flags.file);
      facts = facts_from_trace(vm.trace_store());
      universe = loader.universe();
      have_report = flags.mode == "trace-cov";
    } else if (flags.mode == "probe") {
      EngineConfig cfg = engine_config_from_env();
      if (flags.threshold > 0) cfg.threshold = (uint32_t)flags.threshold;
      CoverageEngine engine(vm, cfg);
      vm.set_probe_sink(&engine);
      if (cfg.debug_checks) vm.set_check_probe_skips(true);
      Loader loader(vm, RunKind::Probe, policy, &engine);
      result = loader.run_main(flags.file);
      facts = engine.snapshot();
      universe = loader.universe();
      have_report = true;
      if (stats)
        std::cerr << "decov-stats: fires=" << engine.fires()
                  << " batches=" << engine.batches()
                  << " verify_failures=" << engine.verify_failures().size()
                  << " skip_violations=" << vm.probe_skip_violations() << "\n";
      if (!engine.verify_failures().empty()) {
        for (auto& v : engine.verify_failures())
          std::cerr << "decov: verify: " << v << "\n";
        return kExitFault;
      }
    } else {
      std::cerr << "decov: unknown --mode " << flags.mode << "\n";
      return kExitUsage;
    }
  } catch (const LoadError& e) {
    std::cerr << "decov: " << e.what() << "\n";
    return kExitLoad;
  } catch (const std::runtime_error& e) {
    std::cerr << "decov: " << e.what() << "\n";
    return kExitLoad;
  }

  if (result.status == ExitStatus::VmFault) {
    std::cerr << "decov: " << result.fault << "\n";
    return result.fault.rfind("load: ", 0) == 0 ? kExitLoad : kExitFault;
  }

  if (have_report) {
    if (!flags.branch) universe.branches.clear();
    CoverageReport report = build_report(universe, facts);
    if (!flags.report_path.empty()) {
      std::ofstream out(flags.report_path, std::ios::binary);
      out << report_to_json(report);
      if (!out) {
        std::cerr << "decov: cannot write " << flags.report_path << "\n";
        return kExitLoad;
      }
    }
    if (flags.json)
      std::cout << report_to_json(report);
    else if (flags.report_path.empty())
      std::cout << report_to_text(report);
  }

  return (int)result.status;
}

int cmd_diff(const std::string& a, const std::string& b) {
  CoverageReport ra, rb;
  try {
    ra = report_from_json(read_file_or_die(a));
    rb = report_from_json(read_file_or_die(b));
  } catch (const ReportError& e) {
    std::cerr << "decov: " << e.what() << "\n";
    return kExitLoad;
  }
  auto diffs = diff_reports(ra, rb);
  if (diffs.empty()) {
    std::cout << "reports identical\n";
    return 0;
  }
  for (auto& d : diffs) std::cout << d << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"decov: line and branch coverage for Mini programs"};
  app.require_subcommand(1);

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "execute a program under a coverage mode");
  run->add_option("file", run_flags.file, "program (.mini or .minic)")->required();
  run->add_option("--mode", run_flags.mode, "none|trace-null|trace-cov|probe");
  run->add_flag("--branch", run_flags.branch, "collect branch coverage too");
  run->add_option("--threshold", run_flags.threshold, "de-instrumentation threshold");
  run->add_option("--include", run_flags.includes, "instrument paths with this prefix");
  run->add_option("--report", run_flags.report_path, "write JSON report here");
  run->add_flag("--json", run_flags.json, "print the report as JSON");

  std::string bench_dir, bench_bin;
  int bench_runs = 5;
  bool bench_json_out = false;
  auto* bench = app.add_subcommand("bench", "compare execution modes on a suite");
  bench->add_option("suite", bench_dir, "directory of .mini programs")->required();
  bench->add_option("--runs", bench_runs, "runs per mode (>=5)");
  bench->add_option("--bin", bench_bin, "decov binary to spawn (default: self)");
  bench->add_flag("--json", bench_json_out, "emit JSON instead of a table");

  std::string dis_file;
  bool dis_plain = false, dis_instrument = false;
  auto* dis = app.add_subcommand("dis", "disassemble compiled form");
  dis->add_option("file", dis_file, ".mini or .minic file")->required();
  dis->add_flag("--plain", dis_plain, "compile without branch transformation");
  dis->add_flag("--instrument", dis_instrument, "insert probes first");

  std::string ast_file;
  bool ast_transform = false;
  auto* dump = app.add_subcommand("dump-ast", "print the syntax tree");
  dump->add_option("file", ast_file, ".mini file")->required();
  dump->add_flag("--transform", ast_transform, "apply the branch transformation");

  std::string in_file, out_file;
  bool inst_branch = true;
  auto* inst = app.add_subcommand("instrument", "write instrumented bytecode");
  inst->add_option("file", in_file, ".mini file")->required();
  inst->add_option("-o,--output", out_file, "output .minic path")->required();
  inst->add_flag("--branch,!--no-branch", inst_branch, "include branch probes");

  std::string cc_in, cc_out;
  auto* comp = app.add_subcommand("compile", "write compiled bytecode");
  comp->add_option("file", cc_in, ".mini file")->required();
  comp->add_option("-o,--output", cc_out, "output .minic path")->required();

  std::string diff_a, diff_b;
  auto* diff = app.add_subcommand("diff", "compare two JSON reports");
  diff->add_option("a", diff_a, "first report")->required();
  diff->add_option("b", diff_b, "second report")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*run) return cmd_run(run_flags);
    if (*bench) {
      BenchConfig cfg;
      cfg.decov_bin = bench_bin.empty() ? fs::read_symlink("/proc/self/exe").string()
                                        : bench_bin;
      cfg.runs = bench_runs;
      auto rows = run_bench(bench_dir, cfg);
      std::cout << (bench_json_out ? bench_json(rows) : bench_table(rows));
      return 0;
    }
    if (*dis) {
      CodePtr code;
      if (dis_file.size() > 6 && dis_file.substr(dis_file.size() - 6) == ".minic") {
        code = load_minic(dis_file);
      } else {
        AstPtr ast = parse_or_die(dis_file);
        AstPtr tree = dis_plain ? ast : transform(*ast);
        code = compile(*tree);
        if (dis_instrument) {
          CoverableUniverse universe = enumerate_universe(*tree);
          code = insert_probes(*code, universe, InstrumentMode::LineAndBranch).first;
        }
      }
      std::cout << disassemble(*code);
      return 0;
    }
    if (*dump) {
      AstPtr ast = parse_or_die(ast_file);
      if (ast_transform) ast = transform(*ast);
      std::cout << to_sexpr(*ast) << "\n";
      return 0;
    }
    if (*inst) {
      AstPtr ast = parse_or_die(in_file);
      AstPtr tree = transform(*ast);
      CoverableUniverse universe = enumerate_universe(*tree);
      CodePtr code = compile(*tree);
      auto mode = inst_branch ? InstrumentMode::LineAndBranch : InstrumentMode::LineOnly;
      save_minic(out_file, *insert_probes(*code, universe, mode).first);
      return 0;
    }
    if (*comp) {
      AstPtr ast = parse_or_die(cc_in);
      save_minic(cc_out, *compile(*transform(*ast)));
      return 0;
    }
    if (*diff) return cmd_diff(diff_a, diff_b);
  } catch (const std::exception& e) {
    std::cerr << "decov: " << e.what() << "\n";
    return kExitLoad;
  }
  return kExitUsage;
}
