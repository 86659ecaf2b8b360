// Part of decov, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <sstream>
#include <string>

#include "decov/compiler.hpp"
#include "decov/instrument.hpp"
#include "decov/parser.hpp"
#include "decov/transform.hpp"
#include "decov/universe.hpp"
#include "decov/vm.hpp"

namespace {

using namespace decov;

const std::string kKernel = R"(def inner(n) {
  t = 0
  for i in range(n) {
    if i % 2 == 0 {
      t = t + i
    } else {
      t = t - 1
    }
  }
  return t
}
total = inner(200)
print(total)
)";

void BM_Parse(benchmark::State& state) {
  for (auto _ : state) {
    auto ast = parse(kKernel, "bench.mini");
    benchmark::DoNotOptimize(ast);
  }
}
BENCHMARK(BM_Parse);

void BM_Transform(benchmark::State& state) {
  auto ast = parse(kKernel, "bench.mini");
  for (auto _ : state) {
    auto t = transform(*ast);
    benchmark::DoNotOptimize(t);
  }
}
BENCHMARK(BM_Transform);

void BM_Compile(benchmark::State& state) {
  auto t = transform(*parse(kKernel, "bench.mini"));
  for (auto _ : state) {
    auto code = compile(*t);
    benchmark::DoNotOptimize(code);
  }
}
BENCHMARK(BM_Compile);

void BM_InsertProbes(benchmark::State& state) {
  auto t = transform(*parse(kKernel, "bench.mini"));
  auto code = compile(*t);
  auto universe = enumerate_universe(*t);
  for (auto _ : state) {
    auto [probed, map] = insert_probes(*code, universe, InstrumentMode::LineAndBranch);
    benchmark::DoNotOptimize(probed);
  }
}
BENCHMARK(BM_InsertProbes);

// VM dispatch on the plain (marker-stripped) kernel.
void BM_VmDispatch(benchmark::State& state) {
  auto t = transform(*parse(kKernel, "bench.mini"));
  auto code = strip_markers(*compile(*t));
  for (auto _ : state) {
    std::ostringstream sink;
    VM vm(sink);
    auto r = vm.run(code);
    if (r.status != ExitStatus::Ok) state.SkipWithError("vm fault");
    benchmark::DoNotOptimize(sink);
  }
}
BENCHMARK(BM_VmDispatch);

// Same kernel with live probes reporting into a counting sink.
struct CountSink : ProbeSink {
  uint64_t n = 0;
  void fire(uint32_t) override { ++n; }
};

void BM_VmDispatchProbed(benchmark::State& state) {
  auto t = transform(*parse(kKernel, "bench.mini"));
  auto universe = enumerate_universe(*t);
  auto [probed, map] = insert_probes(*compile(*t), universe, InstrumentMode::LineAndBranch);
  for (auto _ : state) {
    std::ostringstream sink;
    VM vm(sink);
    CountSink probes;
    vm.set_probe_sink(&probes);
    auto r = vm.run(probed);
    if (r.status != ExitStatus::Ok) state.SkipWithError("vm fault");
    benchmark::DoNotOptimize(probes.n);
  }
}
BENCHMARK(BM_VmDispatchProbed);

}  // namespace

BENCHMARK_MAIN();
