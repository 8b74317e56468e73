// Per-step cost of each scheme on the experiment grids.

#include <benchmark/benchmark.h>

#include "gradflow/harness.hpp"
#include "gradflow/schemes.hpp"

using namespace gradflow;

namespace {

SchemeConfig config(SchemeKind kind, bool reduced, Flow flow) {
  SchemeConfig c;
  c.scheme = kind;
  if (kind == SchemeKind::IEF) c.aux = MonoAux::power(7);
  c.params.flow = flow;
  c.params.a1 = 3.0;
  c.reduced = reduced;
  return c;
}

void run_step(benchmark::State& st, SchemeKind kind, bool reduced) {
  const int n = static_cast<int>(st.range(0));
  const Flow flow = st.range(1) ? Flow::CahnHilliard : Flow::AllenCahn;
  const SchemeConfig c = config(kind, reduced, flow);
  const GridSpec grid(n, n);
  const SchemeState s0 = init_state(make_initial(grid, {IcKind::SinCos}, c.params), c);
  for (auto _ : st) benchmark::DoNotOptimize(step(s0, c));
  st.SetLabel(std::string(to_string(flow)));
}

void BM_IecBlock(benchmark::State& st) { run_step(st, SchemeKind::IEC, false); }
void BM_IecReduced(benchmark::State& st) { run_step(st, SchemeKind::IEC, true); }
void BM_IefBlock(benchmark::State& st) { run_step(st, SchemeKind::IEF, false); }
void BM_IefReduced(benchmark::State& st) { run_step(st, SchemeKind::IEF, true); }
void BM_Csav(benchmark::State& st) { run_step(st, SchemeKind::CSAV, false); }

void grids(benchmark::internal::Benchmark* b) {
  for (int n : {16, 40, 64})
    for (int flow : {0, 1}) b->Args({n, flow});
  b->Unit(benchmark::kMillisecond);
}

}  // namespace

BENCHMARK(BM_IecBlock)->Apply(grids);
BENCHMARK(BM_IecReduced)->Apply(grids);
BENCHMARK(BM_IefBlock)->Apply(grids);
BENCHMARK(BM_IefReduced)->Apply(grids);
BENCHMARK(BM_Csav)->Apply(grids);
BENCHMARK_MAIN();
