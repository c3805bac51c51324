#include <benchmark/benchmark.h>

#include <cstdint>
#include <numbers>
#include <vector>

#include "homoglab/ergodics.hpp"
#include "homoglab/fem2d.hpp"
#include "homoglab/fields.hpp"
#include "homoglab/homog.hpp"
#include "homoglab/solve1d.hpp"

using namespace homoglab;

namespace {

const fields::Checkerboard2DSpec kFourPhase{
    fields::TileLaw({1.0, 10.0, 50.0, 100.0}, {0.4, 0.2, 0.2, 0.2}), false, {}};

void BM_TileWord(benchmark::State& state) {
  std::int64_t i = 0;
  for (auto _ : state) {
    const std::int64_t tile[2] = {i, i + 1};
    benchmark::DoNotOptimize(fields::tile_word(fields::Seed{42}, tile));
    ++i;
  }
}
BENCHMARK(BM_TileWord);

void BM_CatMapOrbit(benchmark::State& state) {
  const ergodics::TorusPoint start{1.0 / 32.0, std::numbers::pi / 32.0};
  for (auto _ : state) benchmark::DoNotOptimize(ergodics::orbit(start, state.range(0)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CatMapOrbit)->Arg(1000)->Arg(100000);

void BM_SolveExact1D(benchmark::State& state) {
  const auto f = solve1d::Source1D::polynomial({3.0, -6.0});
  const auto a = fields::Coefficient1D::periodic_sine(fields::ScaleParameter(1.0 / 256.0));
  for (auto _ : state)
    benchmark::DoNotOptimize(solve1d::solve_exact(a, f, {0.0, 1.0}, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_SolveExact1D)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);

void BM_Dirichlet2D(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  const auto mesh = fem2d::StructuredMesh::unit_square(n);
  const auto r = fields::make_realization(kFourPhase, fields::Seed{1});
  const auto f = fem2d::gaussian_source(5.0, 0.05);
  for (auto _ : state) benchmark::DoNotOptimize(fem2d::solve_dirichlet(mesh, r, fields::ScaleParameter(0.125), f));
}
BENCHMARK(BM_Dirichlet2D)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_EffectiveTensorSingle(benchmark::State& state) {
  const auto r = fields::make_realization(kFourPhase, fields::Seed{3});
  const auto L = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(homog::effective_tensor_single(r, L));
}
BENCHMARK(BM_EffectiveTensorSingle)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
