#include <fingeo/birkhoff.hpp>
#include <fingeo/minmax.hpp>
#include <fingeo/parallel.hpp>

#include <benchmark/benchmark.h>

namespace {

using namespace fingeo;

const FinslerMetric& ellipsoid() {
  static const FinslerMetric m = make_ellipsoid(1.0, 1.1, 1.2);
  return m;
}

// One epoch of the dim-2 family flow, as in the min-max driver.
template <bool Parallel>
void BM_FamilyEpoch(benchmark::State& state) {
  const CircleFamily fam = family(2, 2, 64);
  FlowParams params;
  params.rho0 = 0.5;
  for (auto _ : state) {
    auto run = [&](std::size_t i) { return evolve_for(ellipsoid(), fam.member(i), params, 0.05).loop; };
    auto out = Parallel ? parallel_map(fam.members.size(), run) : serial_map(fam.members.size(), run);
    benchmark::DoNotOptimize(out);
  }
}

// Return map on an 8 x 8 grid of the annulus over the x1x2 ellipse.
template <bool Parallel>
void BM_ReturnGrid(benchmark::State& state) {
  static const AnnulusChart chart = [] {
    const GeodesicState s = unit_state(ellipsoid(), Vec3::UnitX(), Vec3::UnitY());
    return build_chart(ellipsoid(), refine_closed_geodesic(ellipsoid(), s, 6.6));
  }();
  const int n = 8;
  for (auto _ : state) {
    auto run = [&](std::size_t k) {
      const double t = chart.period() * static_cast<double>(k / n) / n;
      const double s = -0.8 + 1.6 * static_cast<double>(k % n) / (n - 1);
      return return_map(chart, t, s).tau;
    };
    auto out = Parallel ? parallel_map(n * n, run) : serial_map(n * n, run);
    benchmark::DoNotOptimize(out);
  }
}

BENCHMARK(BM_FamilyEpoch<false>)->Name("family_epoch/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FamilyEpoch<true>)->Name("family_epoch/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ReturnGrid<false>)->Name("return_grid/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ReturnGrid<true>)->Name("return_grid/parallel")->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
