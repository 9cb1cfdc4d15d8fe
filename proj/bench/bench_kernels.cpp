// Serial vs OpenMP node kernels on a 3D annulus.
#include "extasym/kernels.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <memory>

using namespace extasym;

namespace {

Field test_field(double h) {
  auto grid = std::make_shared<const AnnulusGrid>(3, 1.0, 9.0, h);
  return sample(grid, [](const Point& x) { return std::sin(0.3 * x(0)) * std::cos(0.2 * x(1)) + 0.1 * x(2) * x(2); });
}

const Field& field_for(int level) {
  static const Field coarse = test_field(0.5), fine = test_field(0.25);
  return level == 0 ? coarse : fine;
}

void BM_hessian_field(benchmark::State& st, Exec exec) {
  const Field& f = field_for(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(hessian_field(f, exec));
  st.SetItemsProcessed(st.iterations() * static_cast<long>(f.grid().interior_count()));
}

void BM_assemble_residual(benchmark::State& st, Exec exec) {
  const Field& f = field_for(static_cast<int>(st.range(0)));
  const OperatorSpec op = OperatorSpec::pucci_plus(1.0, 2.0);
  for (auto _ : st) benchmark::DoNotOptimize(assemble_residual(op, f, exec));
  st.SetItemsProcessed(st.iterations() * static_cast<long>(f.grid().interior_count()));
}

}  // namespace

BENCHMARK_CAPTURE(BM_hessian_field, serial, Exec::Serial)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_hessian_field, parallel, Exec::Parallel)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_assemble_residual, serial, Exec::Serial)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_assemble_residual, parallel, Exec::Parallel)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
