#include <benchmark/benchmark.h>

#include "migdirac/asymptotic.hpp"
#include "migdirac/hamiltonian.hpp"
#include "migdirac/model.hpp"
#include "migdirac/pde_solver.hpp"

using namespace migdirac;

namespace {

PatchModel dimorphic() { return mirror_model(3.0, 1.0, 1.0, 1e-3, 2.0); }

Eigen::VectorXd pressure(double v, Eigen::Index K) { return Eigen::VectorXd::Constant(K, v); }

void BM_ImexStep(benchmark::State& state) {
  const PatchModel m = dimorphic();
  const GridSpec g = GridSpec::make(2.0, static_cast<std::size_t>(state.range(0)));
  const std::vector<InitialBump> b{{-0.3, 1.0, 0.05}, {0.3, 1.0, 0.05}};
  DensityState s = init_state(m, g, b);
  ImexStepper stepper(m, g, 1e-3);
  for (auto _ : state) {
    stepper.advance(s);
    benchmark::DoNotOptimize(s.density[0].data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * 2);
}
BENCHMARK(BM_ImexStep)->Arg(201)->Arg(801)->Arg(3201);

void BM_PerronClosedForm(benchmark::State& state) {
  Eigen::MatrixXd A(2, 2);
  A << -3.7, 1.0, 1.0, -0.3;
  for (auto _ : state) benchmark::DoNotOptimize(perron_pair(A).lambda);
}
BENCHMARK(BM_PerronClosedForm);

void BM_PerronPowerIteration(benchmark::State& state) {
  const auto K = static_cast<Eigen::Index>(state.range(0));
  Eigen::MatrixXd A = Eigen::MatrixXd::Constant(K, K, 0.5);
  for (Eigen::Index i = 0; i < K; ++i) A(i, i) = -1.0 - 0.3 * static_cast<double>(i);
  for (auto _ : state) benchmark::DoNotOptimize(perron_pair(A).lambda);
}
BENCHMARK(BM_PerronPowerIteration)->Arg(3)->Arg(8)->Arg(32);

void BM_Landscape(benchmark::State& state) {
  const PatchModel m = dimorphic();
  for (auto _ : state) benchmark::DoNotOptimize(landscape(m, pressure(2.25, 2), 801).max_value);
}
BENCHMARK(BM_Landscape);

void BM_SolveSymmetric(benchmark::State& state) {
  const PatchModel m = dimorphic();
  for (auto _ : state) benchmark::DoNotOptimize(solve_symmetric(m, {0.5, 5.0}).pressure);
}
BENCHMARK(BM_SolveSymmetric)->Unit(benchmark::kMillisecond);

void BM_SolveGeneralChain(benchmark::State& state) {
  Eigen::MatrixXd nu(3, 3);
  nu << 0, 1, 0, 1, 0, 1, 0, 1, 0;
  const PatchModel m(2.0, 1e-3,
                     {GrowthSpec::quadratic(-1, -2, 2, 1), GrowthSpec::quadratic(-1, 0, 3, 1),
                      GrowthSpec::quadratic(-1, 2, 2, 1)},
                     std::vector<WeightSpec>(3, WeightSpec::constant(1.0)), conservative_diagonal(nu));
  for (auto _ : state) benchmark::DoNotOptimize(solve_general(m, pressure(1.0, 3)).pressure);
}
BENCHMARK(BM_SolveGeneralChain)->Unit(benchmark::kMillisecond);

}  // namespace
