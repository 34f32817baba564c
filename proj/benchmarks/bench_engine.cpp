// Microbenchmarks for the hot paths: the emulated analog MVM at several
// operand sizes, the bit-sliced composite MVM, and full mixed-precision
// refinement on the electrostatic test system.

#include <benchmark/benchmark.h>

#include <random>

#include "homodyne/backend.hpp"
#include "homodyne/em_problems.hpp"
#include "homodyne/emulator.hpp"
#include "homodyne/rng.hpp"
#include "homodyne/solvers.hpp"
#include "homodyne/tensor.hpp"

namespace {

using namespace homodyne;

ComplexMatrix random_matrix(std::size_t n, std::uint64_t seed) {
  auto rng = make_rng(seed, 1);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  ComplexMatrix a(n, n);
  for (cplx& v : a.data) v = cplx(dist(rng), dist(rng));
  return a;
}

ComplexVector random_vector(std::size_t n, std::uint64_t seed) {
  auto rng = make_rng(seed, 2);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  ComplexVector x(n);
  for (cplx& v : x) v = cplx(dist(rng), dist(rng));
  return x;
}

void BM_AnalogMvm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const ComplexMatrix a = random_matrix(n, 7);
  const ComplexVector x = random_vector(n, 8);
  EmulatorConfig cfg;
  cfg.bits = 8;
  cfg.sigma = 0.0078;
  std::uint64_t stream = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(analog_mvm(a, x, cfg, stream++));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(n * n));
}
BENCHMARK(BM_AnalogMvm)->Arg(64)->Arg(128)->Arg(256)->Arg(512);

void BM_ExactMvm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const ComplexMatrix a = random_matrix(n, 7);
  const ComplexVector x = random_vector(n, 8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mvm_exact(a, x));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(n * n));
}
BENCHMARK(BM_ExactMvm)->Arg(64)->Arg(256)->Arg(512);

void BM_BitslicedMvm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const ComplexMatrix a = random_matrix(n, 7);
  const ComplexVector x = random_vector(n, 8);
  EmulatorConfig cfg;
  cfg.sigma = 0.0078;
  BitslicedBackend backend(cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(backend.multiply(a, x));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(n * n) * 4);
}
BENCHMARK(BM_BitslicedMvm)->Arg(64)->Arg(256)->Arg(512);

void BM_ChargeRefine(benchmark::State& state) {
  WireChargeProblem p;
  const auto [a, b] = assemble_charge_system(p);
  EmulatorConfig cfg;
  cfg.bits = 6;
  cfg.sigma = 0.04;
  RefineConfig solver;
  solver.inner_kind = InnerKind::Pcg;
  solver.inner_tol = 0.03;
  for (auto _ : state) {
    AnalogBackend backend(cfg);
    benchmark::DoNotOptimize(refine(a, b, backend, solver));
  }
}
BENCHMARK(BM_ChargeRefine);

}  // namespace

BENCHMARK_MAIN();
