#include <benchmark/benchmark.h>

#include "phasetomo/dynamics.hpp"
#include "phasetomo/ensemble.hpp"
#include "phasetomo/potential.hpp"
#include "phasetomo/quantum.hpp"
#include "phasetomo/tomography.hpp"

using namespace phasetomo;

static void BM_Kernel(benchmark::State& st) {
  double x = 0.0, acc = 0.0;
  for (auto _ : st) {
    acc += kernel_K(x, 0.43e6);
    x += 1e-8;
    if (x > 1e-4) x = -1e-4;
  }
  benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_Kernel);

static void BM_Fbp(benchmark::State& st) {
  PhysicalParams pp;
  const auto ens = sample_ensemble(pp, 85e-6, 3000, 1);
  const auto sino = make_sinogram(ens, uniform_angles(13), symmetric_axis(150e-6, 150));
  const auto axis = symmetric_axis(150e-6, static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(fbp_reconstruct(sino, 0.43e6, axis, axis));
}
BENCHMARK(BM_Fbp)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

static void BM_Mlem(benchmark::State& st) {
  PhysicalParams pp;
  const auto ens = sample_ensemble(pp, 85e-6, 3000, 1);
  const auto sino = make_sinogram(ens, uniform_angles(13), symmetric_axis(150e-6, 150));
  const auto axis = symmetric_axis(150e-6, 128);
  for (auto _ : st) benchmark::DoNotOptimize(mlem_reconstruct(sino, 10, axis, axis));
}
BENCHMARK(BM_Mlem)->Unit(benchmark::kMillisecond);

static void BM_Verlet(benchmark::State& st) {
  PhysicalParams pp;
  const auto pot = Potential1D::harmonic(pp).with_corrugation(synth_paper_corrugation(1.0));
  const auto ens = sample_ensemble(pp, 85e-6, static_cast<std::size_t>(st.range(0)), 1);
  for (auto _ : st) benchmark::DoNotOptimize(integrate(ens, pot, 10e-6, 0.01));
  st.SetItemsProcessed(st.iterations() * st.range(0) * 1000);
}
BENCHMARK(BM_Verlet)->Arg(1000)->Arg(3000)->Unit(benchmark::kMillisecond);

static void BM_SplitStep(benchmark::State& st) {
  PhysicalParams pp;
  const auto psi0 = init_superposition(pp, oscillator_length(pp), 3.14159e6, static_cast<std::size_t>(st.range(0)),
                                       -128e-6, 128e-6);
  SplitStepper stepper(psi0, Potential1D::harmonic(pp), 10e-6);
  auto psi = psi0;
  for (auto _ : st) stepper.advance(psi, 100);
  st.SetItemsProcessed(st.iterations() * 100);
}
BENCHMARK(BM_SplitStep)->Arg(2048)->Arg(4096)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
