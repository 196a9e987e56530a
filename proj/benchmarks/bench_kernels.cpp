// Serial reference vs OpenMP kernels for the simulation hot loops.

#include <benchmark/benchmark.h>

#include <cmath>

#include "dpsm/accuracy.hpp"
#include "dpsm/matrix_ext.hpp"
#include "dpsm/montecarlo.hpp"

namespace {

dpsm::LayeredCode make_code() {
    dpsm::LayeredParams p;
    p.t = 2;
    p.x = 1.0;
    p.alpha1 = 1e-4;
    p.alpha2 = std::pow(1e-4, 2.0 / 3.0);
    return dpsm::build_layered(p, dpsm::LayeredNoise::AnalysisUnitGaussian, 1.0);
}

void BM_SimulateLmse(benchmark::State& state) {
    const dpsm::LayeredCode lc = make_code();
    const Eigen::VectorXd dec = dpsm::snr_a(lc.code).decoder_weights;
    const bool parallel = state.range(0) != 0;
    dpsm::SimOptions opt{8, parallel};
    const std::uint64_t n = 200'000;
    for (auto _ : state) {
        const dpsm::SimResult res =
            dpsm::simulate_lmse(lc.code, dec, dpsm::DataLaw::gaussian(1.0), n, 42, opt);
        benchmark::DoNotOptimize(res.mse);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(n) * state.iterations());
}

void BM_SimulateMatrix(benchmark::State& state) {
    const dpsm::LayeredCode lc = make_code();
    const bool parallel = state.range(0) != 0;
    dpsm::SimOptions opt{8, parallel};
    const std::uint64_t n = 5'000;
    for (auto _ : state) {
        const dpsm::MatrixSimResult res = dpsm::simulate_matrix_lmse(
            lc.code, dpsm::MatrixDims{3, 3, 3}, dpsm::DataLaw::gaussian(1.0), n, 42, opt);
        benchmark::DoNotOptimize(res.worst_entry.mse);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(n) * state.iterations());
}

} // namespace

BENCHMARK(BM_SimulateLmse)->Arg(0)->Name("simulate_lmse/serial");
BENCHMARK(BM_SimulateLmse)->Arg(1)->Name("simulate_lmse/openmp");
BENCHMARK(BM_SimulateMatrix)->Arg(0)->Name("simulate_matrix/serial");
BENCHMARK(BM_SimulateMatrix)->Arg(1)->Name("simulate_matrix/openmp");

BENCHMARK_MAIN();
