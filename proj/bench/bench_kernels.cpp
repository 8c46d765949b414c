#include <benchmark/benchmark.h>

#include <vector>

#include "icedist/kernels.hpp"
#include "icedist/mcmc.hpp"
#include "icedist/rng.hpp"
#include "icedist/scm.hpp"

using namespace icedist;

namespace {

std::vector<double> normal_data(std::size_t n) {
    Rng rng(1);
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal(-15.0, 10.0);
    return v;
}

template <class F>
void kde_case(benchmark::State& state, F f) {
    const auto data = normal_data(static_cast<std::size_t>(state.range(0)));
    const double h = silverman_bandwidth(data);
    const auto grid = kde_grid(data, h, 512);
    for (auto _ : state) benchmark::DoNotOptimize(f(data, h, grid));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_kde_serial(benchmark::State& s) { kde_case(s, kde_serial); }
void BM_kde(benchmark::State& s) { kde_case(s, kde); }
void BM_kde_cell_serial(benchmark::State& s) { kde_case(s, kde_cell_serial); }
void BM_kde_cell(benchmark::State& s) { kde_case(s, kde_cell); }

template <class F>
void band_case(benchmark::State& state, F f) {
    Rng rng(2);
    Eigen::MatrixXd curves(state.range(0), 512);
    for (Eigen::Index i = 0; i < curves.size(); ++i) curves.data()[i] = rng.uniform();
    for (auto _ : state) benchmark::DoNotOptimize(f(curves, 0.025, 0.975));
}

void BM_band_serial(benchmark::State& s) { band_case(s, pointwise_band_serial); }
void BM_band(benchmark::State& s) { band_case(s, pointwise_band); }

template <class F>
void mixture_case(benchmark::State& state, F f) {
    Rng rng(3);
    std::vector<GaussianMixture> draws;
    for (long i = 0; i < state.range(0); ++i) {
        draws.emplace_back(rng.dirichlet(std::vector<double>(5, 1.0)),
                           std::vector<double>{rng.normal(-30, 5), rng.normal(-15, 5), rng.normal(0, 5),
                                               rng.normal(10, 5), rng.normal(20, 5)},
                           std::vector<double>{5.0, 6.0, 7.0, 8.0, 9.0});
    }
    const std::vector<double> probs = {0.05, 0.25, 0.5, 0.75, 0.95};
    for (auto _ : state) benchmark::DoNotOptimize(f(draws, 0.0, probs));
}

void BM_mixtures_serial(benchmark::State& s) { mixture_case(s, summarize_mixtures_serial); }
void BM_mixtures(benchmark::State& s) { mixture_case(s, summarize_mixtures); }

template <class F>
void simulate_case(benchmark::State& state, F f) {
    const ScmConfig cfg = scm_preset("fig3-mixture");
    for (auto _ : state) benchmark::DoNotOptimize(f(cfg, static_cast<std::size_t>(state.range(0)), Rng(4)));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_simulate_serial(benchmark::State& s) { simulate_case(s, simulate_serial); }
void BM_simulate(benchmark::State& s) { simulate_case(s, simulate); }

template <class F>
void chains_case(benchmark::State& state, F f) {
    const Simulation sim = simulate(scm_preset("fig3-gaussian"), 1000, Rng(5));
    ChainConfig cc;
    cc.n_chains = 4;
    cc.n_burn = 0;
    cc.n_iter = 500;
    cc.thin = 5;
    cc.z1_every = 0;
    const ModelSpec model = ModelSpec::defaults_for(ModelKind::MixtureLmm);
    for (auto _ : state) benchmark::DoNotOptimize(f(sim.data, model, PriorSpec{}, cc));
}

void BM_chains_serial(benchmark::State& s) { chains_case(s, run_chains_serial); }
void BM_chains(benchmark::State& s) { chains_case(s, run_chains); }

}  // namespace

BENCHMARK(BM_kde_serial)->Arg(1 << 12)->Arg(1 << 16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_kde)->Arg(1 << 12)->Arg(1 << 16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_kde_cell_serial)->Arg(1 << 12)->Arg(1 << 16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_kde_cell)->Arg(1 << 12)->Arg(1 << 16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_band_serial)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_band)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_mixtures_serial)->Arg(4000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_mixtures)->Arg(4000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_simulate_serial)->Arg(1 << 20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_simulate)->Arg(1 << 20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_chains_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_chains)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
