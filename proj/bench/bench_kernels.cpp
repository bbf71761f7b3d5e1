// Serial reference against the OpenMP and FFT paths.

#include "kacgame/convolution.hpp"
#include "kacgame/ide.hpp"
#include "kacgame/kernel.hpp"
#include "kacgame/meanfield.hpp"
#include "kacgame/micro.hpp"
#include "kacgame/stats.hpp"

#include <benchmark/benchmark.h>
#include <omp.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

using namespace kacgame;
using std::numbers::pi;

namespace {

struct Field {
    Grid grid;
    DiscreteKernel jd;
    std::vector<double> in;
    std::vector<double> out;
};

Field make_field(int n, int dim)
{
    Grid g = dim == 1 ? Grid::periodic_1d(n, -pi, pi) : Grid::periodic_2d(n, -pi, pi);
    Field f{g, grid_discretize(Kernel::gaussian(dim == 1 ? 2.0 : 15.0, dim), g), {}, {}};
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    f.in.resize(g.size());
    f.out.resize(g.size());
    for (auto& v : f.in) {
        v = u(rng);
    }
    return f;
}

void BM_ConvolveSerial(benchmark::State& state)
{
    auto f = make_field(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
    for (auto _ : state) {
        conv::direct_serial(f.jd, f.grid, f.in, f.out);
        benchmark::DoNotOptimize(f.out.data());
    }
}

void BM_ConvolveParallel(benchmark::State& state)
{
    auto f = make_field(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
    for (auto _ : state) {
        conv::direct_parallel(f.jd, f.grid, f.in, f.out);
        benchmark::DoNotOptimize(f.out.data());
    }
    state.counters["threads"] = omp_get_max_threads();
}

void BM_ConvolveFft(benchmark::State& state)
{
    auto f = make_field(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
    const conv::FftConvolver c(f.jd, f.grid);
    for (auto _ : state) {
        c.apply(f.in, f.out);
        benchmark::DoNotOptimize(f.out.data());
    }
}

// One RK4 right-hand side per iteration for each convolution path.
void BM_IdeRhs(benchmark::State& state)
{
    const auto method = static_cast<ConvolutionMethod>(state.range(1));
    const int n = static_cast<int>(state.range(0));
    const Grid g = Grid::periodic_1d(n, -pi, pi);
    const IdeSystem sys(Game::coordination(20.0 / 3.0, 10.0 / 3.0), RateRule::logit(), Dynamic::Logit,
                        grid_discretize(Kernel::gaussian(2.0), g), g, method);
    std::vector<double> p(g.size());
    for (std::size_t v = 0; v < p.size(); ++v) {
        p[v] = 0.5 + 0.4 * std::cos(g.coord(0, static_cast<int>(v)));
    }
    const auto f = DensityField::from_p(g, p);
    DensityField out(g, 2);
    for (auto _ : state) {
        sys.rhs(f, out);
        benchmark::DoNotOptimize(out.channel(0).data());
    }
}

// Independent lumped-chain replicas, serially and under OpenMP.
void lumped_replicas(int replicas, bool parallel)
{
    const Game game = Game::coordination(20.0 / 3.0, 10.0 / 3.0);
    const std::vector<double> rho{1.0 / 6.0, 5.0 / 6.0};
    std::vector<double> finals(static_cast<std::size_t>(replicas));
#pragma omp parallel for if (parallel) schedule(dynamic)
    for (int r = 0; r < replicas; ++r) {
        std::mt19937_64 rng(stats::child_seed(1, static_cast<std::uint64_t>(r)));
        auto st = AggregateState::from_density(rho, 256);
        run_lumped(st, RateRule::logit(), game, 2.0, rng);
        finals[static_cast<std::size_t>(r)] = st.eta(0);
    }
    benchmark::DoNotOptimize(finals.data());
}

void BM_LumpedReplicasSerial(benchmark::State& state)
{
    for (auto _ : state) {
        lumped_replicas(static_cast<int>(state.range(0)), false);
    }
}

void BM_LumpedReplicasParallel(benchmark::State& state)
{
    for (auto _ : state) {
        lumped_replicas(static_cast<int>(state.range(0)), true);
    }
    state.counters["threads"] = omp_get_max_threads();
}

} // namespace

BENCHMARK(BM_ConvolveSerial)->Args({256, 1})->Args({1024, 1})->Args({64, 2});
BENCHMARK(BM_ConvolveParallel)->Args({256, 1})->Args({1024, 1})->Args({64, 2});
BENCHMARK(BM_ConvolveFft)->Args({256, 1})->Args({1024, 1})->Args({64, 2});
BENCHMARK(BM_IdeRhs)
    ->Args({512, static_cast<int>(ConvolutionMethod::DirectSerial)})
    ->Args({512, static_cast<int>(ConvolutionMethod::DirectParallel)})
    ->Args({512, static_cast<int>(ConvolutionMethod::Fft)});
BENCHMARK(BM_LumpedReplicasSerial)->Arg(64);
BENCHMARK(BM_LumpedReplicasParallel)->Arg(64);

BENCHMARK_MAIN();
