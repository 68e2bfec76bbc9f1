#include "regbal/experiments.hpp"
#include "regbal/parallel.hpp"

#include <benchmark/benchmark.h>

using namespace regbal;

namespace {

struct Fixture {
    Design design;
    SimulatedData sample;

    explicit Fixture(Eigen::Index features)
        : design(make_design(spec(features))),
          sample(simulate_dataset(design, derive_seed(7, 0))) {}

    static DgpSpec spec(Eigen::Index features) {
        DgpSpec s;
        s.features = features;
        return s;
    }
};

RieszConfig config(RieszLoss loss) {
    RieszConfig c;
    c.loss = loss;
    c.lambda = 0.01;
    if (loss != RieszLoss::Squared) c.solver = RieszSolver::ConvexIterative;
    return c;
}

void BM_RieszFit(benchmark::State& state, RieszLoss loss) {
    const Fixture fx(state.range(0));
    const RieszConfig c = config(loss);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_riesz(fx.sample.data, Functional::Ate, fx.design.map, c));
    }
}

void BM_Replication(benchmark::State& state) {
    const Fixture fx(80);
    const auto cells = make_cells({BalancingScheme::Covariate, BalancingScheme::Regressor},
                                  {RieszLoss::Squared}, {0.01}, {1, 5});
    const FitSettings fit;
    for (auto _ : state) {
        benchmark::DoNotOptimize(run_cells(fx.sample.data, fx.sample.sample_ate, 0, fx.design.map,
                                           *fx.design.map, cells, fit, 1));
    }
}

}  // namespace

BENCHMARK_CAPTURE(BM_RieszFit, sq, RieszLoss::Squared)
    ->Arg(40)->Arg(80)->Arg(160)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_RieszFit, ukl, RieszLoss::Ukl)->Arg(40)->Arg(80)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_RieszFit, bp, RieszLoss::Bp)->Arg(40)->Arg(80)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Replication)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
