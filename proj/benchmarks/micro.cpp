// Microbenchmarks for the three hot layers: the fused block-tridiagonal
// solve, the splitting iteration cores on frozen coefficients, and whole
// time steps including coefficient evaluation.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "crossdiff/blocksolve.hpp"
#include "crossdiff/grid.hpp"
#include "crossdiff/model.hpp"
#include "crossdiff/schemes.hpp"

namespace {

using namespace crossdiff;

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

StateW seeded_state(const Grid& g, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Field u(g), v(g);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = uniform01(rng);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = uniform01(rng);
    return StateW::from_initial(std::move(u), std::move(v));
}

DirectionalSystem line_system_of_length(int n) {
    const Grid g = Grid::pixels({n - 1, 2});
    const StateW state = seeded_state(g, 7);
    const InfluenceModel model = make_constant_complex(1.0, 0.3);
    const EvaluatedCoefficients coeffs =
        evaluate_coefficients(state, model, ReactionModel::constant(0.1, 0.1), 0.0);
    return assemble_directional_system(state, coeffs, 0, 0,
                                       make_sweep_params(Scheme::AOS, 2, 1.0, 0.05));
}

void BM_BlockSolve(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const DirectionalSystem sys = line_system_of_length(n);
    BlockTridiagonalMatrix work = sys.matrix;
    std::vector<double> rhs = sys.rhs;
    for (auto _ : state) {
        work = sys.matrix; // refresh the overwritten factors (no allocation)
        rhs = sys.rhs;
        block_lu_solve(work, rhs);
        benchmark::DoNotOptimize(rhs.data());
    }
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_BlockSolve)->RangeMultiplier(4)->Range(16, 4096);

template <Scheme scheme>
void BM_SplitIteration(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const Grid g = Grid::pixels({n - 1, n - 1});
    const StateW in = seeded_state(g, 11);
    const InfluenceModel model = make_heat_model(1.0);
    const EvaluatedCoefficients coeffs =
        evaluate_coefficients(in, model, ReactionModel::constant(0.1, 0.1), 0.0);
    const SweepParams params = make_sweep_params(scheme, g.dim(), 1.0, 0.05);
    StepOptions opt;
    opt.compute_residual = false; // time the elimination alone
    for (auto _ : state) {
        StateW out = scheme == Scheme::AOS
                         ? aos_iteration(in, coeffs, params, SolverKind::BlockBanded, opt)
                         : amos_iteration(in, coeffs, params, SolverKind::BlockBanded, opt);
        benchmark::DoNotOptimize(out.u[0]);
    }
    state.SetItemsProcessed(state.iterations() * g.node_count());
}
BENCHMARK(BM_SplitIteration<Scheme::AOS>)->RangeMultiplier(2)->Range(32, 256);
BENCHMARK(BM_SplitIteration<Scheme::AMOS>)->RangeMultiplier(2)->Range(32, 256);

void BM_WholeStep(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const Grid g = Grid::pixels({n - 1, n - 1});
    StateW s = seeded_state(g, 13);
    const InfluenceModel model = make_heat_model(1.0);
    const ReactionModel reaction = ReactionModel::constant(0.1, 0.1);
    SchemeConfig cfg;
    cfg.scheme = Scheme::AOS;
    cfg.solver = SolverKind::BlockBanded;
    cfg.theta = 1.0;
    cfg.dt = 0.05;
    for (auto _ : state) {
        s = advance(s, model, reaction, cfg, StepOptions{}).state;
        benchmark::DoNotOptimize(s.u[0]);
    }
    state.SetItemsProcessed(state.iterations() * g.node_count());
}
BENCHMARK(BM_WholeStep)->RangeMultiplier(2)->Range(32, 128);

} // namespace

BENCHMARK_MAIN();
