#include "crossdiff/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

#include "crossdiff/errors.hpp"

namespace crossdiff {

const char* scheme_name(Scheme s) {
    switch (s) {
    case Scheme::FullTheta: return "full_theta";
    case Scheme::AOS: return "aos";
    case Scheme::AMOS: return "amos";
    }
    return "?";
}

const char* solver_name(SolverKind s) {
    switch (s) {
    case SolverKind::BlockBanded: return "banded";
    case SolverKind::DenseOracle: return "dense";
    }
    return "?";
}

std::int64_t dense_lu_flops(std::int64_t n) {
    // (4n^3 + 9n^2 - n)/6; the numerator is always divisible by 6.
    const __int128 m = n;
    const __int128 total = m * (4 * m * m + 9 * m - 1) / 6;
    if (total > INT64_MAX) throw ConfigError("dense LU flop count overflows 64 bits");
    return static_cast<std::int64_t>(total);
}

namespace {

std::int64_t floor_div_checked(__int128 num, __int128 den) {
    const __int128 q = num / den;
    if (q > INT64_MAX) throw ConfigError("flop count overflows 64 bits");
    return static_cast<std::int64_t>(q);
}

} // namespace

FlopCount flop_count(Scheme scheme, SolverKind solver, std::span<const int> dims) {
    const int dim = static_cast<int>(dims.size());
    if (dim != 2 && dim != 3) throw ConfigError("flop model: dims must have 2 or 3 entries");
    for (const int n : dims)
        if (n < 1) throw ConfigError("flop model: every N_k must be >= 1");
    if (scheme == Scheme::FullTheta && solver == SolverKind::BlockBanded)
        throw ConfigError(
            "flop model: the unsplit full-theta system is not block tridiagonal; no banded cost");

    // Magnitude guard before exact 128-bit arithmetic.
    long double approx = 1.0L;
    for (const int n : dims) approx *= static_cast<long double>(n);
    long double sum_sq = 0.0L;
    for (const int n : dims) sum_sq += static_cast<long double>(n) * n;
    const long double worst = scheme == Scheme::FullTheta
                                  ? approx * approx * approx
                                  : 1195.0L * approx * std::max(sum_sq, 1.0L);
    if (worst > 9.0e18L) throw ConfigError("flop count overflows 64 bits");

    __int128 prod = 1;
    __int128 sq = 0;
    for (const int n : dims) {
        prod *= n;
        sq += static_cast<__int128>(n) * n;
    }

    FlopCount out;
    const bool square2d = dim == 2 && dims[0] == dims[1];
    switch (scheme) {
    case Scheme::FullTheta:
        out.leading = floor_div_checked(2 * prod * prod * prod, 3);
        break;
    case Scheme::AOS:
        if (solver == SolverKind::DenseOracle) {
            out.leading = floor_div_checked(16 * prod * sq, 3);
        } else {
            out.leading = floor_div_checked((dim == 2 ? 200 : 300) * prod, 1);
            if (square2d) {
                const std::int64_t n = dims[0];
                out.full = 200 * n * n + 180 * n;
            }
        }
        break;
    case Scheme::AMOS: {
        const int factorial = dim == 2 ? 2 : 6;
        if (solver == SolverKind::DenseOracle) {
            out.leading = floor_div_checked(16 * factorial * prod * sq, 3);
        } else {
            out.leading = floor_div_checked((dim == 2 ? 398 : 1195) * prod, 1);
            if (square2d) {
                const std::int64_t n = dims[0];
                out.full = 398 * n * n + 360;
            }
        }
        break;
    }
    }
    return out;
}

namespace {

volatile double g_bench_sink = 0.0;

StateW make_workload(const Grid& g, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    Field u(g), v(g);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = dist(rng);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = dist(rng);
    return StateW::from_initial(std::move(u), std::move(v), 0.0);
}

std::int64_t median_ns(std::vector<std::int64_t> samples) {
    std::sort(samples.begin(), samples.end());
    const std::size_t n = samples.size();
    if (n % 2 == 1) return samples[n / 2];
    return (samples[n / 2 - 1] + samples[n / 2]) / 2;
}

bool over_dense_cap(const BenchCell& cell, const Grid& g, const BenchOptions& opt) {
    if (cell.solver != SolverKind::DenseOracle || opt.theta == 0.0) return false;
    if (cell.scheme == Scheme::FullTheta)
        return 2 * g.node_count() > opt.max_dense_unknowns;
    std::size_t max_line = 0;
    for (int k = 0; k < g.dim(); ++k)
        max_line = std::max(max_line, static_cast<std::size_t>(g.nodes(k)));
    return 2 * max_line > opt.max_dense_unknowns;
}

} // namespace

std::vector<BenchRecord> run_benchmark(std::span<const BenchCell> cells,
                                       const BenchOptions& opt) {
    return run_benchmark(cells, opt, make_heat_model(1.0), ReactionModel::constant(0.1, 0.1));
}

std::vector<BenchRecord> run_benchmark(std::span<const BenchCell> cells, const BenchOptions& opt,
                                       const InfluenceModel& model,
                                       const ReactionModel& reaction) {
    using clock = std::chrono::steady_clock;
    if (opt.repetitions < 1) throw ConfigError("benchmark: repetitions must be >= 1");
    if (opt.warmup < 0) throw ConfigError("benchmark: warmup must be >= 0");

    std::vector<BenchRecord> records;
    records.reserve(cells.size());

    for (const BenchCell& cell : cells) {
        const int dim = cell.dim();
        for (int k = 0; k < dim; ++k)
            if (cell.n[k] < 2) throw ConfigError("benchmark: node counts must be >= 2");

        BenchRecord rec;
        rec.scheme = cell.scheme;
        rec.solver = cell.solver;
        rec.n = cell.n;
        rec.theta = opt.theta;
        rec.parallel = opt.parallel;
        rec.flops_model =
            flop_count(cell.scheme, cell.solver, std::span<const int>(cell.n.data(), dim))
                .leading;

        std::array<Axis, 3> axes;
        for (int k = 0; k < dim; ++k)
            axes[k] = Axis{0.0, static_cast<double>(cell.n[k] - 1), cell.n[k] - 1};
        const Grid grid = Grid::make(std::span<const Axis>(axes.data(), dim));

        if (over_dense_cap(cell, grid, opt)) {
            rec.skipped = true;
            rec.note = "skipped (cap)";
            records.push_back(std::move(rec));
            continue;
        }

        const StateW state = make_workload(grid, opt.seed);

        StepOptions sopt;
        sopt.compute_residual = false;
        sopt.parallel = opt.parallel;
        sopt.threads = opt.threads;
        sopt.max_dense_unknowns = opt.max_dense_unknowns;

        SchemeConfig cfg;
        cfg.scheme = cell.scheme;
        cfg.solver = cell.solver;
        cfg.theta = opt.theta;
        cfg.dt = opt.dt;
        cfg.validate(dim);

        // Solver-cost mode repeats the iteration core on the same state
        // with frozen coefficients; whole-step mode advances the state.
        const EvaluatedCoefficients coeffs =
            evaluate_coefficients(state, model, reaction, state.t + opt.theta * opt.dt);
        const SweepParams params = make_sweep_params(cell.scheme, dim, opt.theta, opt.dt);
        StateW cur = state;
        double sink = 0.0;

        auto iterate = [&]() {
            if (opt.whole_step) {
                StepResult r = advance(cur, model, reaction, cfg, sopt);
                cur = std::move(r.state);
                sink += cur.u[0];
                return;
            }
            StateW out;
            switch (cell.scheme) {
            case Scheme::FullTheta:
                out = full_theta_iteration(state, coeffs, opt.theta, opt.dt, sopt);
                break;
            case Scheme::AOS:
                out = aos_iteration(state, coeffs, params, cell.solver, sopt);
                break;
            case Scheme::AMOS:
                out = amos_iteration(state, coeffs, params, cell.solver, sopt);
                break;
            }
            sink += out.u[0];
        };

        auto time_batch = [&](int count) -> std::int64_t {
            const auto t0 = clock::now();
            for (int i = 0; i < count; ++i) iterate();
            const auto t1 = clock::now();
            return std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();
        };

        // Auto-batch until one timed span covers at least a microsecond.
        const std::int64_t probe = time_batch(1);
        int batch = 1;
        if (probe < 1000) {
            const std::int64_t per = std::max<std::int64_t>(probe, 1);
            batch = static_cast<int>(std::min<std::int64_t>((1000 + per - 1) / per, 100000));
        }

        std::vector<std::int64_t> samples;
        samples.reserve(static_cast<std::size_t>(opt.repetitions));
        int warmup = opt.warmup;
        if (batch == 1) {
            // The probe already ran one full iteration: reuse it instead
            // of paying for it again (it can be minutes on dense cells).
            if (warmup > 0) --warmup;
            else samples.push_back(std::max<std::int64_t>(probe, 1));
        }
        for (int w = 0; w < warmup; ++w) time_batch(batch);
        while (samples.size() < static_cast<std::size_t>(opt.repetitions))
            samples.push_back(std::max<std::int64_t>(time_batch(batch), 1));
        g_bench_sink = sink;

        rec.iterations = batch;
        rec.ns_total = median_ns(std::move(samples));
        rec.ns_per_iter = static_cast<double>(rec.ns_total) / batch;
        rec.flops_per_sec =
            rec.ns_per_iter > 0.0 ? static_cast<double>(rec.flops_model) * 1e9 / rec.ns_per_iter
                                  : 0.0;
        records.push_back(std::move(rec));
    }
    return records;
}

std::string bench_csv(std::span<const BenchRecord> records) {
    std::string out =
        "scheme,solver,n1,n2,n3,theta,iters,ns_total,ns_per_iter,flops_model,flops_per_sec,"
        "parallel\n";
    char buf[256];
    for (const BenchRecord& r : records) {
        std::snprintf(buf, sizeof(buf), "%s,%s,%d,%d,%d,%g,%d,%lld,%.3f,%lld,%.6g,%d",
                      scheme_name(r.scheme), solver_name(r.solver), r.n[0], r.n[1], r.n[2],
                      r.theta, r.iterations, static_cast<long long>(r.ns_total), r.ns_per_iter,
                      static_cast<long long>(r.flops_model), r.flops_per_sec,
                      r.parallel ? 1 : 0);
        // Skipped cells become commented-out rows: a missing marker for
        // plotting tools, with the reason attached.
        if (r.skipped) out += "# ";
        out += buf;
        if (r.skipped && !r.note.empty()) out += " " + r.note;
        out += '\n';
    }
    return out;
}

} // namespace crossdiff
