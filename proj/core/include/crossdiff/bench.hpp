#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crossdiff/schemes.hpp"

namespace crossdiff {

/// Config-style names: "full_theta" / "aos" / "amos", "banded" / "dense".
const char* scheme_name(Scheme s);
const char* solver_name(SolverKind s);

/// Standard dense LU cost for n unknowns: 2/3 n^3 + 3/2 n^2 - 1/6 n,
/// always integral. The usual breakdown (n(n-1)(4n+1)/6 factorization,
/// n(n-1) forward and n^2 backward substitution) sums to n less than
/// this total; the stated total is kept as the model.
std::int64_t dense_lu_flops(std::int64_t n);

/// Modeled cost of one implicit iteration. `leading` is the
/// highest-magnitude term of the cost analysis as an exact rational,
/// floored to an integer:
///   full theta, dense:  2/3 * prod N_k^3
///   AOS,        dense:  16/3 * prod N_k * sum N_k^2
///   AMOS,       dense:  16/3 * dim! * prod N_k * sum N_k^2
///   AOS,        banded: 200 * prod N_k (2D), 300 * prod N_k (3D)
///   AMOS,       banded: 398 * prod N_k (2D), 1195 * prod N_k (3D)
/// N_k counts the unknowns (nodes) per axis. `full` carries the complete
/// polynomial where the analysis states one: 200N^2 + 180N for banded AOS
/// on a square 2D grid and 398N^2 + 360 for banded AMOS (kept verbatim;
/// symmetry with the AOS count suggests the trailing term should be 360N).
struct FlopCount {
    std::int64_t leading = 0;
    std::optional<std::int64_t> full;
};

/// Pure function of (scheme, solver, dims). Throws ConfigError on the
/// unsupported full-theta + banded combination (the unsplit matrix is not
/// block tridiagonal), on dims outside {2, 3} entries of N_k >= 1, and on
/// counts overflowing a 64-bit integer.
FlopCount flop_count(Scheme scheme, SolverKind solver, std::span<const int> dims);

/// One cell of the benchmark matrix. n holds node counts per axis,
/// n[2] == 0 selects 2D.
struct BenchCell {
    Scheme scheme = Scheme::AOS;
    SolverKind solver = SolverKind::BlockBanded;
    std::array<int, 3> n{0, 0, 0};

    int dim() const { return n[2] > 0 ? 3 : 2; }
};

struct BenchOptions {
    double theta = 1.0;
    double dt = 0.05;
    int warmup = 1;       // untimed repetitions before measuring
    int repetitions = 3;  // timed repetitions; the median is reported
    /// false: time the iteration core on a fixed state with pre-evaluated
    /// coefficients (solver cost). true: time whole steps, advancing the
    /// state and re-evaluating coefficients each iteration.
    bool whole_step = false;
    bool parallel = false;
    int threads = 0;
    std::uint64_t seed = 1234;
    std::size_t max_dense_unknowns = 20000;
};

struct BenchRecord {
    Scheme scheme = Scheme::AOS;
    SolverKind solver = SolverKind::BlockBanded;
    std::array<int, 3> n{0, 0, 0};
    double theta = 1.0;
    int iterations = 0;  // iterations per timed repetition; 0 when skipped
    std::int64_t ns_total = 0;  // median repetition wall time
    double ns_per_iter = 0.0;
    std::int64_t flops_model = 0;
    double flops_per_sec = 0.0;
    bool parallel = false;
    bool skipped = false;
    std::string note;  // "skipped (cap)" for cells over the dense cap
};

/// Runs every cell on a deterministic workload: seeded random initial
/// data and the given frozen model. Iterations finishing under 1
/// microsecond are auto-batched until the timed span is resolvable; when
/// no batching is needed the probe iteration is reused as warmup or as
/// the first sample. Dense cells whose system size exceeds
/// max_dense_unknowns are reported as skipped rather than run.
std::vector<BenchRecord> run_benchmark(std::span<const BenchCell> cells, const BenchOptions& opt,
                                       const InfluenceModel& model,
                                       const ReactionModel& reaction);

/// Heat-preset workload (identity diffusion, mild equal damping).
std::vector<BenchRecord> run_benchmark(std::span<const BenchCell> cells,
                                       const BenchOptions& opt);

/// CSV rendering, one row per record:
/// scheme,solver,n1,n2,n3,theta,iters,ns_total,ns_per_iter,flops_model,flops_per_sec,parallel
std::string bench_csv(std::span<const BenchRecord> records);

} // namespace crossdiff
