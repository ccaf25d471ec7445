#include "crossdiff/schemes.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <utility>

#include "crossdiff/errors.hpp"

namespace crossdiff {

void SchemeConfig::validate(int dim) const {
    if (dim != 2 && dim != 3) throw ConfigError("scheme config: grid dimension must be 2 or 3");
    if (!(theta >= 0.0 && theta <= 1.0))
        throw ConfigError("scheme.theta must lie in [0, 1], got " + std::to_string(theta));
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw ConfigError("scheme.dt must be positive, got " + std::to_string(dt));
    if (scheme == Scheme::FullTheta && solver == SolverKind::BlockBanded)
        throw ConfigError("scheme.solver: the unsplit theta-method matrix is not block "
                          "tridiagonal; use the dense oracle solver");
}

SweepParams make_sweep_params(Scheme scheme, int dim, double theta, double dt) {
    if (dim != 2 && dim != 3) throw ConfigError("sweep params: dimension must be 2 or 3");
    SweepParams p;
    p.theta = theta;
    switch (scheme) {
    case Scheme::AOS:
        p.mu = dim * dt;
        p.reaction_weight = 1.0 / dim;
        break;
    case Scheme::AMOS:
        p.mu = dt;
        p.reaction_weight = 1.0 / dim;
        break;
    case Scheme::FullTheta:
        p.mu = dt;
        p.reaction_weight = 1.0;
        break;
    }
    p.r = theta * p.mu;
    return p;
}

namespace {

/// Strides and line decomposition of one sweep direction. Node and
/// half-point lattices share extents except along the direction itself,
/// so only the strides of higher axes differ.
struct LineMap {
    int n = 0;
    std::size_t node_stride = 1;
    std::size_t half_stride = 1;
    std::size_t lines = 1;
    int n_ortho = 0;
    std::array<std::size_t, 2> ortho_extent{};
    std::array<std::size_t, 2> ortho_node_stride{};
    std::array<std::size_t, 2> ortho_half_stride{};

    void bases(std::size_t line, std::size_t& node_base, std::size_t& half_base) const {
        node_base = 0;
        half_base = 0;
        for (int i = 0; i < n_ortho; ++i) {
            const std::size_t c = line % ortho_extent[i];
            line /= ortho_extent[i];
            node_base += c * ortho_node_stride[i];
            half_base += c * ortho_half_stride[i];
        }
    }
};

LineMap make_line_map(const Grid& g, int dir) {
    LineMap m;
    m.n = g.nodes(dir);
    std::size_t ns = 1, hs = 1;
    for (int k = 0; k < g.dim(); ++k) {
        const auto node_extent = static_cast<std::size_t>(g.nodes(k));
        const auto half_extent = static_cast<std::size_t>(k == dir ? g.cells(k) : g.nodes(k));
        if (k == dir) {
            m.node_stride = ns;
            m.half_stride = hs;
        } else {
            m.ortho_extent[m.n_ortho] = node_extent;
            m.ortho_node_stride[m.n_ortho] = ns;
            m.ortho_half_stride[m.n_ortho] = hs;
            m.lines *= node_extent;
            ++m.n_ortho;
        }
        ns *= node_extent;
        hs *= half_extent;
    }
    return m;
}

inline void block_mul_add(const Block2& b, double x1, double x2, double& y1, double& y2,
                          double scale) {
    y1 += scale * (b.a11 * x1 + b.a12 * x2);
    y2 += scale * (b.a21 * x1 + b.a22 * x2);
}

void require_matching(const StateW& in, const EvaluatedCoefficients& c, int direction) {
    if (!(c.grid == in.grid()))
        throw ConfigError("sweep: coefficients were evaluated on a different grid");
    if (direction < 0 || direction >= in.grid().dim())
        throw ConfigError("sweep: direction " + std::to_string(direction) +
                          " out of range for dim " + std::to_string(in.grid().dim()));
}

/// Assembles one line system into sys/rhs. half_scratch receives the
/// (r/h^2)-scaled half-point blocks of the line.
void assemble_line(const StateW& in, const EvaluatedCoefficients& c, int dir, const LineMap& m,
                   std::size_t line, const SweepParams& p, double inv_h2,
                   BlockTridiagonalMatrix& sys, std::vector<double>& rhs,
                   std::vector<Block2>& half_scratch) {
    const std::size_t n = static_cast<std::size_t>(m.n);
    std::size_t node_base = 0, half_base = 0;
    m.bases(line, node_base, half_base);

    const double cr = p.r * inv_h2;
    half_scratch.resize(n - 1);
    for (std::size_t j = 0; j + 1 < n; ++j) {
        const std::size_t hi = half_base + j * m.half_stride;
        half_scratch[j] = Block2{cr * c.half_d[dir][0][hi], cr * c.half_d[dir][1][hi],
                                 cr * c.half_d[dir][2][hi], cr * c.half_d[dir][3][hi]};
    }

    sys.diag.resize(n);
    sys.upper.resize(n - 1);
    sys.lower.resize(n - 1);
    rhs.resize(2 * n);

    const double wr = p.reaction_weight * p.r;
    const double rho = (p.mu - p.r) / p.r;           // (1 - theta)/theta
    const double w_expl = p.reaction_weight * (p.mu - p.r);
    const double w_anchor = p.reaction_weight * p.mu;

    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t ni = node_base + j * m.node_stride;
        const double l1 = c.lambda1[ni];
        const double l2 = c.lambda2[ni];

        Block2 s{};
        if (j == 0) s = 2.0 * half_scratch[0];
        else if (j + 1 == n) s = 2.0 * half_scratch[n - 2];
        else s = half_scratch[j - 1] + half_scratch[j];

        sys.diag[j] = Block2{1.0 + s.a11 + wr * l1, s.a12, s.a21, 1.0 + s.a22 + wr * l2};

        const double uj = in.u[ni], vj = in.v[ni];

        // rho * (r L_k w)_j with the mirrored boundary closure.
        double gu = 0.0, gv = 0.0;
        if (j + 1 < n) {
            const std::size_t nr = ni + m.node_stride;
            const double du = in.u[nr] - uj, dv = in.v[nr] - vj;
            const double scale = (j == 0) ? 2.0 : 1.0;
            block_mul_add(half_scratch[j], du, dv, gu, gv, scale);
        }
        if (j > 0) {
            const std::size_t nl = ni - m.node_stride;
            const double du = uj - in.u[nl], dv = vj - in.v[nl];
            const double scale = (j + 1 == n) ? 2.0 : 1.0;
            block_mul_add(half_scratch[j - 1], du, dv, gu, gv, -scale);
        }

        rhs[2 * j] = uj + rho * gu - w_expl * l1 * uj + w_anchor * l1 * in.u0[ni];
        rhs[2 * j + 1] = vj + rho * gv - w_expl * l2 * vj + w_anchor * l2 * in.v0[ni];
    }

    for (std::size_t j = 0; j + 1 < n; ++j) {
        const double scale = -((j == 0) ? 2.0 : 1.0);
        sys.upper[j] = scale * half_scratch[j];
        const double lscale = -((j + 2 == n) ? 2.0 : 1.0);
        sys.lower[j] = lscale * half_scratch[j];
    }
}

unsigned chunk_count(std::size_t count, const StepOptions& opt) {
    if (!opt.parallel || count < 2) return 1;
    unsigned t = opt.threads > 0 ? static_cast<unsigned>(opt.threads)
                                 : std::max(1u, std::thread::hardware_concurrency());
    return static_cast<unsigned>(std::min<std::size_t>(t, count));
}

/// Runs body(lo, hi, chunk) over [0, count), chunked across threads when asked.
template <class Body>
void run_chunked(std::size_t count, const StepOptions& opt, Body&& body) {
    const unsigned threads = chunk_count(count, opt);
    if (threads <= 1) {
        body(std::size_t{0}, count, 0u);
        return;
    }
    std::exception_ptr first_error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        const std::size_t chunk = (count + threads - 1) / threads;
        for (unsigned ti = 0; ti < threads; ++ti) {
            const std::size_t lo = ti * chunk;
            const std::size_t hi = std::min(count, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back([&, lo, hi, ti] {
                try {
                    body(lo, hi, ti);
                } catch (...) {
                    std::scoped_lock lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            });
        }
    }
    if (first_error) std::rethrow_exception(first_error);
}

void check_finite_or_diverged(const StateW& s, const char* scheme_name) {
    for (std::size_t i = 0; i < s.u.size(); ++i)
        if (!std::isfinite(s.u[i]) || !std::isfinite(s.v[i]))
            throw DivergenceError(std::string(scheme_name) +
                                  ": non-finite field value after the step at t = " +
                                  std::to_string(s.t));
}

/// Reorders a node or half-point lattice so axis `dir` becomes the
/// fastest; `inverse` maps back. Same element values, so sweeping the
/// permuted copy along its first axis performs the exact arithmetic of
/// the strided sweep, line by line.
void permute_lattice(std::array<std::size_t, 3> ext, int dim, int dir, const double* src,
                     double* dst, bool inverse) {
    for (int k = dim; k < 3; ++k) ext[static_cast<std::size_t>(k)] = 1;
    std::array<int, 3> order{dir, -1, -1};
    for (int k = 0, t = 1; k < dim; ++k)
        if (k != dir) order[static_cast<std::size_t>(t++)] = k;

    std::array<std::size_t, 3> pstride{0, 0, 0};
    std::size_t s = 1;
    for (int i = 0; i < dim; ++i) {
        pstride[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = s;
        s *= ext[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    }

    std::size_t ci = 0;
    for (std::size_t j3 = 0; j3 < ext[2]; ++j3)
        for (std::size_t j2 = 0; j2 < ext[1]; ++j2) {
            std::size_t pi = j2 * pstride[1] + j3 * pstride[2];
            for (std::size_t j1 = 0; j1 < ext[0]; ++j1, ++ci, pi += pstride[0]) {
                if (inverse) dst[ci] = src[pi];
                else dst[pi] = src[ci];
            }
        }
}

std::array<std::size_t, 3> node_extents(const Grid& g) {
    std::array<std::size_t, 3> ext{1, 1, 1};
    for (int k = 0; k < g.dim(); ++k)
        ext[static_cast<std::size_t>(k)] = static_cast<std::size_t>(g.nodes(k));
    return ext;
}

Grid front_permuted_grid(const Grid& g, int dir) {
    std::array<Axis, 3> axes;
    axes[0] = g.axis(dir);
    for (int k = 0, t = 1; k < g.dim(); ++k)
        if (k != dir) axes[static_cast<std::size_t>(t++)] = g.axis(k);
    return Grid::make(std::span<const Axis>(axes.data(), static_cast<std::size_t>(g.dim())));
}

} // namespace

std::size_t line_count(const Grid& g, int direction) {
    return make_line_map(g, direction).lines;
}

DirectionalSystem assemble_directional_system(const StateW& in, const EvaluatedCoefficients& c,
                                              int direction, std::size_t line,
                                              const SweepParams& p) {
    require_matching(in, c, direction);
    if (!(p.r > 0.0))
        throw ConfigError("directional system: explicit parameters (r = 0) produce no system");
    const LineMap m = make_line_map(in.grid(), direction);
    if (line >= m.lines)
        throw ConfigError("directional system: line " + std::to_string(line) +
                          " out of range (" + std::to_string(m.lines) + " lines)");
    DirectionalSystem out;
    out.direction = direction;
    out.line = line;
    const double h = in.grid().spacing(direction);
    std::vector<Block2> scratch;
    assemble_line(in, c, direction, m, line, p, 1.0 / (h * h), out.matrix, out.rhs, scratch);
    return out;
}

namespace {

/// Line-by-line implicit solves along `direction`, scattering the swept
/// pair into out_u/out_v (every node lies on exactly one line).
/// `label_direction` names the caller's direction in error messages when
/// the sweep runs on a permuted copy.
void sweep_lines(const StateW& in, const EvaluatedCoefficients& c, int direction,
                 const SweepParams& p, SolverKind solver, const StepOptions& opt,
                 SweepStats* stats, Field& out_u, Field& out_v, int label_direction) {
    const LineMap m = make_line_map(in.grid(), direction);
    const std::size_t n = static_cast<std::size_t>(m.n);
    const double h = in.grid().spacing(direction);
    const double inv_h2 = 1.0 / (h * h);

    if (solver == SolverKind::DenseOracle && 2 * n > opt.max_dense_unknowns)
        throw ConfigError("dense oracle: line system size " + std::to_string(2 * n) +
                          " exceeds the cap of " + std::to_string(opt.max_dense_unknowns));

    std::vector<SweepStats> partial(chunk_count(m.lines, opt));

    run_chunked(m.lines, opt, [&](std::size_t lo, std::size_t hi, unsigned chunk) {
        BlockTridiagonalMatrix sys;
        BlockTridiagonalMatrix orig;
        std::vector<Block2> scratch;
        std::vector<double> rhs, rhs_orig, resid(2 * n);
        SweepStats local;

        for (std::size_t line = lo; line < hi; ++line) {
            assemble_line(in, c, direction, m, line, p, inv_h2, sys, rhs, scratch);
            if (opt.compute_residual) {
                orig = sys;
                rhs_orig = rhs;
            }
            try {
                if (solver == SolverKind::BlockBanded) {
                    double max_ubar = 0.0;
                    block_lu_solve(sys, rhs, opt.collect_diagnostics ? &max_ubar : nullptr);
                    local.max_ubar = std::max(local.max_ubar, max_ubar);
                } else {
                    DenseMatrix dense = to_dense(sys);
                    auto x = dense_solve_inplace(dense, rhs);
                    std::copy(x.begin(), x.end(), rhs.begin());
                }
            } catch (const SolverError& e) {
                throw SolverError("direction " + std::to_string(label_direction + 1) + ", line " +
                                  std::to_string(line) + ": " + e.what());
            }
            ++local.systems;

            if (opt.compute_residual) {
                orig.multiply(rhs, resid);
                for (std::size_t i = 0; i < resid.size(); ++i)
                    local.max_residual =
                        std::max(local.max_residual, std::abs(resid[i] - rhs_orig[i]));
            }

            std::size_t node_base = 0, half_base = 0;
            m.bases(line, node_base, half_base);
            for (std::size_t j = 0; j < n; ++j) {
                const std::size_t ni = node_base + j * m.node_stride;
                out_u[ni] = rhs[2 * j];
                out_v[ni] = rhs[2 * j + 1];
            }
        }
        partial[chunk] = local;
    });

    if (stats) {
        for (const auto& s : partial) {
            stats->systems += s.systems;
            stats->max_residual = std::max(stats->max_residual, s.max_residual);
            stats->max_ubar = std::max(stats->max_ubar, s.max_ubar);
        }
    }
}

} // namespace

StateW directional_sweep(const StateW& in, const EvaluatedCoefficients& c, int direction,
                         const SweepParams& p, SolverKind solver, const StepOptions& opt,
                         SweepStats* stats) {
    require_matching(in, c, direction);
    StateW out = in;

    if (p.r == 0.0) {
        // theta = 0: pure explicit fractional update, no solve.
        Field lu(in.grid()), lv(in.grid());
        apply_operator(in, c, direction, lu, lv);
        const double wmu = p.reaction_weight * p.mu;
        for (std::size_t i = 0; i < out.u.size(); ++i) {
            out.u[i] = in.u[i] + p.mu * lu[i] - wmu * c.lambda1[i] * (in.u[i] - in.u0[i]);
            out.v[i] = in.v[i] + p.mu * lv[i] - wmu * c.lambda2[i] * (in.v[i] - in.v0[i]);
        }
        return out;
    }

    if (direction == 0) {
        sweep_lines(in, c, 0, p, solver, opt, stats, out.u, out.v, 0);
        return out;
    }

    // Strided directions sweep a direction-fastest copy instead: the
    // per-line arithmetic is identical, but assembly and scatter then walk
    // memory contiguously, which dominates the cost on large grids.
    const Grid& g = in.grid();
    const Grid pg = front_permuted_grid(g, direction);
    const std::array<std::size_t, 3> next = node_extents(g);

    auto permuted = [&](const Field& f) {
        Field r(pg);
        permute_lattice(next, g.dim(), direction, f.values().data(), r.values().data(), false);
        return r;
    };

    const StateW pin(permuted(in.u), permuted(in.v), permuted(in.u0), permuted(in.v0), in.t);

    EvaluatedCoefficients pc;
    pc.grid = pg;
    pc.t_eval = c.t_eval;
    pc.lambda1.resize(c.lambda1.size());
    pc.lambda2.resize(c.lambda2.size());
    permute_lattice(next, g.dim(), direction, c.lambda1.data(), pc.lambda1.data(), false);
    permute_lattice(next, g.dim(), direction, c.lambda2.data(), pc.lambda2.data(), false);

    std::array<std::size_t, 3> hext = next;
    hext[static_cast<std::size_t>(direction)] -= 1; // half-point lattice along the sweep axis
    for (std::size_t q = 0; q < 4; ++q) {
        pc.half_d[0][q] = HalfPointField(pg, 0);
        permute_lattice(hext, g.dim(), direction, c.half_d[direction][q].values().data(),
                        pc.half_d[0][q].values().data(), false);
    }

    Field pu(pg), pv(pg);
    sweep_lines(pin, pc, 0, p, solver, opt, stats, pu, pv, direction);
    permute_lattice(next, g.dim(), direction, pu.values().data(), out.u.values().data(), true);
    permute_lattice(next, g.dim(), direction, pv.values().data(), out.v.values().data(), true);
    return out;
}

void apply_operator(const StateW& in, const EvaluatedCoefficients& c, int direction, Field& out_u,
                    Field& out_v) {
    require_matching(in, c, direction);
    const LineMap m = make_line_map(in.grid(), direction);
    const std::size_t n = static_cast<std::size_t>(m.n);
    const double inv_h2 = 1.0 / (in.grid().spacing(direction) * in.grid().spacing(direction));
    const auto& d = c.half_d[direction];

    for (std::size_t line = 0; line < m.lines; ++line) {
        std::size_t node_base = 0, half_base = 0;
        m.bases(line, node_base, half_base);
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t ni = node_base + j * m.node_stride;
            double gu = 0.0, gv = 0.0;
            if (j + 1 < n) {
                const std::size_t hi = half_base + j * m.half_stride;
                const std::size_t nr = ni + m.node_stride;
                const double du = in.u[nr] - in.u[ni], dv = in.v[nr] - in.v[ni];
                const double scale = (j == 0) ? 2.0 : 1.0;
                gu += scale * (d[0][hi] * du + d[1][hi] * dv);
                gv += scale * (d[2][hi] * du + d[3][hi] * dv);
            }
            if (j > 0) {
                const std::size_t hi = half_base + (j - 1) * m.half_stride;
                const std::size_t nl = ni - m.node_stride;
                const double du = in.u[ni] - in.u[nl], dv = in.v[ni] - in.v[nl];
                const double scale = (j + 1 == n) ? 2.0 : 1.0;
                gu -= scale * (d[0][hi] * du + d[1][hi] * dv);
                gv -= scale * (d[2][hi] * du + d[3][hi] * dv);
            }
            out_u[ni] += inv_h2 * gu;
            out_v[ni] += inv_h2 * gv;
        }
    }
}

void apply_operator_all(const StateW& in, const EvaluatedCoefficients& c, Field& out_u,
                        Field& out_v) {
    out_u = Field(in.grid());
    out_v = Field(in.grid());
    for (int k = 0; k < in.grid().dim(); ++k) apply_operator(in, c, k, out_u, out_v);
}

DenseMatrix assemble_full_operator(const EvaluatedCoefficients& c) {
    const Grid& g = c.grid;
    const std::size_t nn = g.node_count();
    DenseMatrix a = DenseMatrix::zero(static_cast<int>(2 * nn));
    const int vo = static_cast<int>(nn); // V-block offset

    for (int dir = 0; dir < g.dim(); ++dir) {
        const LineMap m = make_line_map(g, dir);
        const std::size_t n = static_cast<std::size_t>(m.n);
        const double inv_h2 = 1.0 / (g.spacing(dir) * g.spacing(dir));
        const auto& d = c.half_d[dir];

        for (std::size_t line = 0; line < m.lines; ++line) {
            std::size_t node_base = 0, half_base = 0;
            m.bases(line, node_base, half_base);
            for (std::size_t j = 0; j < n; ++j) {
                const int row = static_cast<int>(node_base + j * m.node_stride);
                if (j + 1 < n) {
                    const std::size_t hi = half_base + j * m.half_stride;
                    const int col = static_cast<int>(node_base + (j + 1) * m.node_stride);
                    const double s = inv_h2 * ((j == 0) ? 2.0 : 1.0);
                    a(row, col) += s * d[0][hi];
                    a(row, row) -= s * d[0][hi];
                    a(row, vo + col) += s * d[1][hi];
                    a(row, vo + row) -= s * d[1][hi];
                    a(vo + row, col) += s * d[2][hi];
                    a(vo + row, row) -= s * d[2][hi];
                    a(vo + row, vo + col) += s * d[3][hi];
                    a(vo + row, vo + row) -= s * d[3][hi];
                }
                if (j > 0) {
                    const std::size_t hi = half_base + (j - 1) * m.half_stride;
                    const int col = static_cast<int>(node_base + (j - 1) * m.node_stride);
                    const double s = inv_h2 * ((j + 1 == n) ? 2.0 : 1.0);
                    a(row, col) += s * d[0][hi];
                    a(row, row) -= s * d[0][hi];
                    a(row, vo + col) += s * d[1][hi];
                    a(row, vo + row) -= s * d[1][hi];
                    a(vo + row, col) += s * d[2][hi];
                    a(vo + row, row) -= s * d[2][hi];
                    a(vo + row, vo + col) += s * d[3][hi];
                    a(vo + row, vo + row) -= s * d[3][hi];
                }
            }
        }
    }
    return a;
}

FullThetaSystem build_full_theta_system(const StateW& in, const EvaluatedCoefficients& c,
                                        double theta, double dt) {
    if (!(theta > 0.0)) throw ConfigError("full theta system: theta must be positive");
    const Grid& g = in.grid();
    const std::size_t nn = g.node_count();

    FullThetaSystem sys;
    sys.matrix = assemble_full_operator(c);
    const double s = -theta * dt;
    for (auto& v : sys.matrix.a) v *= s;
    const int size = sys.matrix.n;
    for (int i = 0; i < size; ++i) sys.matrix(i, i) += 1.0;
    for (std::size_t j = 0; j < nn; ++j) {
        sys.matrix(static_cast<int>(j), static_cast<int>(j)) += theta * dt * c.lambda1[j];
        sys.matrix(static_cast<int>(nn + j), static_cast<int>(nn + j)) += theta * dt * c.lambda2[j];
    }

    Field lu(g), lv(g);
    apply_operator_all(in, c, lu, lv);
    sys.rhs.resize(2 * nn);
    const double e = (1.0 - theta) * dt;
    for (std::size_t j = 0; j < nn; ++j) {
        sys.rhs[j] = in.u[j] + e * lu[j] - e * c.lambda1[j] * in.u[j] + dt * c.lambda1[j] * in.u0[j];
        sys.rhs[nn + j] =
            in.v[j] + e * lv[j] - e * c.lambda2[j] * in.v[j] + dt * c.lambda2[j] * in.v0[j];
    }
    return sys;
}

StateW full_theta_iteration(const StateW& in, const EvaluatedCoefficients& c, double theta,
                            double dt, const StepOptions& opt, SweepStats* stats) {
    StateW out = in;
    const std::size_t nn = in.grid().node_count();
    if (theta == 0.0) {
        Field lu(in.grid()), lv(in.grid());
        apply_operator_all(in, c, lu, lv);
        for (std::size_t j = 0; j < nn; ++j) {
            out.u[j] = in.u[j] + dt * lu[j] - dt * c.lambda1[j] * (in.u[j] - in.u0[j]);
            out.v[j] = in.v[j] + dt * lv[j] - dt * c.lambda2[j] * (in.v[j] - in.v0[j]);
        }
        return out;
    }
    if (2 * nn > opt.max_dense_unknowns)
        throw ConfigError("dense oracle: full system size " + std::to_string(2 * nn) +
                          " exceeds the cap of " + std::to_string(opt.max_dense_unknowns));
    FullThetaSystem sys = build_full_theta_system(in, c, theta, dt);
    const auto x = dense_solve_inplace(sys.matrix, sys.rhs);
    for (std::size_t j = 0; j < nn; ++j) {
        out.u[j] = x[j];
        out.v[j] = x[nn + j];
    }
    if (stats) ++stats->systems;
    return out;
}

StateW aos_iteration(const StateW& in, const EvaluatedCoefficients& c, const SweepParams& p,
                     SolverKind solver, const StepOptions& opt, SweepStats* stats) {
    const int dim = in.grid().dim();
    StateW out = in;
    Field acc_u(in.grid()), acc_v(in.grid());
    for (int k = 0; k < dim; ++k) {
        const StateW swept = directional_sweep(in, c, k, p, solver, opt, stats);
        for (std::size_t i = 0; i < acc_u.size(); ++i) {
            acc_u[i] += swept.u[i];
            acc_v[i] += swept.v[i];
        }
    }
    const double w = 1.0 / dim;
    for (std::size_t i = 0; i < acc_u.size(); ++i) {
        out.u[i] = w * acc_u[i];
        out.v[i] = w * acc_v[i];
    }
    return out;
}

StateW amos_iteration(const StateW& in, const EvaluatedCoefficients& c, const SweepParams& p,
                      SolverKind solver, const StepOptions& opt, SweepStats* stats) {
    const int dim = in.grid().dim();
    StateW out = in;
    Field acc_u(in.grid()), acc_v(in.grid());
    int chains = 0;

    if (dim == 2) {
        for (int k = 0; k < 2; ++k) {
            const StateW first = directional_sweep(in, c, k, p, solver, opt, stats);
            const StateW second = directional_sweep(first, c, 1 - k, p, solver, opt, stats);
            for (std::size_t i = 0; i < acc_u.size(); ++i) {
                acc_u[i] += second.u[i];
                acc_v[i] += second.v[i];
            }
            ++chains;
        }
    } else {
        for (int k = 0; k < 3; ++k) {
            const StateW first = directional_sweep(in, c, k, p, solver, opt, stats);
            for (int i = 0; i < 3; ++i) {
                if (i == k) continue;
                const StateW second = directional_sweep(first, c, i, p, solver, opt, stats);
                const int j = 3 - k - i;
                const StateW third = directional_sweep(second, c, j, p, solver, opt, stats);
                for (std::size_t q = 0; q < acc_u.size(); ++q) {
                    acc_u[q] += third.u[q];
                    acc_v[q] += third.v[q];
                }
                ++chains;
            }
        }
    }

    const double w = 1.0 / chains;
    for (std::size_t i = 0; i < acc_u.size(); ++i) {
        out.u[i] = w * acc_u[i];
        out.v[i] = w * acc_v[i];
    }
    return out;
}

namespace {

template <class Core>
StepResult run_step(const StateW& in, const InfluenceModel& model, const ReactionModel& reaction,
                    double theta, double dt, const StepOptions& opt, const char* name,
                    Core&& core) {
    const auto start = std::chrono::steady_clock::now();
    const EvaluatedCoefficients c = evaluate_coefficients(in, model, reaction, in.t + theta * dt);

    SweepStats stats;
    StepResult result;
    result.state = core(c, stats);
    result.state.t = in.t + dt;
    check_finite_or_diverged(result.state, name);

    result.report.norm_before = norm_w(in);
    result.report.norm_after = norm_w(result.state);
    result.report.systems_solved = stats.systems;
    result.report.max_residual = stats.max_residual;
    result.report.max_ubar_norm = stats.max_ubar;
    result.report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

} // namespace

StepResult step_full_theta(const StateW& in, const InfluenceModel& model,
                           const ReactionModel& reaction, const SchemeConfig& cfg,
                           const StepOptions& opt) {
    SchemeConfig checked = cfg;
    checked.scheme = Scheme::FullTheta;
    checked.validate(in.grid().dim());
    if (checked.theta == 0.0) return step_explicit(in, model, reaction, checked.dt, opt);
    return run_step(in, model, reaction, checked.theta, checked.dt, opt, "full theta-method",
                    [&](const EvaluatedCoefficients& c, SweepStats& stats) {
                        return full_theta_iteration(in, c, checked.theta, checked.dt, opt, &stats);
                    });
}

StepResult step_explicit(const StateW& in, const InfluenceModel& model,
                         const ReactionModel& reaction, double dt, const StepOptions& opt) {
    if (!(dt > 0.0)) throw ConfigError("scheme.dt must be positive");
    return run_step(in, model, reaction, 0.0, dt, opt, "explicit scheme",
                    [&](const EvaluatedCoefficients& c, SweepStats& stats) {
                        return full_theta_iteration(in, c, 0.0, dt, opt, &stats);
                    });
}

StepResult step_aos(const StateW& in, const InfluenceModel& model, const ReactionModel& reaction,
                    const SchemeConfig& cfg, const StepOptions& opt) {
    SchemeConfig checked = cfg;
    checked.scheme = Scheme::AOS;
    checked.validate(in.grid().dim());
    const SweepParams p =
        make_sweep_params(Scheme::AOS, in.grid().dim(), checked.theta, checked.dt);
    return run_step(in, model, reaction, checked.theta, checked.dt, opt, "additive splitting",
                    [&](const EvaluatedCoefficients& c, SweepStats& stats) {
                        return aos_iteration(in, c, p, checked.solver, opt, &stats);
                    });
}

StepResult step_amos(const StateW& in, const InfluenceModel& model, const ReactionModel& reaction,
                     const SchemeConfig& cfg, const StepOptions& opt) {
    SchemeConfig checked = cfg;
    checked.scheme = Scheme::AMOS;
    checked.validate(in.grid().dim());
    const SweepParams p =
        make_sweep_params(Scheme::AMOS, in.grid().dim(), checked.theta, checked.dt);
    return run_step(in, model, reaction, checked.theta, checked.dt, opt, "multiplicative splitting",
                    [&](const EvaluatedCoefficients& c, SweepStats& stats) {
                        return amos_iteration(in, c, p, checked.solver, opt, &stats);
                    });
}

StepResult advance(const StateW& in, const InfluenceModel& model, const ReactionModel& reaction,
                   const SchemeConfig& cfg, const StepOptions& opt) {
    cfg.validate(in.grid().dim());
    switch (cfg.scheme) {
    case Scheme::FullTheta:
        return step_full_theta(in, model, reaction, cfg, opt);
    case Scheme::AOS:
        return step_aos(in, model, reaction, cfg, opt);
    case Scheme::AMOS:
        return step_amos(in, model, reaction, cfg, opt);
    }
    throw ConfigError("unknown scheme");
}

} // namespace crossdiff
