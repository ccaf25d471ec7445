#include "crossdiff/blocksolve.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "crossdiff/errors.hpp"

namespace crossdiff {

double Block2::norm_inf() const {
    return std::max(std::abs(a11) + std::abs(a12), std::abs(a21) + std::abs(a22));
}

double spectral_norm_2x2(const Block2& a) {
    // Eigenvalues of the symmetric A^T A: mean +/- radius.
    const double q11 = a.a11 * a.a11 + a.a21 * a.a21;
    const double q22 = a.a12 * a.a12 + a.a22 * a.a22;
    const double q12 = a.a11 * a.a12 + a.a21 * a.a22;
    const double mean = 0.5 * (q11 + q22);
    const double radius = std::hypot(0.5 * (q11 - q22), q12);
    return std::sqrt(std::max(0.0, mean + radius));
}

BlockTridiagonalMatrix BlockTridiagonalMatrix::zero(std::size_t n) {
    BlockTridiagonalMatrix a;
    a.diag.assign(n, Block2{});
    a.upper.assign(n > 0 ? n - 1 : 0, Block2{});
    a.lower.assign(n > 0 ? n - 1 : 0, Block2{});
    return a;
}

void BlockTridiagonalMatrix::validate() const {
    const std::size_t n = diag.size();
    if (n < 1) throw ConfigError("block-tridiagonal matrix: need at least one diagonal block");
    if (upper.size() != n - 1 || lower.size() != n - 1)
        throw ConfigError("block-tridiagonal matrix: off-diagonals must hold n-1 blocks");
}

void BlockTridiagonalMatrix::multiply(std::span<const double> x, std::span<double> y) const {
    const std::size_t n = size();
    for (std::size_t j = 0; j < n; ++j) {
        const double xu = x[2 * j], xv = x[2 * j + 1];
        double ru = diag[j].a11 * xu + diag[j].a12 * xv;
        double rv = diag[j].a21 * xu + diag[j].a22 * xv;
        if (j > 0) {
            const double pu = x[2 * (j - 1)], pv = x[2 * (j - 1) + 1];
            ru += lower[j - 1].a11 * pu + lower[j - 1].a12 * pv;
            rv += lower[j - 1].a21 * pu + lower[j - 1].a22 * pv;
        }
        if (j + 1 < n) {
            const double su = x[2 * (j + 1)], sv = x[2 * (j + 1) + 1];
            ru += upper[j].a11 * su + upper[j].a12 * sv;
            rv += upper[j].a21 * su + upper[j].a22 * sv;
        }
        y[2 * j] = ru;
        y[2 * j + 1] = rv;
    }
}

namespace {

struct Inverse2 {
    // Adjugate over determinant, no pivoting inside the block.
    double i11, i12, i21, i22;
};

Inverse2 invert_pivot(const Block2& b, std::size_t block_index) {
    const double det = b.det();
    const double scale = std::max(1.0, b.norm_inf());
    if (std::abs(det) <= 1e-14 * scale * scale)
        throw SolverError("singular pivot block at index " + std::to_string(block_index) +
                          " (det = " + std::to_string(det) + ")");
    const double inv_det = 1.0 / det;
    return {b.a22 * inv_det, -b.a12 * inv_det, -b.a21 * inv_det, b.a11 * inv_det};
}

inline Block2 apply_inverse(const Inverse2& inv, const Block2& m) {
    return {inv.i11 * m.a11 + inv.i12 * m.a21, inv.i11 * m.a12 + inv.i12 * m.a22,
            inv.i21 * m.a11 + inv.i22 * m.a21, inv.i21 * m.a12 + inv.i22 * m.a22};
}

inline void apply_inverse_vec(const Inverse2& inv, double& x1, double& x2) {
    const double y1 = inv.i11 * x1 + inv.i12 * x2;
    const double y2 = inv.i21 * x1 + inv.i22 * x2;
    x1 = y1;
    x2 = y2;
}

} // namespace

BlockLUFactors block_lu_factor(const BlockTridiagonalMatrix& a) {
    a.validate();
    const std::size_t n = a.size();

    BlockLUFactors f;
    f.bbar.resize(n);
    f.ubar.resize(n - 1);
    f.lower = a.lower;
    f.diagnostics.ubar_norms.resize(n - 1);

    double max_block_norm = 0.0;
    double l_est = 0.0;
    double u_est = static_cast<double>(n); // unit diagonal blocks of U
    auto track = [&](const Block2& b) { max_block_norm = std::max(max_block_norm, spectral_norm_2x2(b)); };

    f.bbar[0] = a.diag[0];
    track(a.diag[0]);
    for (std::size_t j = 0; j + 1 < n; ++j) {
        const Inverse2 inv = invert_pivot(f.bbar[j], j);
        f.ubar[j] = apply_inverse(inv, a.upper[j]);
        f.bbar[j + 1] = a.diag[j + 1] - a.lower[j] * f.ubar[j];

        const double un = spectral_norm_2x2(f.ubar[j]);
        f.diagnostics.ubar_norms[j] = un;
        f.diagnostics.max_ubar_norm = std::max(f.diagnostics.max_ubar_norm, un);
        u_est += un;
        track(a.diag[j + 1]);
        track(a.upper[j]);
        track(a.lower[j]);
    }
    for (std::size_t j = 0; j < n; ++j) l_est += spectral_norm_2x2(f.bbar[j]);
    for (std::size_t j = 0; j + 1 < n; ++j) l_est += spectral_norm_2x2(f.lower[j]);

    f.diagnostics.growth_ratio = l_est * u_est / std::max(max_block_norm, 1e-300);
    return f;
}

void block_lu_solve_factored(const BlockLUFactors& f, std::span<double> rhs) {
    const std::size_t n = f.bbar.size();
    if (rhs.size() != 2 * n) throw ConfigError("block solve: rhs length mismatch");

    {
        const Inverse2 inv = invert_pivot(f.bbar[0], 0);
        apply_inverse_vec(inv, rhs[0], rhs[1]);
    }
    for (std::size_t j = 1; j < n; ++j) {
        const Block2& l = f.lower[j - 1];
        rhs[2 * j] -= l.a11 * rhs[2 * (j - 1)] + l.a12 * rhs[2 * (j - 1) + 1];
        rhs[2 * j + 1] -= l.a21 * rhs[2 * (j - 1)] + l.a22 * rhs[2 * (j - 1) + 1];
        const Inverse2 inv = invert_pivot(f.bbar[j], j);
        apply_inverse_vec(inv, rhs[2 * j], rhs[2 * j + 1]);
    }
    for (std::size_t j = n - 1; j-- > 0;) {
        const Block2& u = f.ubar[j];
        rhs[2 * j] -= u.a11 * rhs[2 * (j + 1)] + u.a12 * rhs[2 * (j + 1) + 1];
        rhs[2 * j + 1] -= u.a21 * rhs[2 * (j + 1)] + u.a22 * rhs[2 * (j + 1) + 1];
    }
}

void block_lu_solve(BlockTridiagonalMatrix& a, std::span<double> rhs, double* max_ubar) {
    a.validate();
    const std::size_t n = a.size();
    if (rhs.size() != 2 * n) throw ConfigError("block solve: rhs length mismatch");

    double track_ubar = 0.0;
    {
        const Inverse2 inv = invert_pivot(a.diag[0], 0);
        apply_inverse_vec(inv, rhs[0], rhs[1]);
        if (n > 1) {
            a.upper[0] = apply_inverse(inv, a.upper[0]);
            if (max_ubar) track_ubar = spectral_norm_2x2(a.upper[0]);
        }
    }
    for (std::size_t k = 1; k < n; ++k) {
        const Block2& l = a.lower[k - 1];
        a.diag[k] = a.diag[k] - l * a.upper[k - 1];
        rhs[2 * k] -= l.a11 * rhs[2 * (k - 1)] + l.a12 * rhs[2 * (k - 1) + 1];
        rhs[2 * k + 1] -= l.a21 * rhs[2 * (k - 1)] + l.a22 * rhs[2 * (k - 1) + 1];

        const Inverse2 inv = invert_pivot(a.diag[k], k);
        apply_inverse_vec(inv, rhs[2 * k], rhs[2 * k + 1]);
        if (k + 1 < n) {
            a.upper[k] = apply_inverse(inv, a.upper[k]);
            if (max_ubar) track_ubar = std::max(track_ubar, spectral_norm_2x2(a.upper[k]));
        }
    }
    for (std::size_t j = n - 1; j-- > 0;) {
        const Block2& u = a.upper[j];
        rhs[2 * j] -= u.a11 * rhs[2 * (j + 1)] + u.a12 * rhs[2 * (j + 1) + 1];
        rhs[2 * j + 1] -= u.a21 * rhs[2 * (j + 1)] + u.a22 * rhs[2 * (j + 1) + 1];
    }
    if (max_ubar) *max_ubar = track_ubar;
}

DenseMatrix DenseMatrix::zero(int n) {
    DenseMatrix m;
    m.n = n;
    m.a.assign(static_cast<std::size_t>(n) * n, 0.0);
    return m;
}

DenseMatrix to_dense(const BlockTridiagonalMatrix& a) {
    a.validate();
    const std::size_t n = a.size();
    DenseMatrix m = DenseMatrix::zero(static_cast<int>(2 * n));
    auto put = [&](std::size_t bi, std::size_t bj, const Block2& b) {
        m(2 * bi, 2 * bj) = b.a11;
        m(2 * bi, 2 * bj + 1) = b.a12;
        m(2 * bi + 1, 2 * bj) = b.a21;
        m(2 * bi + 1, 2 * bj + 1) = b.a22;
    };
    for (std::size_t j = 0; j < n; ++j) put(j, j, a.diag[j]);
    for (std::size_t j = 0; j + 1 < n; ++j) {
        put(j, j + 1, a.upper[j]);
        put(j + 1, j, a.lower[j]);
    }
    return m;
}

std::vector<double> dense_solve_inplace(DenseMatrix& m, std::span<const double> rhs) {
    const int n = m.n;
    if (static_cast<int>(rhs.size()) != n) throw ConfigError("dense solve: rhs length mismatch");
    if (n == 0) return {};

    // Column-major map over row-major storage views the transpose; the
    // factorization runs in place on it and solve() is asked for A^T^T.
    Eigen::Map<Eigen::MatrixXd> at(m.a.data(), n, n);
    const double norm_a = at.cwiseAbs().rowwise().sum().maxCoeff(); // = |A|_1, same scale class
    Eigen::PartialPivLU<Eigen::Ref<Eigen::MatrixXd>> lu(at);

    const double pivot_tol = 1e-14 * std::max(1.0, norm_a);
    const auto& packed = lu.matrixLU();
    for (int i = 0; i < n; ++i)
        if (std::abs(packed(i, i)) <= pivot_tol)
            throw SolverError("dense solve: singular pivot at column " + std::to_string(i));

    Eigen::Map<const Eigen::VectorXd> b(rhs.data(), n);
    Eigen::VectorXd x = lu.transpose().solve(b);

    // Residual through the factors: A = U^T L^T P, so A x = U^T (L^T (P x)).
    Eigen::VectorXd z = lu.permutationP() * x;
    z = packed.triangularView<Eigen::UnitLower>().transpose() * z;
    z = packed.triangularView<Eigen::Upper>().transpose() * z;
    const double denom =
        norm_a * x.cwiseAbs().maxCoeff() + b.cwiseAbs().maxCoeff() + 1e-300;
    const double rel_residual = (z - b).cwiseAbs().maxCoeff() / denom;
    if (!(rel_residual < 1e-6))
        throw SolverError("dense solve: residual check failed (relative residual " +
                          std::to_string(rel_residual) + ")");

    return std::vector<double>(x.data(), x.data() + n);
}

std::vector<double> dense_solve(const DenseMatrix& m, std::span<const double> rhs) {
    DenseMatrix copy = m;
    return dense_solve_inplace(copy, rhs);
}

} // namespace crossdiff
