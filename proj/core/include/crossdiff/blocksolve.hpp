#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace crossdiff {

/// Dense 2x2 block, row-major.
struct Block2 {
    double a11 = 0.0, a12 = 0.0, a21 = 0.0, a22 = 0.0;

    static Block2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    static Block2 diagonal(double d1, double d2) { return {d1, 0.0, 0.0, d2}; }

    Block2 operator+(const Block2& o) const {
        return {a11 + o.a11, a12 + o.a12, a21 + o.a21, a22 + o.a22};
    }
    Block2 operator-(const Block2& o) const {
        return {a11 - o.a11, a12 - o.a12, a21 - o.a21, a22 - o.a22};
    }
    Block2 operator*(const Block2& o) const {
        return {a11 * o.a11 + a12 * o.a21, a11 * o.a12 + a12 * o.a22,
                a21 * o.a11 + a22 * o.a21, a21 * o.a12 + a22 * o.a22};
    }
    friend Block2 operator*(double s, const Block2& b) {
        return {s * b.a11, s * b.a12, s * b.a21, s * b.a22};
    }

    double det() const { return a11 * a22 - a12 * a21; }
    double norm_inf() const;

    bool operator==(const Block2&) const = default;
};

/// sigma_max(A) = sqrt(largest eigenvalue of A^T A), closed form.
double spectral_norm_2x2(const Block2& a);

/// Block-tridiagonal matrix with n diagonal blocks; upper/lower hold the
/// n-1 off-diagonal blocks. Vectors in interleaved component order:
/// (u_0, v_0, u_1, v_1, ...).
struct BlockTridiagonalMatrix {
    std::vector<Block2> diag;
    std::vector<Block2> upper;
    std::vector<Block2> lower;

    static BlockTridiagonalMatrix zero(std::size_t n);
    std::size_t size() const { return diag.size(); }
    /// Throws ConfigError unless n >= 1 and the off-diagonals hold n-1 blocks.
    void validate() const;

    /// y = A x (x, y interleaved, length 2n).
    void multiply(std::span<const double> x, std::span<double> y) const;
};

struct FactorizationDiagnostics {
    /// ||Bbar_j^{-1} U_j||_2 per off-diagonal position.
    std::vector<double> ubar_norms;
    double max_ubar_norm = 0.0;
    /// Growth surrogate ||L||_est * ||U||_est / ||A||_lb for the computed
    /// factors (block-norm sums over the unit-diagonal splitting).
    double growth_ratio = 0.0;
};

/// LU factors of a block-tridiagonal matrix: A = L * U with L lower block
/// bidiagonal (diagonal blocks Bbar_j, subdiagonal the original lower
/// blocks) and U unit upper block bidiagonal (off-diagonal Ubar_j).
struct BlockLUFactors {
    std::vector<Block2> bbar;
    std::vector<Block2> ubar;
    std::vector<Block2> lower;
    FactorizationDiagnostics diagnostics;
};

/// Factors without pivoting: Bbar_1 = B_1, Ubar_j = Bbar_j^{-1} U_j,
/// Bbar_{j+1} = B_{j+1} - L_j Ubar_j. Throws SolverError naming the block
/// index when a pivot block is singular (|det| <= 1e-14 * max(1, |B|_inf^2)).
BlockLUFactors block_lu_factor(const BlockTridiagonalMatrix& a);

/// Forward/back substitution with precomputed factors; rhs (length 2n,
/// interleaved) is overwritten with the solution.
void block_lu_solve_factored(const BlockLUFactors& f, std::span<double> rhs);

/// Fused single-pass elimination: factors and substitutes in one sweep,
/// overwriting a (diag becomes Bbar, upper becomes Ubar) and rhs (becomes
/// the solution). If max_ubar is non-null it receives max ||Ubar_j||_2.
void block_lu_solve(BlockTridiagonalMatrix& a, std::span<double> rhs,
                    double* max_ubar = nullptr);

/// Dense square matrix, row-major. Oracle-side storage.
struct DenseMatrix {
    int n = 0;
    std::vector<double> a;

    static DenseMatrix zero(int n);
    double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }
    double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
};

/// Expands the block system to a dense matrix in the same interleaved order.
DenseMatrix to_dense(const BlockTridiagonalMatrix& a);

/// Dense LU with partial pivoting (oracle path). Destroys m. Throws
/// SolverError on a singular pivot (naming the column) and on a failed
/// residual check.
std::vector<double> dense_solve_inplace(DenseMatrix& m, std::span<const double> rhs);

/// Copying convenience wrapper around dense_solve_inplace.
std::vector<double> dense_solve(const DenseMatrix& m, std::span<const double> rhs);

} // namespace crossdiff
