#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace crossdiff {

/// One axis of a rectangular grid: [lower, upper] split into `cells`
/// uniform intervals, nodes at lower + j*spacing(), j = 0..cells.
struct Axis {
    double lower = 0.0;
    double upper = 1.0;
    int cells = 1;

    double spacing() const { return (upper - lower) / cells; }
    int nodes() const { return cells + 1; }
    bool operator==(const Axis&) const = default;
};

/// Uniform rectangular grid in 2 or 3 dimensions. Value type; fields carry
/// their own copy and grids compare by axes. Node indices run
/// direction-1 fastest: idx = j1 + n1*(j2 + n2*j3).
class Grid {
public:
    Grid() = default;

    /// Throws ConfigError unless axes.size() is 2 or 3, every cells >= 1
    /// and every upper > lower.
    static Grid make(std::span<const Axis> axes);
    static Grid make(std::initializer_list<Axis> axes);

    /// Pixel-style grid: [0, N_k] with unit spacing along every axis.
    static Grid pixels(std::span<const int> cells);
    static Grid pixels(std::initializer_list<int> cells);

    int dim() const { return dim_; }
    const Axis& axis(int k) const;
    double spacing(int k) const { return axis(k).spacing(); }
    int cells(int k) const { return axis(k).cells; }
    int nodes(int k) const { return axis(k).nodes(); }

    std::size_t node_count() const;
    std::size_t node_index(int j1, int j2 = 0, int j3 = 0) const;
    std::array<int, 3> node_coords(std::size_t idx) const;
    double coordinate(int k, int j) const;

    /// Trapezoid quadrature weight along axis k: h_k/2 at the two end
    /// nodes, h_k inside. Products of these are the node weights of the
    /// discrete inner product.
    double axis_weight(int k, int j) const;
    double node_weight(int j1, int j2 = 0, int j3 = 0) const;

    bool operator==(const Grid&) const = default;

private:
    int dim_ = 0;
    std::array<Axis, 3> axes_{};
};

/// Scalar grid function with one value per node, canonical ordering.
class Field {
public:
    Field() = default;
    explicit Field(const Grid& grid, double fill = 0.0);

    const Grid& grid() const { return grid_; }
    std::size_t size() const { return values_.size(); }

    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }
    double at(int j1, int j2 = 0, int j3 = 0) const;
    double& at(int j1, int j2 = 0, int j3 = 0);

    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }

private:
    Grid grid_;
    std::vector<double> values_;
};

/// Values attached to the half-points j + e_k/2 of one direction k:
/// cells(k) entries along k, nodes(l) along every other axis, same
/// fastest-first ordering over those extents.
class HalfPointField {
public:
    HalfPointField() = default;
    HalfPointField(const Grid& grid, int direction, double fill = 0.0);

    const Grid& grid() const { return grid_; }
    int direction() const { return dir_; }
    int extent(int k) const;
    std::size_t size() const { return values_.size(); }

    /// j along direction() addresses the half-point j + 1/2.
    std::size_t index(int j1, int j2 = 0, int j3 = 0) const;
    double at(int j1, int j2 = 0, int j3 = 0) const;
    double& at(int j1, int j2 = 0, int j3 = 0);
    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }

    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }

private:
    Grid grid_;
    int dir_ = 0;
    std::vector<double> values_;
};

/// Solution pair W = (U, V) with the damping anchors (U0, V0) and the
/// current time. All four fields live on one grid.
struct StateW {
    Field u;
    Field v;
    Field u0;
    Field v0;
    double t = 0.0;

    StateW() = default;
    StateW(Field u_, Field v_, Field u0_, Field v0_, double t_);

    /// Anchors initialized to copies of the initial fields.
    static StateW from_initial(Field u_, Field v_, double t0 = 0.0);

    const Grid& grid() const { return u.grid(); }
};

/// Forward divided differences (Z_{j+1} - Z_j)/h_k at the half-points of
/// direction k.
HalfPointField delta_half(const Field& z, int direction);

/// Divided differences of a half-point field back at the nodes,
/// (P_{j+1/2} - P_{j-1/2})/h_k, closed at the axis ends by the
/// homogeneous-Neumann mirror rule (odd ghost: P_{-1/2} = -P_{1/2}).
Field delta_div(const HalfPointField& p);

/// Composition of the two: the second-difference building block
/// (Z_{j+1} - 2 Z_j + Z_{j-1})/h_k^2 inside, 2(Z_1 - Z_0)/h_k^2 at the
/// boundary. Throws on out-of-range node indices.
double delta_node(const Field& z, int direction, std::array<int, 3> node);

/// Pointwise product, both fields on the same grid and direction.
HalfPointField hadamard(const HalfPointField& a, const HalfPointField& b);

/// Cell-corner quadrature inner product (tensor trapezoid weights).
double inner_h(const Field& a, const Field& b);

/// Edge-midpoint quadrature inner product of one direction's half-points.
double inner_hk_star(const HalfPointField& a, const HalfPointField& b);

double norm_h(const Field& a);
double norm_w(const StateW& w);

/// (Z, 1)_h: the quadrature-weighted grid sum, the discrete mass that the
/// zero-damping schemes conserve.
double weighted_sum(const Field& z);

} // namespace crossdiff
