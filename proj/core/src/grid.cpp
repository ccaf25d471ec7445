#include "crossdiff/grid.hpp"

#include <cmath>
#include <string>

#include "crossdiff/errors.hpp"

namespace crossdiff {

Grid Grid::make(std::span<const Axis> axes) {
    if (axes.size() != 2 && axes.size() != 3)
        throw ConfigError("grid dimension must be 2 or 3, got " + std::to_string(axes.size()));
    Grid g;
    g.dim_ = static_cast<int>(axes.size());
    for (int k = 0; k < g.dim_; ++k) {
        const Axis& a = axes[k];
        if (a.cells < 1)
            throw ConfigError("axis " + std::to_string(k + 1) + ": cell count must be >= 1");
        if (!(a.upper > a.lower))
            throw ConfigError("axis " + std::to_string(k + 1) + ": upper bound must exceed lower");
        g.axes_[k] = a;
    }
    return g;
}

Grid Grid::make(std::initializer_list<Axis> axes) {
    return make(std::span<const Axis>(axes.begin(), axes.size()));
}

Grid Grid::pixels(std::span<const int> cells) {
    std::array<Axis, 3> axes{};
    if (cells.size() > 3) throw ConfigError("grid dimension must be 2 or 3");
    for (std::size_t k = 0; k < cells.size(); ++k)
        axes[k] = Axis{0.0, static_cast<double>(cells[k]), cells[k]};
    return make(std::span<const Axis>(axes.data(), cells.size()));
}

Grid Grid::pixels(std::initializer_list<int> cells) {
    return pixels(std::span<const int>(cells.begin(), cells.size()));
}

const Axis& Grid::axis(int k) const {
    if (k < 0 || k >= dim_)
        throw ConfigError("axis index " + std::to_string(k) + " out of range for dim " +
                          std::to_string(dim_));
    return axes_[k];
}

std::size_t Grid::node_count() const {
    std::size_t n = 1;
    for (int k = 0; k < dim_; ++k) n *= static_cast<std::size_t>(nodes(k));
    return n;
}

std::size_t Grid::node_index(int j1, int j2, int j3) const {
    const int j[3] = {j1, j2, j3};
    std::size_t idx = 0, stride = 1;
    for (int k = 0; k < dim_; ++k) {
        if (j[k] < 0 || j[k] >= nodes(k))
            throw ConfigError("node index " + std::to_string(j[k]) + " out of range on axis " +
                              std::to_string(k + 1));
        idx += stride * static_cast<std::size_t>(j[k]);
        stride *= static_cast<std::size_t>(nodes(k));
    }
    for (int k = dim_; k < 3; ++k)
        if (j[k] != 0)
            throw ConfigError("node index on absent axis " + std::to_string(k + 1));
    return idx;
}

std::array<int, 3> Grid::node_coords(std::size_t idx) const {
    std::array<int, 3> j{0, 0, 0};
    for (int k = 0; k < dim_; ++k) {
        const auto n = static_cast<std::size_t>(nodes(k));
        j[k] = static_cast<int>(idx % n);
        idx /= n;
    }
    return j;
}

double Grid::coordinate(int k, int j) const {
    const Axis& a = axis(k);
    return a.lower + a.spacing() * j;
}

double Grid::axis_weight(int k, int j) const {
    const Axis& a = axis(k);
    const double h = a.spacing();
    return (j == 0 || j == a.cells) ? 0.5 * h : h;
}

double Grid::node_weight(int j1, int j2, int j3) const {
    const int j[3] = {j1, j2, j3};
    double w = 1.0;
    for (int k = 0; k < dim_; ++k) w *= axis_weight(k, j[k]);
    return w;
}

Field::Field(const Grid& grid, double fill)
    : grid_(grid), values_(grid.node_count(), fill) {}

double Field::at(int j1, int j2, int j3) const { return values_[grid_.node_index(j1, j2, j3)]; }
double& Field::at(int j1, int j2, int j3) { return values_[grid_.node_index(j1, j2, j3)]; }

HalfPointField::HalfPointField(const Grid& grid, int direction, double fill)
    : grid_(grid), dir_(direction) {
    if (direction < 0 || direction >= grid.dim())
        throw ConfigError("half-point direction " + std::to_string(direction) +
                          " out of range for dim " + std::to_string(grid.dim()));
    std::size_t n = 1;
    for (int k = 0; k < grid.dim(); ++k) n *= static_cast<std::size_t>(extent(k));
    values_.assign(n, fill);
}

int HalfPointField::extent(int k) const {
    return k == dir_ ? grid_.cells(k) : grid_.nodes(k);
}

std::size_t HalfPointField::index(int j1, int j2, int j3) const {
    const int j[3] = {j1, j2, j3};
    std::size_t idx = 0, stride = 1;
    for (int k = 0; k < grid_.dim(); ++k) {
        if (j[k] < 0 || j[k] >= extent(k))
            throw ConfigError("half-point index " + std::to_string(j[k]) +
                              " out of range on axis " + std::to_string(k + 1));
        idx += stride * static_cast<std::size_t>(j[k]);
        stride *= static_cast<std::size_t>(extent(k));
    }
    return idx;
}

double HalfPointField::at(int j1, int j2, int j3) const { return values_[index(j1, j2, j3)]; }
double& HalfPointField::at(int j1, int j2, int j3) { return values_[index(j1, j2, j3)]; }

namespace {

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
    if (!(a == b)) throw ConfigError(std::string(what) + ": fields live on different grids");
}

/// Iterates idx = fast + stride*line over every grid line of `direction`,
/// calling fn(base_index, stride, length). Works for node extents.
template <class Extents, class Fn>
void for_each_line(const Extents& ext, int dim, int direction, Fn&& fn) {
    std::size_t stride = 1;
    for (int k = 0; k < direction; ++k) stride *= static_cast<std::size_t>(ext(k));
    const std::size_t len = static_cast<std::size_t>(ext(direction));

    std::size_t outer = 1;
    for (int k = direction + 1; k < dim; ++k) outer *= static_cast<std::size_t>(ext(k));
    const std::size_t inner = stride;

    for (std::size_t o = 0; o < outer; ++o) {
        const std::size_t base_o = o * inner * len;
        for (std::size_t i = 0; i < inner; ++i) fn(base_o + i, stride, len);
    }
}

} // namespace

StateW::StateW(Field u_, Field v_, Field u0_, Field v0_, double t_)
    : u(std::move(u_)), v(std::move(v_)), u0(std::move(u0_)), v0(std::move(v0_)), t(t_) {
    require_same_grid(u.grid(), v.grid(), "StateW");
    require_same_grid(u.grid(), u0.grid(), "StateW");
    require_same_grid(u.grid(), v0.grid(), "StateW");
}

StateW StateW::from_initial(Field u_, Field v_, double t0) {
    Field u0 = u_, v0 = v_;
    return StateW(std::move(u_), std::move(v_), std::move(u0), std::move(v0), t0);
}

HalfPointField delta_half(const Field& z, int direction) {
    const Grid& g = z.grid();
    HalfPointField p(g, direction);
    const double inv_h = 1.0 / g.spacing(direction);
    // Node lines have one more entry than half-point lines; walk node lines.
    for_each_line([&](int k) { return g.nodes(k); }, g.dim(), direction,
                  [&](std::size_t base, std::size_t stride, std::size_t len) {
                      // Half-point storage shares the layout of the sub-lattice with
                      // cells(direction) entries; recompute its base from coordinates.
                      const auto c = g.node_coords(base);
                      std::size_t pb = p.index(c[0], c[1], c[2]);
                      std::size_t pstride = 1;
                      for (int k = 0; k < direction; ++k)
                          pstride *= static_cast<std::size_t>(p.extent(k));
                      for (std::size_t j = 0; j + 1 < len; ++j)
                          p[pb + j * pstride] =
                              (z[base + (j + 1) * stride] - z[base + j * stride]) * inv_h;
                  });
    return p;
}

Field delta_div(const HalfPointField& p) {
    const Grid& g = p.grid();
    const int dir = p.direction();
    Field out(g);
    const double inv_h = 1.0 / g.spacing(dir);
    const std::size_t cells = static_cast<std::size_t>(g.cells(dir));

    std::size_t pstride = 1;
    for (int k = 0; k < dir; ++k) pstride *= static_cast<std::size_t>(p.extent(k));

    for_each_line([&](int k) { return g.nodes(k); }, g.dim(), dir,
                  [&](std::size_t base, std::size_t stride, std::size_t len) {
                      const auto c = g.node_coords(base);
                      const std::size_t pb = p.index(c[0], c[1], c[2]);
                      // Mirror closure: ghost flux before node 0 is -P_{1/2},
                      // ghost flux past node N is -P_{N-1/2}.
                      out[base] = 2.0 * p[pb] * inv_h;
                      for (std::size_t j = 1; j + 1 < len; ++j)
                          out[base + j * stride] =
                              (p[pb + j * pstride] - p[pb + (j - 1) * pstride]) * inv_h;
                      out[base + (len - 1) * stride] = -2.0 * p[pb + (cells - 1) * pstride] * inv_h;
                  });
    return out;
}

double delta_node(const Field& z, int direction, std::array<int, 3> node) {
    const Grid& g = z.grid();
    g.node_index(node[0], node[1], node[2]); // range check
    const int j = node[direction];
    const double h = g.spacing(direction);
    auto shifted = [&](int dj) {
        auto n = node;
        n[direction] += dj;
        return z.at(n[0], n[1], n[2]);
    };
    const double zc = shifted(0);
    const int last = g.cells(direction);
    if (j == 0) return 2.0 * (shifted(+1) - zc) / (h * h);
    if (j == last) return 2.0 * (shifted(-1) - zc) / (h * h);
    return (shifted(+1) - 2.0 * zc + shifted(-1)) / (h * h);
}

HalfPointField hadamard(const HalfPointField& a, const HalfPointField& b) {
    require_same_grid(a.grid(), b.grid(), "hadamard");
    if (a.direction() != b.direction())
        throw ConfigError("hadamard: half-point fields of different directions");
    HalfPointField out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

double inner_h(const Field& a, const Field& b) {
    require_same_grid(a.grid(), b.grid(), "inner_h");
    const Grid& g = a.grid();
    const int n1 = g.nodes(0);
    const int n2 = g.dim() >= 2 ? g.nodes(1) : 1;
    const int n3 = g.dim() >= 3 ? g.nodes(2) : 1;
    double sum = 0.0;
    std::size_t idx = 0;
    for (int j3 = 0; j3 < n3; ++j3) {
        const double w3 = g.dim() >= 3 ? g.axis_weight(2, j3) : 1.0;
        for (int j2 = 0; j2 < n2; ++j2) {
            const double w23 = w3 * (g.dim() >= 2 ? g.axis_weight(1, j2) : 1.0);
            for (int j1 = 0; j1 < n1; ++j1, ++idx)
                sum += w23 * g.axis_weight(0, j1) * a[idx] * b[idx];
        }
    }
    return sum;
}

double inner_hk_star(const HalfPointField& a, const HalfPointField& b) {
    require_same_grid(a.grid(), b.grid(), "inner_hk_star");
    if (a.direction() != b.direction())
        throw ConfigError("inner_hk_star: half-point fields of different directions");
    const Grid& g = a.grid();
    const int dir = a.direction();
    const int e1 = a.extent(0);
    const int e2 = g.dim() >= 2 ? a.extent(1) : 1;
    const int e3 = g.dim() >= 3 ? a.extent(2) : 1;
    auto w_axis = [&](int k, int j) {
        // Full h_k along the half-point direction, trapezoid weight across.
        return k == dir ? g.spacing(k) : g.axis_weight(k, j);
    };
    double sum = 0.0;
    std::size_t idx = 0;
    for (int j3 = 0; j3 < e3; ++j3) {
        const double w3 = g.dim() >= 3 ? w_axis(2, j3) : 1.0;
        for (int j2 = 0; j2 < e2; ++j2) {
            const double w23 = w3 * (g.dim() >= 2 ? w_axis(1, j2) : 1.0);
            for (int j1 = 0; j1 < e1; ++j1, ++idx) sum += w23 * w_axis(0, j1) * a[idx] * b[idx];
        }
    }
    return sum;
}

double norm_h(const Field& a) { return std::sqrt(inner_h(a, a)); }

double norm_w(const StateW& w) {
    return std::sqrt(inner_h(w.u, w.u) + inner_h(w.v, w.v));
}

double weighted_sum(const Field& z) {
    const Grid& g = z.grid();
    double sum = 0.0;
    const int n1 = g.nodes(0);
    const int n2 = g.dim() >= 2 ? g.nodes(1) : 1;
    const int n3 = g.dim() >= 3 ? g.nodes(2) : 1;
    std::size_t idx = 0;
    for (int j3 = 0; j3 < n3; ++j3) {
        const double w3 = g.dim() >= 3 ? g.axis_weight(2, j3) : 1.0;
        for (int j2 = 0; j2 < n2; ++j2) {
            const double w23 = w3 * (g.dim() >= 2 ? g.axis_weight(1, j2) : 1.0);
            for (int j1 = 0; j1 < n1; ++j1, ++idx) sum += w23 * g.axis_weight(0, j1) * z[idx];
        }
    }
    return sum;
}

} // namespace crossdiff
