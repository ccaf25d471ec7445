#include "crossdiff/model.hpp"

#include <cmath>
#include <string>

#include "crossdiff/errors.hpp"

namespace crossdiff {

InfluenceModel InfluenceModel::general(std::array<CoefficientFn, 4> d) {
    for (const auto& fn : d)
        if (!fn) throw ConfigError("general influence model: missing coefficient function");
    InfluenceModel m;
    m.impl_ = GeneralInfluence{std::move(d)};
    return m;
}

InfluenceModel InfluenceModel::scaled_constant(CoefficientFn g, std::array<double, 4> m) {
    if (!g) throw ConfigError("scaled-constant influence model: missing scale function");
    InfluenceModel out;
    out.impl_ = ScaledConstantInfluence{std::move(g), m};
    return out;
}

InfluenceModel InfluenceModel::complex_diffusion(CoefficientFn g, CoefficientFn f) {
    if (!g || !f) throw ConfigError("complex-diffusion influence model: missing g or f");
    InfluenceModel out;
    out.impl_ = ComplexDiffusionInfluence{std::move(g), std::move(f)};
    return out;
}

InfluenceKind InfluenceModel::kind() const {
    return std::visit(
        [](const auto& impl) {
            using T = std::decay_t<decltype(impl)>;
            if constexpr (std::is_same_v<T, GeneralInfluence>) return InfluenceKind::General;
            else if constexpr (std::is_same_v<T, ScaledConstantInfluence>)
                return InfluenceKind::ScaledConstant;
            else return InfluenceKind::ComplexDiffusion;
        },
        impl_);
}

std::array<double, 4> InfluenceModel::evaluate(double u, double v, double t) const {
    return std::visit(
        [&](const auto& impl) -> std::array<double, 4> {
            using T = std::decay_t<decltype(impl)>;
            if constexpr (std::is_same_v<T, GeneralInfluence>) {
                return {impl.d[0](u, v, t), impl.d[1](u, v, t), impl.d[2](u, v, t),
                        impl.d[3](u, v, t)};
            } else if constexpr (std::is_same_v<T, ScaledConstantInfluence>) {
                const double g = impl.g(u, v, t);
                return {g * impl.m[0], g * impl.m[1], g * impl.m[2], g * impl.m[3]};
            } else {
                const double g = impl.g(u, v, t);
                const double f = impl.f(u, v, t);
                return {g, -f, f, g};
            }
        },
        impl_);
}

const ScaledConstantInfluence* InfluenceModel::as_scaled_constant() const {
    return std::get_if<ScaledConstantInfluence>(&impl_);
}

const ComplexDiffusionInfluence* InfluenceModel::as_complex_diffusion() const {
    return std::get_if<ComplexDiffusionInfluence>(&impl_);
}

ReactionModel ReactionModel::none() { return constant(0.0, 0.0); }

ReactionModel ReactionModel::constant(double l1, double l2) {
    ReactionModel r;
    r.lambda1 = [l1](double, double, double) { return l1; };
    r.lambda2 = [l2](double, double, double) { return l2; };
    if (l1 == l2) r.relation = ReactionRelation::Equal;
    else if (l1 > l2) r.relation = ReactionRelation::FirstDominates;
    else r.relation = ReactionRelation::SecondDominates;
    return r;
}

namespace {

[[noreturn]] void bad_node_value(const char* what, const std::array<int, 3>& j, double value) {
    throw EvaluationError(std::string(what) + " at node (" + std::to_string(j[0]) + "," +
                          std::to_string(j[1]) + "," + std::to_string(j[2]) + "): " +
                          std::to_string(value));
}

} // namespace

EvaluatedCoefficients evaluate_coefficients(const StateW& state, const InfluenceModel& model,
                                            const ReactionModel& reaction, double t_eval) {
    const Grid& g = state.grid();
    if (!reaction.lambda1 || !reaction.lambda2)
        throw ConfigError("reaction model: missing damping function");

    EvaluatedCoefficients out;
    out.grid = g;
    out.t_eval = t_eval;

    const std::size_t n = g.node_count();
    std::array<std::vector<double>, 4> node_d;
    for (auto& a : node_d) a.resize(n);
    out.lambda1.resize(n);
    out.lambda2.resize(n);

    for (std::size_t idx = 0; idx < n; ++idx) {
        const double u = state.u[idx];
        const double v = state.v[idx];
        const auto d = model.evaluate(u, v, t_eval);
        for (int l = 0; l < 4; ++l) {
            if (!std::isfinite(d[l]))
                bad_node_value("non-finite diffusion coefficient", g.node_coords(idx), d[l]);
            node_d[l][idx] = d[l];
        }
        const double l1 = reaction.lambda1(u, v, t_eval);
        const double l2 = reaction.lambda2(u, v, t_eval);
        if (!std::isfinite(l1) || l1 < 0.0)
            bad_node_value("unusable damping rate lambda1", g.node_coords(idx), l1);
        if (!std::isfinite(l2) || l2 < 0.0)
            bad_node_value("unusable damping rate lambda2", g.node_coords(idx), l2);
        out.lambda1[idx] = l1;
        out.lambda2[idx] = l2;
    }

    for (int dir = 0; dir < g.dim(); ++dir) {
        std::size_t node_stride = 1;
        for (int k = 0; k < dir; ++k) node_stride *= static_cast<std::size_t>(g.nodes(k));
        for (int l = 0; l < 4; ++l) {
            HalfPointField h(g, dir);
            const int e1 = h.extent(0);
            const int e2 = g.dim() >= 2 ? h.extent(1) : 1;
            const int e3 = g.dim() >= 3 ? h.extent(2) : 1;
            std::size_t hidx = 0;
            for (int j3 = 0; j3 < e3; ++j3)
                for (int j2 = 0; j2 < e2; ++j2)
                    for (int j1 = 0; j1 < e1; ++j1, ++hidx) {
                        const std::size_t a = g.node_index(j1, j2, j3);
                        h[hidx] = 0.5 * (node_d[l][a] + node_d[l][a + node_stride]);
                    }
            out.half_d[dir][l] = std::move(h);
        }
    }
    return out;
}

InfluenceModel make_heat_model(double diffusivity) {
    return make_scaled_constant_preset(diffusivity, {1.0, 0.0, 0.0, 1.0});
}

InfluenceModel make_scaled_constant_preset(double g, std::array<double, 4> m) {
    return InfluenceModel::scaled_constant([g](double, double, double) { return g; }, m);
}

InfluenceModel make_perona_malik_complex(double kappa, double f_constant) {
    if (kappa <= 0.0) throw ConfigError("perona-malik preset: kappa must be positive");
    auto g = [kappa](double, double v, double) {
        const double s = v / kappa;
        return 1.0 / (1.0 + s * s);
    };
    auto f = [f_constant](double, double, double) { return f_constant; };
    return InfluenceModel::complex_diffusion(g, f);
}

InfluenceModel make_constant_complex(double g, double f) {
    return InfluenceModel::complex_diffusion([g](double, double, double) { return g; },
                                             [f](double, double, double) { return f; });
}

InfluenceModel make_constant_general(std::array<double, 4> d) {
    std::array<CoefficientFn, 4> fns;
    for (int l = 0; l < 4; ++l) fns[l] = [c = d[l]](double, double, double) { return c; };
    return InfluenceModel::general(std::move(fns));
}

} // namespace crossdiff
