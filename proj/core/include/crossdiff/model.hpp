#pragma once

#include <array>
#include <functional>
#include <variant>
#include <vector>

#include "crossdiff/grid.hpp"

namespace crossdiff {

/// Scalar coefficient of the state: value = f(u, v, t).
using CoefficientFn = std::function<double(double u, double v, double t)>;

enum class InfluenceKind { General, ScaledConstant, ComplexDiffusion };

/// Four free functions d1..d4; the flux of the first component is
/// d1*grad(u) + d2*grad(v), of the second d3*grad(u) + d4*grad(v).
struct GeneralInfluence {
    std::array<CoefficientFn, 4> d;
};

/// d = g(u,v,t) * M for a constant 2x2 matrix M (row-major m[0..3]).
struct ScaledConstantInfluence {
    CoefficientFn g;
    std::array<double, 4> m;
};

/// Complex-diffusion shape (d1, d2, d3, d4) = (g, -f, f, g).
struct ComplexDiffusionInfluence {
    CoefficientFn g;
    CoefficientFn f;
};

/// The cross-diffusion coefficient matrix, in one of three algebraic
/// shapes. The shape is part of the model: stability checks dispatch on
/// it, and evaluate() expands it to the four coefficients.
class InfluenceModel {
public:
    static InfluenceModel general(std::array<CoefficientFn, 4> d);
    static InfluenceModel scaled_constant(CoefficientFn g, std::array<double, 4> m);
    static InfluenceModel complex_diffusion(CoefficientFn g, CoefficientFn f);

    InfluenceKind kind() const;

    /// (d1, d2, d3, d4) at one state sample.
    std::array<double, 4> evaluate(double u, double v, double t) const;

    const ScaledConstantInfluence* as_scaled_constant() const;
    const ComplexDiffusionInfluence* as_complex_diffusion() const;

private:
    std::variant<GeneralInfluence, ScaledConstantInfluence, ComplexDiffusionInfluence> impl_;
};

/// How the two damping rates relate; drives the case split of the
/// reaction-aware solvability checks.
enum class ReactionRelation { Equal, FirstDominates, SecondDominates, SignChanges };

struct ReactionModel {
    CoefficientFn lambda1;
    CoefficientFn lambda2;
    ReactionRelation relation = ReactionRelation::Equal;

    static ReactionModel none();
    /// Constant rates; the relation tag is derived from the two values.
    static ReactionModel constant(double l1, double l2);
};

/// Coefficients frozen at one state: d1..d4 averaged onto the half-points
/// of every direction, damping rates at the nodes, all evaluated at t_eval.
struct EvaluatedCoefficients {
    Grid grid;
    double t_eval = 0.0;
    std::array<std::array<HalfPointField, 4>, 3> half_d;
    std::vector<double> lambda1;
    std::vector<double> lambda2;
};

/// Evaluates the model at state (U, V) and time t_eval. Half-point values
/// are the arithmetic means of the two adjacent node evaluations. Throws
/// EvaluationError (naming the node) on non-finite values or negative
/// damping rates.
EvaluatedCoefficients evaluate_coefficients(const StateW& state, const InfluenceModel& model,
                                            const ReactionModel& reaction, double t_eval);

/// Presets. Parameters are caller-supplied configuration.
InfluenceModel make_heat_model(double diffusivity = 1.0);
InfluenceModel make_scaled_constant_preset(double g = 1.0,
                                           std::array<double, 4> m = {1.0, -1.0, 1.0, 1.0});
/// g(u,v) = 1 / (1 + (v/kappa)^2), f constant.
InfluenceModel make_perona_malik_complex(double kappa, double f_constant);
InfluenceModel make_constant_complex(double g, double f);
InfluenceModel make_constant_general(std::array<double, 4> d);

} // namespace crossdiff
