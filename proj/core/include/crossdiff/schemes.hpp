#pragma once

#include <cstddef>
#include <vector>

#include "crossdiff/blocksolve.hpp"
#include "crossdiff/grid.hpp"
#include "crossdiff/model.hpp"

namespace crossdiff {

enum class Scheme { FullTheta, AOS, AMOS };
enum class SolverKind { BlockBanded, DenseOracle };

struct SchemeConfig {
    Scheme scheme = Scheme::AOS;
    SolverKind solver = SolverKind::BlockBanded;
    double theta = 1.0;
    double dt = 0.1;

    /// Throws ConfigError on theta outside [0,1], dt <= 0, or the
    /// unsupported FullTheta + BlockBanded combination (the unsplit matrix
    /// is not block tridiagonal).
    void validate(int dim) const;
};

/// Knobs shared by all steppers. Line systems of one sweep are
/// independent; `parallel` distributes them over threads without changing
/// results (disjoint writes, per-thread workspaces).
struct StepOptions {
    bool compute_residual = true;
    bool collect_diagnostics = false;
    bool parallel = false;
    int threads = 0; // 0: hardware concurrency
    std::size_t max_dense_unknowns = 20000;
};

struct StepReport {
    double norm_before = 0.0;
    double norm_after = 0.0;
    int systems_solved = 0;
    double wall_seconds = 0.0;
    double max_residual = 0.0;  // max |A x - rhs| over solved line systems
    double max_ubar_norm = 0.0; // filled when collect_diagnostics is set
};

/// Parameters of the generic directional fractional step
///   (I - r L_k + w r Lam) out = in + (mu - r) (L_k in - w Lam in) + w mu Lam anchor,
/// where L_k is the frozen-coefficient divergence form of direction k and
/// Lam = diag(lambda1, lambda2). mu is the fractional-step time multiplier
/// (denominator times dt); r = theta * mu is the implicit coupling scale.
/// theta = 0 degenerates to the matrix-free explicit update.
struct SweepParams {
    double r = 0.0;
    double mu = 0.0;
    double reaction_weight = 1.0;
    double theta = 1.0;
};

/// AOS: r = dim*theta*dt, mu = dim*dt, weight 1/dim.
/// AMOS: r = theta*dt, mu = dt, weight 1/dim.
/// FullTheta: r = theta*dt, mu = dt, weight 1.
SweepParams make_sweep_params(Scheme scheme, int dim, double theta, double dt);

/// One assembled line system of a direction, in interleaved component
/// order along the line. Lines are enumerated fastest-first over the
/// orthogonal axes in increasing axis order.
struct DirectionalSystem {
    int direction = 0;
    std::size_t line = 0;
    BlockTridiagonalMatrix matrix;
    std::vector<double> rhs;
};

std::size_t line_count(const Grid& g, int direction);

DirectionalSystem assemble_directional_system(const StateW& in, const EvaluatedCoefficients& c,
                                              int direction, std::size_t line,
                                              const SweepParams& p);

struct SweepStats {
    int systems = 0;
    double max_residual = 0.0;
    double max_ubar = 0.0;
};

/// Solves every line system of one direction and returns the swept state
/// (anchors and t copied from the input). Errors name direction and line.
StateW directional_sweep(const StateW& in, const EvaluatedCoefficients& c, int direction,
                         const SweepParams& p, SolverKind solver, const StepOptions& opt,
                         SweepStats* stats = nullptr);

/// Frozen-coefficient operator application: adds the divergence-form
/// contribution of `direction` to (out_u, out_v).
void apply_operator(const StateW& in, const EvaluatedCoefficients& c, int direction,
                    Field& out_u, Field& out_v);
/// Sum over all directions (out fields are overwritten).
void apply_operator_all(const StateW& in, const EvaluatedCoefficients& c, Field& out_u,
                        Field& out_v);

/// Dense operator matrix in [all U; all V] ordering, nodes in canonical
/// order (oracle path; row sums vanish under the zero-flux closure).
DenseMatrix assemble_full_operator(const EvaluatedCoefficients& c);

struct FullThetaSystem {
    DenseMatrix matrix; // I - theta dt (A - Lam)
    std::vector<double> rhs;
};
FullThetaSystem build_full_theta_system(const StateW& in, const EvaluatedCoefficients& c,
                                        double theta, double dt);

struct StepResult {
    StateW state;
    StepReport report;
};

/// The iteration cores operate on pre-evaluated coefficients (the
/// benchmark times these, excluding coefficient evaluation). The step_*
/// wrappers evaluate at t + theta*dt, run the core, advance time by dt,
/// verify finiteness, and fill the report.
StateW full_theta_iteration(const StateW& in, const EvaluatedCoefficients& c, double theta,
                            double dt, const StepOptions& opt, SweepStats* stats = nullptr);
StateW aos_iteration(const StateW& in, const EvaluatedCoefficients& c, const SweepParams& p,
                     SolverKind solver, const StepOptions& opt, SweepStats* stats = nullptr);
StateW amos_iteration(const StateW& in, const EvaluatedCoefficients& c, const SweepParams& p,
                      SolverKind solver, const StepOptions& opt, SweepStats* stats = nullptr);

StepResult step_full_theta(const StateW& in, const InfluenceModel& model,
                           const ReactionModel& reaction, const SchemeConfig& cfg,
                           const StepOptions& opt = {});
StepResult step_explicit(const StateW& in, const InfluenceModel& model,
                         const ReactionModel& reaction, double dt, const StepOptions& opt = {});
StepResult step_aos(const StateW& in, const InfluenceModel& model, const ReactionModel& reaction,
                    const SchemeConfig& cfg, const StepOptions& opt = {});
StepResult step_amos(const StateW& in, const InfluenceModel& model, const ReactionModel& reaction,
                     const SchemeConfig& cfg, const StepOptions& opt = {});

/// Dispatch on cfg.scheme (theta = 0 routes to the explicit update).
StepResult advance(const StateW& in, const InfluenceModel& model, const ReactionModel& reaction,
                   const SchemeConfig& cfg, const StepOptions& opt = {});

} // namespace crossdiff
