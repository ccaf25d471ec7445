#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "crossdiff/grid.hpp"
#include "crossdiff/model.hpp"

namespace crossdiff {

enum class Verdict { Pass, Fail, NotApplicable };
const char* to_string(Verdict v);

/// One point probe of the state space for sampling-based checks.
struct StateSample {
    double u = 0.0;
    double v = 0.0;
    double t = 0.0;
};

/// Positive semi-definiteness of a (not necessarily symmetric) 2x2 matrix,
/// meaning PSD of its symmetric part, with a tolerance relative to
/// max(1, |M|_inf). strict demands both eigenvalues > +tol.
struct PsdResult {
    Verdict verdict = Verdict::NotApplicable;
    double min_eigenvalue = 0.0;
    double scale = 1.0;
};
PsdResult check_psd(const std::array<double, 4>& m, bool strict = false);

struct ConditionResult {
    std::string name;
    Verdict verdict = Verdict::NotApplicable;
    std::string witness;          // failure context; empty when passing
    double recommended_dt = 0.0;  // time-step bound when the check yields one
};

/// Diffusion matrix PSD at every sample.
ConditionResult check_model_psd(const InfluenceModel& model, std::span<const StateSample> samples,
                                bool strict = false);

/// Row-dominance shape of the diffusion matrix: d1 >= |d2 + d3|/2 and
/// d4 >= |d2 + d3|/2 at every sample.
ConditionResult check_diagonal_dominance(const InfluenceModel& model,
                                         std::span<const StateSample> samples);

/// Explicit time-step bound for the complex-diffusion shape:
/// 4 dt / h_k^2 * max (g^2 + f^2)/g < 1 per axis. recommended_dt carries
/// min_k h_k^2 / (4 max (g^2+f^2)/g). NotApplicable for other shapes.
ConditionResult check_explicit_bound(const InfluenceModel& model, const Grid& grid, double dt,
                                     std::span<const StateSample> samples);

/// The dissipation form of the scheme's energy argument, evaluated on a
/// concrete state. For theta >= 1/2 the bare form must be nonnegative;
/// below 1/2 the averaged-scheme penalty (4 dt / h_k^2)(1+eta_i)|...|^2 is
/// subtracted first. direction = -1 sums over all axes, otherwise only
/// that axis contributes (the per-direction variant of the splitting
/// analysis).
struct EnergyFormConfig {
    double theta = 1.0;
    double dt = 0.0;
    double eta1 = 1e-6;
    double eta2 = 1e-6;
    int direction = -1;
};
struct EnergyFormResult {
    Verdict verdict = Verdict::NotApplicable;
    double value = 0.0;    // the (possibly penalized) form
    double scale = 1.0;    // sum of term magnitudes used for the tolerance
    double sup_eta = 0.0;  // largest uniform eta keeping the form >= 0; inf if unconstrained
    std::string witness;
};
EnergyFormResult check_energy_form(const StateW& state, const InfluenceModel& model, double t_eval,
                                   const EnergyFormConfig& cfg);

/// Reaction-aware solvability case matrices, dispatched on the reaction
/// relation tag with k_i = 1 + r lambda_i / 2:
///   first dominates:  [[k1^2 + 4r(k1-k2)d1, 2r(k1-k2)d2], [., k2^2]]
///   second dominates: [[k1^2, 2r(k2-k1)d3], [., k2^2 + 4r(k2-k1)d4]]
/// (halved shape uses 2r / r in place of 4r / 2r). Equal passes outright;
/// a sign-changing relation must satisfy both matrices.
enum class CaseMatrixShape { FullCoefficient, Halved };
ConditionResult check_reaction_case_matrices(const InfluenceModel& model,
                                             const ReactionModel& reaction, double r,
                                             std::span<const StateSample> samples,
                                             CaseMatrixShape shape, bool strict);

/// Combined solvability verdict for the directional implicit systems at
/// coupling scale r: the algebraic conditions select the regime (any step
/// size for a PSD scaled-constant or fixed-ratio complex shape, small
/// steps for a general PSD model), and the assembled blocks of every
/// direction and line on `state` must satisfy
/// |B_j^{-1} U_j| + |B_j^{-1} L_{j-1}| <= 1 + 1e-12.
enum class SolvabilityRegime { AnyStep, SmallStep, Unknown };
struct SolvabilityResult {
    Verdict verdict = Verdict::NotApplicable;
    SolvabilityRegime regime = SolvabilityRegime::Unknown;
    double max_block_norm_sum = 0.0;
    std::string witness;
};
SolvabilityResult check_solvability(const StateW& state, const InfluenceModel& model,
                                    const ReactionModel& reaction, double r,
                                    double reaction_weight, double t_eval,
                                    std::span<const StateSample> samples);

/// Norm history of a run. Verdict: Diverged when a value is non-finite or
/// the ratio to the initial norm exceeds divergence_factor; Monotone when
/// nonincreasing within a 1e-12 relative slack; Bounded otherwise.
enum class NormVerdict { Monotone, Bounded, Diverged };
const char* to_string(NormVerdict v);

class NormHistory {
public:
    struct Entry {
        int step;
        double t;
        double norm;
    };

    void push(int step, double t, double norm);
    const std::vector<Entry>& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }

    double max_ratio() const; // max norm / initial norm
    NormVerdict verdict(double divergence_factor = 10.0) const;

private:
    std::vector<Entry> entries_;
};

/// Aggregated verdict table with text and JSON renderings.
struct StabilityReport {
    std::vector<ConditionResult> conditions;

    bool all_passed() const;
    std::string to_text() const;
    std::string to_json() const;
};

} // namespace crossdiff
