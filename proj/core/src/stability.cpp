#include "crossdiff/stability.hpp"

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <limits>

#include "crossdiff/blocksolve.hpp"
#include "crossdiff/errors.hpp"
#include "crossdiff/schemes.hpp"

namespace crossdiff {

const char* to_string(Verdict v) {
    switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::NotApplicable: return "not applicable";
    }
    return "?";
}

const char* to_string(NormVerdict v) {
    switch (v) {
    case NormVerdict::Monotone: return "monotone";
    case NormVerdict::Bounded: return "bounded";
    case NormVerdict::Diverged: return "diverged";
    }
    return "?";
}

namespace {

std::string format(const char* fmt, ...) {
    va_list args;
    va_start(args, fmt);
    char buf[512];
    std::vsnprintf(buf, sizeof(buf), fmt, args);
    va_end(args);
    return std::string(buf);
}

std::string sample_text(const StateSample& s) {
    return format("(u=%.6g, v=%.6g, t=%.6g)", s.u, s.v, s.t);
}

double norm_inf_2x2(const std::array<double, 4>& m) {
    return std::max(std::abs(m[0]) + std::abs(m[1]), std::abs(m[2]) + std::abs(m[3]));
}

} // namespace

PsdResult check_psd(const std::array<double, 4>& m, bool strict) {
    PsdResult r;
    const double off = 0.5 * (m[1] + m[2]);
    const double mean = 0.5 * (m[0] + m[3]);
    const double radius = std::hypot(0.5 * (m[0] - m[3]), off);
    r.min_eigenvalue = mean - radius;
    r.scale = std::max(1.0, norm_inf_2x2(m));
    const double tol = 1e-12 * r.scale;
    const bool ok = strict ? (r.min_eigenvalue > tol) : (r.min_eigenvalue >= -tol);
    r.verdict = ok ? Verdict::Pass : Verdict::Fail;
    return r;
}

ConditionResult check_model_psd(const InfluenceModel& model, std::span<const StateSample> samples,
                                bool strict) {
    ConditionResult out;
    out.name = strict ? "diffusion matrix positive definite" : "diffusion matrix PSD";
    out.verdict = Verdict::Pass;
    for (const auto& s : samples) {
        const auto d = model.evaluate(s.u, s.v, s.t);
        const PsdResult p = check_psd(d, strict);
        if (p.verdict != Verdict::Pass) {
            out.verdict = Verdict::Fail;
            out.witness = format("sample %s: d = [%.6g, %.6g; %.6g, %.6g], min eigenvalue of "
                                 "symmetric part = %.6g",
                                 sample_text(s).c_str(), d[0], d[1], d[2], d[3],
                                 p.min_eigenvalue);
            return out;
        }
    }
    if (samples.empty()) out.verdict = Verdict::NotApplicable;
    return out;
}

ConditionResult check_diagonal_dominance(const InfluenceModel& model,
                                         std::span<const StateSample> samples) {
    ConditionResult out;
    out.name = "diagonal dominance of the diffusion matrix";
    out.verdict = samples.empty() ? Verdict::NotApplicable : Verdict::Pass;
    for (const auto& s : samples) {
        const auto d = model.evaluate(s.u, s.v, s.t);
        const double c = 0.5 * std::abs(d[1] + d[2]);
        const double tol = 1e-12 * std::max(1.0, norm_inf_2x2(d));
        if (d[0] < c - tol || d[3] < c - tol) {
            out.verdict = Verdict::Fail;
            out.witness = format("sample %s: need d1, d4 >= |d2 + d3|/2 = %.6g, got d1 = %.6g, "
                                 "d4 = %.6g",
                                 sample_text(s).c_str(), c, d[0], d[3]);
            return out;
        }
    }
    return out;
}

ConditionResult check_explicit_bound(const InfluenceModel& model, const Grid& grid, double dt,
                                     std::span<const StateSample> samples) {
    ConditionResult out;
    out.name = "explicit step bound (complex-diffusion shape)";
    const auto* cd = model.as_complex_diffusion();
    if (cd == nullptr || samples.empty()) {
        out.verdict = Verdict::NotApplicable;
        return out;
    }
    double q = 0.0;
    for (const auto& s : samples) {
        const double g = cd->g(s.u, s.v, s.t);
        const double f = cd->f(s.u, s.v, s.t);
        if (!(g > 0.0)) {
            out.verdict = Verdict::Fail;
            out.witness = format("sample %s: g = %.6g must be positive", sample_text(s).c_str(), g);
            return out;
        }
        q = std::max(q, (g * g + f * f) / g);
    }
    double dt_max = std::numeric_limits<double>::infinity();
    for (int k = 0; k < grid.dim(); ++k) {
        const double h2 = grid.spacing(k) * grid.spacing(k);
        dt_max = std::min(dt_max, h2 / (4.0 * q));
    }
    out.recommended_dt = dt_max;
    if (dt < dt_max) {
        out.verdict = Verdict::Pass;
    } else {
        out.verdict = Verdict::Fail;
        out.witness = format("dt = %.6g exceeds the bound %.6g (max (g^2+f^2)/g = %.6g)", dt,
                             dt_max, q);
    }
    return out;
}

EnergyFormResult check_energy_form(const StateW& state, const InfluenceModel& model, double t_eval,
                                   const EnergyFormConfig& cfg) {
    EnergyFormResult out;
    const Grid& g = state.grid();
    if (cfg.direction >= g.dim())
        throw ConfigError("energy form: direction out of range");

    const EvaluatedCoefficients c =
        evaluate_coefficients(state, model, ReactionModel::none(), t_eval);

    double base = 0.0, scale = 0.0, penalty_unit = 0.0, penalty = 0.0;
    const bool penalized = cfg.theta < 0.5;

    for (int k = 0; k < g.dim(); ++k) {
        if (cfg.direction >= 0 && k != cfg.direction) continue;
        const HalfPointField du = delta_half(state.u, k);
        const HalfPointField dv = delta_half(state.v, k);
        const auto& d = c.half_d[k];

        const HalfPointField d1u = hadamard(d[0], du);
        const HalfPointField d2v = hadamard(d[1], dv);
        const HalfPointField d3u = hadamard(d[2], du);
        const HalfPointField d4v = hadamard(d[3], dv);

        const double t11 = inner_hk_star(d1u, du);
        const double t21 = inner_hk_star(d2v, du);
        const double t12 = inner_hk_star(d3u, dv);
        const double t22 = inner_hk_star(d4v, dv);
        base += t11 + t21 + t12 + t22;
        scale += std::abs(t11) + std::abs(t21) + std::abs(t12) + std::abs(t22);

        if (penalized) {
            const double h2 = g.spacing(k) * g.spacing(k);
            // |d1 dU + d2 dV|^2 and |d3 dU + d4 dV|^2 expand to the
            // cross-term sums of the averaged-scheme condition.
            HalfPointField row1 = d1u;
            HalfPointField row2 = d3u;
            for (std::size_t i = 0; i < row1.size(); ++i) {
                row1[i] += d2v[i];
                row2[i] += d4v[i];
            }
            const double p1 = inner_hk_star(row1, row1);
            const double p2 = inner_hk_star(row2, row2);
            penalty_unit += (4.0 * cfg.dt / h2) * (p1 + p2);
            const double pen_k =
                (4.0 * cfg.dt / h2) * ((1.0 + cfg.eta1) * p1 + (1.0 + cfg.eta2) * p2);
            penalty += pen_k;
            scale += pen_k;
        }
    }

    out.value = base - penalty;
    out.scale = std::max(1.0, scale);
    if (!penalized || penalty_unit <= 0.0)
        out.sup_eta = std::numeric_limits<double>::infinity();
    else
        out.sup_eta = base / penalty_unit - 1.0;
    const bool ok = out.value >= -1e-10 * out.scale;
    out.verdict = ok ? Verdict::Pass : Verdict::Fail;
    if (!ok)
        out.witness = format("form value %.6g below -1e-10 * %.6g (theta = %.3g, dt = %.6g)",
                             out.value, out.scale, cfg.theta, cfg.dt);
    return out;
}

namespace {

struct CaseMatrix {
    std::array<double, 4> m;
    const char* label;
};

bool case_matrix_passes(const CaseMatrix& cm, bool strict, std::string& witness,
                        const StateSample& s) {
    const PsdResult p = check_psd(cm.m, strict);
    if (p.verdict == Verdict::Pass) return true;
    witness = format("sample %s, %s matrix [%.6g, %.6g; %.6g, %.6g]: min eigenvalue %.6g%s",
                     sample_text(s).c_str(), cm.label, cm.m[0], cm.m[1], cm.m[2], cm.m[3],
                     p.min_eigenvalue, strict ? " (strict)" : "");
    return false;
}

} // namespace

ConditionResult check_reaction_case_matrices(const InfluenceModel& model,
                                             const ReactionModel& reaction, double r,
                                             std::span<const StateSample> samples,
                                             CaseMatrixShape shape, bool strict) {
    ConditionResult out;
    out.name = shape == CaseMatrixShape::FullCoefficient
                   ? "reaction case matrices (full coefficient)"
                   : "reaction case matrices (halved coefficient)";
    if (reaction.relation == ReactionRelation::Equal) {
        out.verdict = Verdict::Pass;
        return out;
    }
    if (samples.empty()) {
        out.verdict = Verdict::NotApplicable;
        return out;
    }
    if (!reaction.lambda1 || !reaction.lambda2)
        throw ConfigError("reaction case matrices: missing damping function");

    const double full = shape == CaseMatrixShape::FullCoefficient ? 4.0 : 2.0;
    const double half = shape == CaseMatrixShape::FullCoefficient ? 2.0 : 1.0;

    out.verdict = Verdict::Pass;
    for (const auto& s : samples) {
        const auto d = model.evaluate(s.u, s.v, s.t);
        const double l1 = reaction.lambda1(s.u, s.v, s.t);
        const double l2 = reaction.lambda2(s.u, s.v, s.t);
        const double k1 = 1.0 + 0.5 * r * l1;
        const double k2 = 1.0 + 0.5 * r * l2;

        const CaseMatrix first{{k1 * k1 + full * r * (k1 - k2) * d[0], half * r * (k1 - k2) * d[1],
                                half * r * (k1 - k2) * d[1], k2 * k2},
                               "first-dominates"};
        const CaseMatrix second{{k1 * k1, half * r * (k2 - k1) * d[2],
                                 half * r * (k2 - k1) * d[2],
                                 k2 * k2 + full * r * (k2 - k1) * d[3]},
                                "second-dominates"};

        const bool need_first = reaction.relation == ReactionRelation::FirstDominates ||
                                reaction.relation == ReactionRelation::SignChanges;
        const bool need_second = reaction.relation == ReactionRelation::SecondDominates ||
                                 reaction.relation == ReactionRelation::SignChanges;
        std::string witness;
        if ((need_first && !case_matrix_passes(first, strict, witness, s)) ||
            (need_second && !case_matrix_passes(second, strict, witness, s))) {
            out.verdict = Verdict::Fail;
            out.witness = witness;
            return out;
        }
    }
    return out;
}

SolvabilityResult check_solvability(const StateW& state, const InfluenceModel& model,
                                    const ReactionModel& reaction, double r,
                                    double reaction_weight, double t_eval,
                                    std::span<const StateSample> samples) {
    SolvabilityResult out;
    if (!(r > 0.0)) {
        out.witness = "no implicit system at r = 0";
        return out;
    }

    // Algebraic regime: a scaled constant matrix (or a complex-diffusion
    // shape with a fixed f/g ratio, which is one) with a PSD constant part
    // keeps the blocks solvable for any step size; a general PSD model
    // under the strict case matrices is covered for small steps.
    bool scaled_form = false;
    bool scaled_psd = false;
    if (const auto* sc = model.as_scaled_constant()) {
        scaled_form = true;
        scaled_psd = check_psd(sc->m, false).verdict == Verdict::Pass;
    } else if (const auto* cd = model.as_complex_diffusion(); cd != nullptr && !samples.empty()) {
        bool fixed_ratio = true, positive = true;
        double ratio0 = 0.0;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const auto& s = samples[i];
            const double g = cd->g(s.u, s.v, s.t);
            const double f = cd->f(s.u, s.v, s.t);
            if (!(g > 0.0)) {
                positive = false;
                break;
            }
            const double ratio = f / g;
            if (i == 0) ratio0 = ratio;
            else if (std::abs(ratio - ratio0) > 1e-10 * std::max(1.0, std::abs(ratio0)))
                fixed_ratio = false;
        }
        if (positive && fixed_ratio) {
            scaled_form = true;
            scaled_psd = true; // symmetric part of [[1, -c], [c, 1]] is the identity
        }
    }

    ConditionResult algebraic;
    if (scaled_form && scaled_psd) {
        algebraic = check_reaction_case_matrices(model, reaction, r, samples,
                                                 CaseMatrixShape::FullCoefficient, false);
        if (algebraic.verdict == Verdict::Pass) out.regime = SolvabilityRegime::AnyStep;
    } else {
        const ConditionResult psd = check_model_psd(model, samples, false);
        algebraic = check_reaction_case_matrices(model, reaction, r, samples,
                                                 CaseMatrixShape::FullCoefficient, true);
        if (psd.verdict != Verdict::Pass) algebraic = psd;
        if (algebraic.verdict == Verdict::Pass) out.regime = SolvabilityRegime::SmallStep;
    }
    if (algebraic.verdict == Verdict::Fail) {
        out.verdict = Verdict::Fail;
        out.witness = algebraic.witness.empty() ? "algebraic conditions failed"
                                                : algebraic.witness;
        return out;
    }

    // Empirical contraction of the assembled blocks on the given state.
    const EvaluatedCoefficients c = evaluate_coefficients(state, model, reaction, t_eval);
    SweepParams p;
    p.r = r;
    p.mu = r;
    p.theta = 1.0;
    p.reaction_weight = reaction_weight;

    for (int dir = 0; dir < state.grid().dim(); ++dir) {
        const std::size_t lines = line_count(state.grid(), dir);
        for (std::size_t line = 0; line < lines; ++line) {
            const DirectionalSystem sys =
                assemble_directional_system(state, c, dir, line, p);
            const std::size_t n = sys.matrix.size();
            for (std::size_t j = 0; j < n; ++j) {
                const Block2& b = sys.matrix.diag[j];
                const double det = b.det();
                const double bscale = std::max(1.0, b.norm_inf());
                if (std::abs(det) <= 1e-14 * bscale * bscale) {
                    out.verdict = Verdict::Fail;
                    out.witness = format("direction %d, line %zu: singular diagonal block %zu",
                                         dir + 1, line, j);
                    return out;
                }
                const double inv_det = 1.0 / det;
                const Block2 inv{b.a22 * inv_det, -b.a12 * inv_det, -b.a21 * inv_det,
                                 b.a11 * inv_det};
                double sum = 0.0;
                if (j + 1 < n) sum += spectral_norm_2x2(inv * sys.matrix.upper[j]);
                if (j > 0) sum += spectral_norm_2x2(inv * sys.matrix.lower[j - 1]);
                out.max_block_norm_sum = std::max(out.max_block_norm_sum, sum);
                if (sum > 1.0 + 1e-12) {
                    out.verdict = Verdict::Fail;
                    out.witness =
                        format("direction %d, line %zu, block %zu: |B^-1 U| + |B^-1 L| = %.15g "
                               "exceeds 1",
                               dir + 1, line, j, sum);
                    return out;
                }
            }
        }
    }
    out.verdict = Verdict::Pass;
    return out;
}

void NormHistory::push(int step, double t, double norm) {
    entries_.push_back(Entry{step, t, norm});
}

double NormHistory::max_ratio() const {
    if (entries_.empty()) return 0.0;
    const double base = std::max(entries_.front().norm, 1e-300);
    double r = 0.0;
    for (const auto& e : entries_) {
        if (!std::isfinite(e.norm)) return std::numeric_limits<double>::infinity();
        r = std::max(r, e.norm / base);
    }
    return r;
}

NormVerdict NormHistory::verdict(double divergence_factor) const {
    if (entries_.size() < 2) return NormVerdict::Monotone;
    for (const auto& e : entries_)
        if (!std::isfinite(e.norm)) return NormVerdict::Diverged;
    if (max_ratio() > divergence_factor) return NormVerdict::Diverged;
    bool monotone = true;
    for (std::size_t i = 1; i < entries_.size(); ++i)
        if (entries_[i].norm > entries_[i - 1].norm * (1.0 + 1e-12)) {
            monotone = false;
            break;
        }
    return monotone ? NormVerdict::Monotone : NormVerdict::Bounded;
}

bool StabilityReport::all_passed() const {
    for (const auto& c : conditions)
        if (c.verdict == Verdict::Fail) return false;
    return true;
}

std::string StabilityReport::to_text() const {
    std::string out;
    for (const auto& c : conditions) {
        out += format("[%-14s] %s", to_string(c.verdict), c.name.c_str());
        if (c.recommended_dt > 0.0) out += format(" (recommended dt < %.9g)", c.recommended_dt);
        if (!c.witness.empty()) out += "\n                 " + c.witness;
        out += "\n";
    }
    return out;
}

namespace {

std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 8);
    for (const char ch : s) {
        switch (ch) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        default:
            if (static_cast<unsigned char>(ch) < 0x20) out += format("\\u%04x", ch);
            else out += ch;
        }
    }
    return out;
}

} // namespace

std::string StabilityReport::to_json() const {
    std::string out = "{\n  \"conditions\": [\n";
    for (std::size_t i = 0; i < conditions.size(); ++i) {
        const auto& c = conditions[i];
        out += format("    {\"name\": \"%s\", \"verdict\": \"%s\", \"witness\": \"%s\"",
                      json_escape(c.name).c_str(), to_string(c.verdict),
                      json_escape(c.witness).c_str());
        if (c.recommended_dt > 0.0) out += format(", \"recommended_dt\": %.17g", c.recommended_dt);
        out += "}";
        if (i + 1 < conditions.size()) out += ",";
        out += "\n";
    }
    out += format("  ],\n  \"all_passed\": %s\n}\n", all_passed() ? "true" : "false");
    return out;
}

} // namespace crossdiff
