#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <json.hpp>

#include "crossdiff/bench.hpp"
#include "crossdiff/errors.hpp"
#include "crossdiff/field_io.hpp"
#include "crossdiff/stability.hpp"

namespace crossdiff::cli {

namespace {

constexpr double kCompareTolerance = 1e-8;
constexpr std::size_t kDenseUnknownCap = 20000;

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), pattern, v);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot open for writing: " + path.string());
    out << text;
    if (!out) throw ConfigError("write failed: " + path.string());
}

std::string grid_label(const Grid& g) {
    std::string s = std::to_string(g.nodes(0));
    for (int k = 1; k < g.dim(); ++k) s += "x" + std::to_string(g.nodes(k));
    return s;
}

std::string norm_csv_row(int step, const StateW& s) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", step, s.t,
                  norm_h(s.u), norm_h(s.v), norm_w(s), weighted_sum(s.u), weighted_sum(s.v));
    return buf;
}

std::filesystem::path snapshot_path(const std::filesystem::path& dir, int step) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fields_%06d.xdif", step);
    return dir / buf;
}

} // namespace

int cmd_run(const RunConfig& cfg) {
    const Grid grid = cfg.make_grid();
    const InfluenceModel model = cfg.make_model();
    const ReactionModel reaction = cfg.make_reaction();
    const SchemeConfig scheme = cfg.make_scheme();
    scheme.validate(grid.dim());
    const StepOptions opt = cfg.make_step_options();

    const std::filesystem::path out_dir(cfg.output.dir);
    std::filesystem::create_directories(out_dir);

    StateW state = cfg.make_initial(grid);
    NormHistory history;
    history.push(0, state.t, norm_w(state));
    std::string norms = "step,t,norm_U,norm_V,norm_W,sum_U,sum_V\n";
    norms += norm_csv_row(0, state);
    if (cfg.output.snapshot_stride > 0)
        write_field_file(snapshot_path(out_dir, 0), state.u, state.v);

    bool diverged = false;
    std::string failure;
    int completed = 0;
    for (int step = 1; step <= cfg.scheme.steps; ++step) {
        try {
            StepResult r = advance(state, model, reaction, scheme, opt);
            state = std::move(r.state);
        } catch (const DivergenceError& e) {
            diverged = true;
            failure = e.what();
            break;
        }
        ++completed;
        history.push(step, state.t, norm_w(state));
        norms += norm_csv_row(step, state);
        if (cfg.output.snapshot_stride > 0 && step % cfg.output.snapshot_stride == 0)
            write_field_file(snapshot_path(out_dir, step), state.u, state.v);
    }

    const NormVerdict verdict = diverged ? NormVerdict::Diverged : history.verdict();
    write_text(out_dir / "norms.csv", norms);
    write_field_file(out_dir / "fields_final.xdif", state.u, state.v);

    std::string manifest = "# run manifest\n";
    manifest += std::string("# status = ") + (diverged ? "diverged" : "completed") + "\n";
    manifest += "# steps_completed = " + std::to_string(completed) + "\n";
    manifest += std::string("# norm_verdict = ") + to_string(verdict) + "\n";
    manifest += "# max_norm_ratio = " + fmt("%.17g", history.max_ratio()) + "\n";
    manifest += cfg.to_manifest();
    write_text(out_dir / "run_manifest.cfg", manifest);

    std::cout << "run: " << grid_label(grid) << " grid, scheme " << cfg.scheme.kind << "/"
              << cfg.scheme.solver << ", theta " << cfg.scheme.theta << ", " << completed << "/"
              << cfg.scheme.steps << " steps\n";
    if (!failure.empty()) std::cout << "divergence: " << failure << "\n";
    std::cout << "norm verdict: " << to_string(verdict)
              << " (max ratio " << fmt("%.6g", history.max_ratio()) << ")\n";
    std::cout << "outputs: " << (out_dir / "norms.csv").string() << ", "
              << (out_dir / "fields_final.xdif").string() << ", "
              << (out_dir / "run_manifest.cfg").string() << "\n";
    return verdict == NormVerdict::Diverged ? 2 : 0;
}

int cmd_check(const RunConfig& cfg) {
    const Grid grid = cfg.make_grid();
    const InfluenceModel model = cfg.make_model();
    const ReactionModel reaction = cfg.make_reaction();
    const StateW state = cfg.make_initial(grid);

    // Pointwise conditions are sampled on the configured (u, v) lattice
    // plus the values the initial state actually takes.
    std::vector<StateSample> samples = cfg.make_samples();
    for (std::size_t i = 0; i < state.u.size(); ++i)
        samples.push_back(StateSample{state.u[i], state.v[i], state.t});

    const SweepParams sweep =
        make_sweep_params(cfg.make_scheme().scheme, grid.dim(), cfg.scheme.theta, cfg.scheme.dt);
    const double r = sweep.r;

    StabilityReport report;
    report.conditions.push_back(check_model_psd(model, samples, false));
    report.conditions.push_back(check_diagonal_dominance(model, samples));

    ConditionResult explicit_bound = check_explicit_bound(model, grid, cfg.scheme.dt, samples);
    if (cfg.scheme.theta != 0.0) {
        explicit_bound.verdict = Verdict::NotApplicable;
        explicit_bound.witness.clear();
    }
    report.conditions.push_back(explicit_bound);

    EnergyFormConfig energy_cfg;
    energy_cfg.theta = cfg.scheme.theta;
    energy_cfg.dt = cfg.scheme.dt;
    const EnergyFormResult energy = check_energy_form(state, model, state.t, energy_cfg);
    ConditionResult energy_cond;
    energy_cond.name = "dissipation form on the initial state";
    energy_cond.verdict = energy.verdict;
    energy_cond.witness = energy.witness;
    report.conditions.push_back(energy_cond);

    report.conditions.push_back(check_reaction_case_matrices(
        model, reaction, r, samples, CaseMatrixShape::FullCoefficient, true));
    report.conditions.push_back(check_reaction_case_matrices(
        model, reaction, r, samples, CaseMatrixShape::Halved, false));

    SolvabilityResult solv;
    ConditionResult solv_cond;
    solv_cond.name = "implicit block solvability";
    if (r > 0.0) {
        solv = check_solvability(state, model, reaction, r, sweep.reaction_weight, state.t,
                                 samples);
        solv_cond.verdict = solv.verdict;
        solv_cond.witness = solv.witness;
    }
    report.conditions.push_back(solv_cond);

    const char* regime = solv.regime == SolvabilityRegime::AnyStep    ? "any r"
                         : solv.regime == SolvabilityRegime::SmallStep ? "small r"
                                                                       : "unknown";

    std::cout << report.to_text();
    std::cout << "regime: " << regime << "\n";
    if (explicit_bound.recommended_dt > 0.0)
        std::cout << "dt_max = " << fmt("%.9g", explicit_bound.recommended_dt) << "\n";
    if (std::isfinite(energy.sup_eta) && energy.sup_eta > 0.0)
        std::cout << "sup eta = " << fmt("%.6g", energy.sup_eta) << "\n";

    nlohmann::json doc = nlohmann::json::parse(report.to_json());
    doc["regime"] = regime;
    doc["energy"] = {{"value", energy.value},
                     {"scale", energy.scale},
                     {"sup_eta", std::isfinite(energy.sup_eta) ? energy.sup_eta : -1.0}};
    if (explicit_bound.recommended_dt > 0.0) doc["dt_max"] = explicit_bound.recommended_dt;
    if (r > 0.0) doc["max_block_norm_sum"] = solv.max_block_norm_sum;

    const std::filesystem::path out_dir(cfg.output.dir);
    std::filesystem::create_directories(out_dir);
    write_text(out_dir / "check.json", doc.dump(2) + "\n");
    std::cout << "report: " << (out_dir / "check.json").string() << "\n";
    return 0;
}

int cmd_compare(const RunConfig& cfg) {
    const Grid grid = cfg.make_grid();
    if (2 * grid.node_count() > kDenseUnknownCap) {
        std::cerr << "compare: grid needs " << 2 * grid.node_count()
                  << " unknowns, above the dense oracle cap of " << kDenseUnknownCap << "\n";
        return 1;
    }
    const InfluenceModel model = cfg.make_model();
    const ReactionModel reaction = cfg.make_reaction();
    SchemeConfig scheme = cfg.make_scheme();
    scheme.validate(grid.dim());
    const StepOptions opt = cfg.make_step_options();

    SchemeConfig banded = scheme, dense = scheme;
    banded.solver = SolverKind::BlockBanded;
    dense.solver = SolverKind::DenseOracle;
    banded.validate(grid.dim()); // full_theta has no banded form: config error

    StateW sb = cfg.make_initial(grid);
    StateW sd = sb;
    double max_dev = 0.0;
    for (int step = 1; step <= cfg.scheme.steps; ++step) {
        sb = advance(sb, model, reaction, banded, opt).state;
        sd = advance(sd, model, reaction, dense, opt).state;
        double dev = 0.0;
        for (std::size_t i = 0; i < sb.u.size(); ++i) {
            dev = std::max(dev, std::abs(sb.u[i] - sd.u[i]));
            dev = std::max(dev, std::abs(sb.v[i] - sd.v[i]));
        }
        max_dev = std::max(max_dev, dev);
        std::cout << "step " << step << ": max deviation " << fmt("%.3e", dev) << "\n";
    }
    std::cout << "max deviation over run: " << fmt("%.3e", max_dev) << "\n";
    if (max_dev > kCompareTolerance) {
        std::cerr << "compare: deviation above " << fmt("%.0e", kCompareTolerance) << "\n";
        return 2;
    }
    return 0;
}

int cmd_spy(const RunConfig& cfg) {
    const Grid grid = cfg.make_grid();
    const InfluenceModel model = cfg.make_model();
    const ReactionModel reaction = cfg.make_reaction();
    const StateW state = cfg.make_initial(grid);
    const double theta = cfg.scheme.theta;
    const double dt = cfg.scheme.dt;

    const EvaluatedCoefficients coeffs =
        evaluate_coefficients(state, model, reaction, state.t + theta * dt);

    const std::filesystem::path out_dir(cfg.output.dir);
    std::filesystem::create_directories(out_dir);

    auto dump_dense = [](const DenseMatrix& m) {
        std::string out;
        char buf[96];
        for (int i = 0; i < m.n; ++i)
            for (int j = 0; j < m.n; ++j)
                if (m(i, j) != 0.0) {
                    std::snprintf(buf, sizeof(buf), "%d %d %.17g\n", i, j, m(i, j));
                    out += buf;
                }
        return out;
    };

    const FullThetaSystem full = build_full_theta_system(state, coeffs, theta, dt);
    write_text(out_dir / "spy_full.txt", dump_dense(full.matrix));

    const SweepParams sweep = make_sweep_params(cfg.make_scheme().scheme, grid.dim(), theta, dt);
    const DirectionalSystem line = assemble_directional_system(state, coeffs, 0, 0, sweep);
    write_text(out_dir / "spy_directional.txt", dump_dense(to_dense(line.matrix)));

    std::cout << "spy: " << (out_dir / "spy_full.txt").string() << " ("
              << 2 * grid.node_count() << "x" << 2 * grid.node_count() << "), "
              << (out_dir / "spy_directional.txt").string() << " (" << 2 * grid.nodes(0) << "x"
              << 2 * grid.nodes(0) << ")\n";
    return 0;
}

int cmd_bench(const RunConfig& cfg) {
    const std::vector<BenchCell> cells = cfg.bench_cells();
    const std::vector<BenchRecord> records = run_benchmark(cells, cfg.bench_options());
    const std::string csv = bench_csv(records);

    const std::filesystem::path out_dir(cfg.output.dir);
    std::filesystem::create_directories(out_dir);
    write_text(out_dir / "bench.csv", csv);

    std::cout << csv;
    for (const BenchRecord& r : records)
        if (r.skipped)
            std::cout << "note: " << scheme_name(r.scheme) << "/" << solver_name(r.solver) << " "
                      << r.n[0] << "x" << r.n[1]
                      << (r.n[2] > 0 ? "x" + std::to_string(r.n[2]) : "") << ": " << r.note
                      << "\n";
    std::cout << "csv: " << (out_dir / "bench.csv").string() << "\n";
    return 0;
}

} // namespace crossdiff::cli
