#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "crossdiff/errors.hpp"

namespace {

struct CommonFlags {
    std::string config;
    std::string out;
    std::string seed;
    bool parallel = false;
};

void add_common(CLI::App* sub, CommonFlags& flags) {
    sub->add_option("--config", flags.config, "configuration file (section.key = value lines)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", flags.out, "output directory (overrides output.dir)");
    sub->add_option("--seed", flags.seed, "initial-data seed (overrides init.seed)")
        ->check(CLI::Number);
    sub->add_flag("--parallel", flags.parallel, "parallel line solves (sets run.parallel)");
}

crossdiff::RunConfig load(const CommonFlags& flags) {
    crossdiff::ConfigMap map = crossdiff::ConfigMap::parse_file(flags.config);
    map.apply_environment();
    if (!flags.out.empty()) map.set("output.dir", flags.out);
    if (!flags.seed.empty()) map.set("init.seed", flags.seed);
    if (flags.parallel) map.set("run.parallel", "true");
    return crossdiff::RunConfig::from_map(std::move(map));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"implicit cross-diffusion schemes: run, check, compare, spy, bench"};
    app.require_subcommand(1);

    CommonFlags flags;
    CLI::App* run = app.add_subcommand("run", "advance a configured simulation");
    CLI::App* check = app.add_subcommand("check", "evaluate stability and solvability conditions");
    CLI::App* compare = app.add_subcommand("compare", "banded solver against the dense oracle");
    CLI::App* spy = app.add_subcommand("spy", "dump system matrices as row/col/value triples");
    CLI::App* bench = app.add_subcommand("bench", "time iteration cores over a config matrix");
    for (CLI::App* sub : {run, check, compare, spy, bench}) add_common(sub, flags);

    CLI11_PARSE(app, argc, argv);

    try {
        const crossdiff::RunConfig cfg = load(flags);
        if (run->parsed()) return crossdiff::cli::cmd_run(cfg);
        if (check->parsed()) return crossdiff::cli::cmd_check(cfg);
        if (compare->parsed()) return crossdiff::cli::cmd_compare(cfg);
        if (spy->parsed()) return crossdiff::cli::cmd_spy(cfg);
        if (bench->parsed()) return crossdiff::cli::cmd_bench(cfg);
    } catch (const crossdiff::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const crossdiff::DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
