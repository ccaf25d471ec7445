#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "crossdiff/bench.hpp"
#include "crossdiff/grid.hpp"
#include "crossdiff/model.hpp"
#include "crossdiff/schemes.hpp"
#include "crossdiff/stability.hpp"

namespace crossdiff {

/// Flat `section.key = value` text: one assignment per line, `#` starts a
/// comment, keys are lowercase [a-z0-9_] with exactly one dot. Values keep
/// inner whitespace but are trimmed at both ends. Duplicate keys in one
/// file are an error; set() (CLI and environment overrides) replaces.
class ConfigMap {
public:
    static ConfigMap parse_file(const std::filesystem::path& path);
    static ConfigMap parse_text(std::string_view text);

    void set(const std::string& key, const std::string& value);

    /// Applies `PREFIX<SECTION>_<KEY>=value` environment overrides; the
    /// first underscore after the prefix splits section from key, both
    /// lowercased.
    void apply_environment(const std::string& prefix = "CROSSDIFF_");

    bool has(const std::string& key) const;

    /// Typed getters mark the key consumed and throw ConfigError naming
    /// the key on a malformed value.
    std::string get_string(const std::string& key, const std::string& def);
    double get_double(const std::string& key, double def);
    int get_int(const std::string& key, int def);
    std::uint64_t get_u64(const std::string& key, std::uint64_t def);
    bool get_bool(const std::string& key, bool def);

    /// Throws ConfigError naming the first unconsumed key.
    void finish() const;

private:
    std::map<std::string, std::string> values_;
    std::set<std::string> consumed_;
};

struct GridSpec {
    int dim = 2;
    std::array<int, 3> n{0, 0, 0};  // nodes per axis
    std::array<double, 3> lower{0.0, 0.0, 0.0};
    std::array<double, 3> upper{0.0, 0.0, 0.0};
};

struct ModelSpec {
    std::string kind = "heat";  // heat | scaled_constant | complex_diffusion | general_constant
    double diffusivity = 1.0;
    double g = 1.0;
    double f = 0.0;
    std::string g_kind = "constant";  // constant | perona_malik (complex_diffusion only)
    double kappa = 1.0;
    std::array<double, 4> m{1.0, -1.0, 1.0, 1.0};
    std::array<double, 4> d{1.0, 0.0, 0.0, 1.0};
};

struct ReactionSpec {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
};

struct SchemeSpec {
    std::string kind = "aos";     // full_theta | aos | amos
    std::string solver = "banded";  // banded | dense
    double theta = 1.0;
    double dt = 0.1;
    int steps = 10;
};

struct InitSpec {
    std::string kind = "random";  // random | constant | smooth | file
    std::uint64_t seed = 1234;
    double value_u = 0.5;
    double value_v = 0.5;
    double offset = 0.5;
    double amplitude = 0.25;
    std::string file;
};

struct OutputSpec {
    std::string dir = "out";
    int snapshot_stride = 0;  // 0: final snapshot only
};

struct RunSpec {
    bool parallel = false;
    int threads = 0;
};

struct BenchSpec {
    std::vector<std::string> schemes{"aos"};
    std::vector<std::string> solvers{"banded"};
    std::vector<int> sizes{16, 32};
    int warmup = 1;
    int repetitions = 3;
    std::string mode = "solver";  // solver | step
};

struct CheckSpec {
    int samples = 5;  // lattice points per state axis
    double u_min = 0.0;
    double u_max = 1.0;
    double v_min = 0.0;
    double v_max = 1.0;
};

/// Fully resolved run configuration. Parsing validates every field before
/// anything is allocated; every error names the offending key.
struct RunConfig {
    GridSpec grid;
    ModelSpec model;
    ReactionSpec reaction;
    SchemeSpec scheme;
    InitSpec init;
    OutputSpec output;
    RunSpec run;
    BenchSpec bench;
    CheckSpec check;

    static RunConfig from_map(ConfigMap map);
    static RunConfig from_file(const std::filesystem::path& path);

    /// Resolved flat config text; parsing it back yields an identical
    /// RunConfig (doubles are printed with 17 significant digits).
    std::string to_manifest() const;

    Grid make_grid() const;
    InfluenceModel make_model() const;
    ReactionModel make_reaction() const;
    SchemeConfig make_scheme() const;
    StateW make_initial(const Grid& g) const;
    StepOptions make_step_options() const;
    std::vector<StateSample> make_samples() const;
    std::vector<BenchCell> bench_cells() const;
    BenchOptions bench_options() const;
};

} // namespace crossdiff
