#include "crossdiff/run_config.hpp"

#include <algorithm>
#include <cctype>
#include <climits>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "crossdiff/errors.hpp"
#include "crossdiff/field_io.hpp"

extern "C" char** environ;

namespace crossdiff {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

bool valid_key(const std::string& key) {
    const std::size_t dot = key.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == key.size()) return false;
    if (key.find('.', dot + 1) != std::string::npos) return false;
    return std::all_of(key.begin(), key.end(), [](unsigned char c) {
        return c == '.' || c == '_' || std::islower(c) || std::isdigit(c);
    });
}

std::vector<std::string> split_list(const std::string& value, const std::string& key) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(value);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError(key + ": empty list entry");
        out.push_back(item);
    }
    if (out.empty()) throw ConfigError(key + ": empty list");
    return out;
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

ConfigMap ConfigMap::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_text(text);
}

ConfigMap ConfigMap::parse_text(std::string_view text) {
    ConfigMap map;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string_view line =
            text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;

        if (const std::size_t hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;

        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected `section.key = value`");
        const std::string key = trim(std::string_view(stripped).substr(0, eq));
        const std::string value = trim(std::string_view(stripped).substr(eq + 1));
        if (!valid_key(key))
            throw ConfigError("config line " + std::to_string(line_no) + ": bad key `" + key +
                              "`");
        if (map.values_.count(key))
            throw ConfigError("duplicate config key: " + key);
        map.values_[key] = value;
    }
    return map;
}

void ConfigMap::set(const std::string& key, const std::string& value) {
    if (!valid_key(key)) throw ConfigError("bad config key: " + key);
    values_[key] = value;
}

void ConfigMap::apply_environment(const std::string& prefix) {
    for (char** env = environ; env != nullptr && *env != nullptr; ++env) {
        const std::string entry(*env);
        if (entry.compare(0, prefix.size(), prefix) != 0) continue;
        const std::size_t eq = entry.find('=');
        if (eq == std::string::npos) continue;
        const std::string name = entry.substr(prefix.size(), eq - prefix.size());
        const std::size_t us = name.find('_');
        if (us == std::string::npos || us == 0 || us + 1 == name.size())
            throw ConfigError("malformed environment override: " + entry.substr(0, eq));
        const std::string key = lower(name.substr(0, us)) + "." + lower(name.substr(us + 1));
        if (!valid_key(key))
            throw ConfigError("malformed environment override: " + entry.substr(0, eq));
        values_[key] = entry.substr(eq + 1);
    }
}

bool ConfigMap::has(const std::string& key) const { return values_.count(key) != 0; }

std::string ConfigMap::get_string(const std::string& key, const std::string& def) {
    const auto it = values_.find(key);
    if (it == values_.end()) return def;
    consumed_.insert(key);
    return it->second;
}

double ConfigMap::get_double(const std::string& key, double def) {
    const auto it = values_.find(key);
    if (it == values_.end()) return def;
    consumed_.insert(key);
    const std::string& s = it->second;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size())
        throw ConfigError(key + ": not a number: `" + s + "`");
    return v;
}

int ConfigMap::get_int(const std::string& key, int def) {
    const auto it = values_.find(key);
    if (it == values_.end()) return def;
    consumed_.insert(key);
    const std::string& s = it->second;
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (s.empty() || end != s.c_str() + s.size() || v < INT_MIN || v > INT_MAX)
        throw ConfigError(key + ": not an integer: `" + s + "`");
    return static_cast<int>(v);
}

std::uint64_t ConfigMap::get_u64(const std::string& key, std::uint64_t def) {
    const auto it = values_.find(key);
    if (it == values_.end()) return def;
    consumed_.insert(key);
    const std::string& s = it->second;
    if (s.empty() || s[0] == '-') throw ConfigError(key + ": not an unsigned integer: `" + s + "`");
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (end != s.c_str() + s.size())
        throw ConfigError(key + ": not an unsigned integer: `" + s + "`");
    return v;
}

bool ConfigMap::get_bool(const std::string& key, bool def) {
    const auto it = values_.find(key);
    if (it == values_.end()) return def;
    consumed_.insert(key);
    const std::string v = lower(it->second);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(key + ": not a boolean: `" + it->second + "`");
}

void ConfigMap::finish() const {
    for (const auto& [key, value] : values_)
        if (!consumed_.count(key)) throw ConfigError("unknown config key: " + key);
}

namespace {

Scheme scheme_from_string(const std::string& v, const std::string& key) {
    if (v == "full_theta") return Scheme::FullTheta;
    if (v == "aos") return Scheme::AOS;
    if (v == "amos") return Scheme::AMOS;
    throw ConfigError(key + ": expected full_theta, aos or amos, got `" + v + "`");
}

SolverKind solver_from_string(const std::string& v, const std::string& key) {
    if (v == "banded") return SolverKind::BlockBanded;
    if (v == "dense") return SolverKind::DenseOracle;
    throw ConfigError(key + ": expected banded or dense, got `" + v + "`");
}

} // namespace

RunConfig RunConfig::from_map(ConfigMap m) {
    RunConfig c;

    c.grid.dim = m.get_int("grid.dim", 2);
    if (c.grid.dim != 2 && c.grid.dim != 3)
        throw ConfigError("grid.dim: must be 2 or 3");
    for (int k = 0; k < c.grid.dim; ++k) {
        const std::string suffix = std::to_string(k + 1);
        c.grid.n[k] = m.get_int("grid.n" + suffix, 0);
        if (c.grid.n[k] < 2) throw ConfigError("grid.n" + suffix + ": must be >= 2");
        c.grid.lower[k] = m.get_double("grid.lower" + suffix, 0.0);
        c.grid.upper[k] =
            m.get_double("grid.upper" + suffix, static_cast<double>(c.grid.n[k] - 1));
        if (!(c.grid.upper[k] > c.grid.lower[k]))
            throw ConfigError("grid.upper" + suffix + ": must exceed grid.lower" + suffix);
    }
    if (c.grid.dim == 2)
        for (const char* key : {"grid.n3", "grid.lower3", "grid.upper3"})
            if (m.has(key)) throw ConfigError(std::string(key) + ": conflicts with grid.dim = 2");

    c.model.kind = m.get_string("model.kind", c.model.kind);
    if (c.model.kind != "heat" && c.model.kind != "scaled_constant" &&
        c.model.kind != "complex_diffusion" && c.model.kind != "general_constant")
        throw ConfigError(
            "model.kind: expected heat, scaled_constant, complex_diffusion or general_constant, "
            "got `" +
            c.model.kind + "`");
    c.model.diffusivity = m.get_double("model.diffusivity", c.model.diffusivity);
    if (c.model.diffusivity < 0.0) throw ConfigError("model.diffusivity: must be >= 0");
    c.model.g = m.get_double("model.g", c.model.g);
    c.model.f = m.get_double("model.f", c.model.f);
    c.model.g_kind = m.get_string("model.g_kind", c.model.g_kind);
    if (c.model.g_kind != "constant" && c.model.g_kind != "perona_malik")
        throw ConfigError("model.g_kind: expected constant or perona_malik, got `" +
                          c.model.g_kind + "`");
    c.model.kappa = m.get_double("model.kappa", c.model.kappa);
    if (!(c.model.kappa > 0.0)) throw ConfigError("model.kappa: must be > 0");
    const char* mkeys[4] = {"model.m11", "model.m12", "model.m21", "model.m22"};
    const char* dkeys[4] = {"model.d1", "model.d2", "model.d3", "model.d4"};
    for (int i = 0; i < 4; ++i) {
        c.model.m[i] = m.get_double(mkeys[i], c.model.m[i]);
        c.model.d[i] = m.get_double(dkeys[i], c.model.d[i]);
    }

    c.reaction.lambda1 = m.get_double("reaction.lambda1", 0.0);
    c.reaction.lambda2 = m.get_double("reaction.lambda2", 0.0);
    if (c.reaction.lambda1 < 0.0) throw ConfigError("reaction.lambda1: must be >= 0");
    if (c.reaction.lambda2 < 0.0) throw ConfigError("reaction.lambda2: must be >= 0");

    c.scheme.kind = m.get_string("scheme.kind", c.scheme.kind);
    scheme_from_string(c.scheme.kind, "scheme.kind");
    c.scheme.solver = m.get_string("scheme.solver", c.scheme.solver);
    solver_from_string(c.scheme.solver, "scheme.solver");
    c.scheme.theta = m.get_double("scheme.theta", c.scheme.theta);
    if (!(c.scheme.theta >= 0.0 && c.scheme.theta <= 1.0))
        throw ConfigError("scheme.theta: must lie in [0, 1]");
    c.scheme.dt = m.get_double("scheme.dt", c.scheme.dt);
    if (!(c.scheme.dt > 0.0)) throw ConfigError("scheme.dt: must be > 0");
    c.scheme.steps = m.get_int("scheme.steps", c.scheme.steps);
    if (c.scheme.steps < 1) throw ConfigError("scheme.steps: must be >= 1");
    if (c.scheme.kind == "full_theta" && c.scheme.solver == "banded")
        throw ConfigError(
            "scheme.solver: full_theta needs dense (the unsplit matrix is not block tridiagonal)");

    c.init.kind = m.get_string("init.kind", c.init.kind);
    if (c.init.kind != "random" && c.init.kind != "constant" && c.init.kind != "smooth" &&
        c.init.kind != "file")
        throw ConfigError("init.kind: expected random, constant, smooth or file, got `" +
                          c.init.kind + "`");
    c.init.seed = m.get_u64("init.seed", c.init.seed);
    c.init.value_u = m.get_double("init.value_u", c.init.value_u);
    c.init.value_v = m.get_double("init.value_v", c.init.value_v);
    c.init.offset = m.get_double("init.offset", c.init.offset);
    c.init.amplitude = m.get_double("init.amplitude", c.init.amplitude);
    c.init.file = m.get_string("init.file", c.init.file);
    if (c.init.kind == "file" && c.init.file.empty())
        throw ConfigError("init.file: required for init.kind = file");

    c.output.dir = m.get_string("output.dir", c.output.dir);
    if (c.output.dir.empty()) throw ConfigError("output.dir: must not be empty");
    c.output.snapshot_stride = m.get_int("output.snapshot_stride", c.output.snapshot_stride);
    if (c.output.snapshot_stride < 0)
        throw ConfigError("output.snapshot_stride: must be >= 0");

    c.run.parallel = m.get_bool("run.parallel", c.run.parallel);
    c.run.threads = m.get_int("run.threads", c.run.threads);
    if (c.run.threads < 0) throw ConfigError("run.threads: must be >= 0");

    if (m.has("bench.schemes"))
        c.bench.schemes = split_list(m.get_string("bench.schemes", ""), "bench.schemes");
    for (const auto& s : c.bench.schemes) scheme_from_string(s, "bench.schemes");
    if (m.has("bench.solvers"))
        c.bench.solvers = split_list(m.get_string("bench.solvers", ""), "bench.solvers");
    for (const auto& s : c.bench.solvers) solver_from_string(s, "bench.solvers");
    if (m.has("bench.sizes")) {
        c.bench.sizes.clear();
        for (const auto& s : split_list(m.get_string("bench.sizes", ""), "bench.sizes")) {
            char* end = nullptr;
            const long v = std::strtol(s.c_str(), &end, 10);
            if (end != s.c_str() + s.size() || v < 2)
                throw ConfigError("bench.sizes: entries must be integers >= 2, got `" + s + "`");
            c.bench.sizes.push_back(static_cast<int>(v));
        }
    }
    c.bench.warmup = m.get_int("bench.warmup", c.bench.warmup);
    if (c.bench.warmup < 0) throw ConfigError("bench.warmup: must be >= 0");
    c.bench.repetitions = m.get_int("bench.repetitions", c.bench.repetitions);
    if (c.bench.repetitions < 1) throw ConfigError("bench.repetitions: must be >= 1");
    c.bench.mode = m.get_string("bench.mode", c.bench.mode);
    if (c.bench.mode != "solver" && c.bench.mode != "step")
        throw ConfigError("bench.mode: expected solver or step, got `" + c.bench.mode + "`");

    c.check.samples = m.get_int("check.samples", c.check.samples);
    if (c.check.samples < 1) throw ConfigError("check.samples: must be >= 1");
    c.check.u_min = m.get_double("check.u_min", c.check.u_min);
    c.check.u_max = m.get_double("check.u_max", c.check.u_max);
    c.check.v_min = m.get_double("check.v_min", c.check.v_min);
    c.check.v_max = m.get_double("check.v_max", c.check.v_max);
    if (c.check.u_max < c.check.u_min) throw ConfigError("check.u_max: must be >= check.u_min");
    if (c.check.v_max < c.check.v_min) throw ConfigError("check.v_max: must be >= check.v_min");

    m.finish();
    return c;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
    return from_map(ConfigMap::parse_file(path));
}

std::string RunConfig::to_manifest() const {
    std::string out;
    auto emit = [&out](const std::string& key, const std::string& value) {
        out += key + " = " + value + "\n";
    };
    auto emit_d = [&emit](const std::string& key, double v) { emit(key, fmt_double(v)); };
    auto emit_i = [&emit](const std::string& key, long long v) { emit(key, std::to_string(v)); };
    auto emit_b = [&emit](const std::string& key, bool v) { emit(key, v ? "true" : "false"); };

    emit_i("grid.dim", grid.dim);
    for (int k = 0; k < grid.dim; ++k) {
        const std::string s = std::to_string(k + 1);
        emit_i("grid.n" + s, grid.n[k]);
        emit_d("grid.lower" + s, grid.lower[k]);
        emit_d("grid.upper" + s, grid.upper[k]);
    }
    emit("model.kind", model.kind);
    emit_d("model.diffusivity", model.diffusivity);
    emit_d("model.g", model.g);
    emit_d("model.f", model.f);
    emit("model.g_kind", model.g_kind);
    emit_d("model.kappa", model.kappa);
    const char* mkeys[4] = {"model.m11", "model.m12", "model.m21", "model.m22"};
    const char* dkeys[4] = {"model.d1", "model.d2", "model.d3", "model.d4"};
    for (int i = 0; i < 4; ++i) emit_d(mkeys[i], model.m[i]);
    for (int i = 0; i < 4; ++i) emit_d(dkeys[i], model.d[i]);
    emit_d("reaction.lambda1", reaction.lambda1);
    emit_d("reaction.lambda2", reaction.lambda2);
    emit("scheme.kind", scheme.kind);
    emit("scheme.solver", scheme.solver);
    emit_d("scheme.theta", scheme.theta);
    emit_d("scheme.dt", scheme.dt);
    emit_i("scheme.steps", scheme.steps);
    emit("init.kind", init.kind);
    emit_i("init.seed", static_cast<long long>(init.seed));
    emit_d("init.value_u", init.value_u);
    emit_d("init.value_v", init.value_v);
    emit_d("init.offset", init.offset);
    emit_d("init.amplitude", init.amplitude);
    if (!init.file.empty()) emit("init.file", init.file);
    emit("output.dir", output.dir);
    emit_i("output.snapshot_stride", output.snapshot_stride);
    emit_b("run.parallel", run.parallel);
    emit_i("run.threads", run.threads);

    auto join = [](const std::vector<std::string>& items) {
        std::string s;
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (i) s += ",";
            s += items[i];
        }
        return s;
    };
    emit("bench.schemes", join(bench.schemes));
    emit("bench.solvers", join(bench.solvers));
    std::vector<std::string> sizes;
    sizes.reserve(bench.sizes.size());
    for (const int n : bench.sizes) sizes.push_back(std::to_string(n));
    emit("bench.sizes", join(sizes));
    emit_i("bench.warmup", bench.warmup);
    emit_i("bench.repetitions", bench.repetitions);
    emit("bench.mode", bench.mode);
    emit_i("check.samples", check.samples);
    emit_d("check.u_min", check.u_min);
    emit_d("check.u_max", check.u_max);
    emit_d("check.v_min", check.v_min);
    emit_d("check.v_max", check.v_max);
    return out;
}

Grid RunConfig::make_grid() const {
    std::array<Axis, 3> axes;
    for (int k = 0; k < grid.dim; ++k)
        axes[k] = Axis{grid.lower[k], grid.upper[k], grid.n[k] - 1};
    return Grid::make(std::span<const Axis>(axes.data(), static_cast<std::size_t>(grid.dim)));
}

InfluenceModel RunConfig::make_model() const {
    if (model.kind == "heat") return make_heat_model(model.diffusivity);
    if (model.kind == "scaled_constant") return make_scaled_constant_preset(model.g, model.m);
    if (model.kind == "general_constant") return make_constant_general(model.d);
    if (model.g_kind == "perona_malik") return make_perona_malik_complex(model.kappa, model.f);
    return make_constant_complex(model.g, model.f);
}

ReactionModel RunConfig::make_reaction() const {
    if (reaction.lambda1 == 0.0 && reaction.lambda2 == 0.0) return ReactionModel::none();
    return ReactionModel::constant(reaction.lambda1, reaction.lambda2);
}

SchemeConfig RunConfig::make_scheme() const {
    SchemeConfig cfg;
    cfg.scheme = scheme_from_string(scheme.kind, "scheme.kind");
    cfg.solver = solver_from_string(scheme.solver, "scheme.solver");
    cfg.theta = scheme.theta;
    cfg.dt = scheme.dt;
    return cfg;
}

StateW RunConfig::make_initial(const Grid& g) const {
    Field u(g), v(g);
    if (init.kind == "constant") {
        for (std::size_t i = 0; i < u.size(); ++i) {
            u[i] = init.value_u;
            v[i] = init.value_v;
        }
    } else if (init.kind == "random") {
        // Uniform [0,1) from the raw 64-bit stream; avoids the
        // implementation-defined distribution adapters for bit-stable
        // outputs.
        std::mt19937_64 rng(init.seed);
        auto next = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
        for (std::size_t i = 0; i < u.size(); ++i) u[i] = next();
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = next();
    } else if (init.kind == "smooth") {
        const double pi = std::acos(-1.0);
        for (std::size_t i = 0; i < u.size(); ++i) {
            const auto jc = g.node_coords(i);
            double cu = 1.0, cv = 1.0;
            for (int k = 0; k < g.dim(); ++k) {
                const double xi = (g.coordinate(k, jc[static_cast<std::size_t>(k)]) -
                                   g.axis(k).lower) /
                                  (g.axis(k).upper - g.axis(k).lower);
                cu *= std::cos(pi * xi);
                cv *= std::cos(2.0 * pi * xi);
            }
            u[i] = init.offset + init.amplitude * cu;
            v[i] = init.offset + init.amplitude * cv;
        }
    } else {
        auto [fu, fv] = fields_on_grid(read_field_file(init.file), g);
        u = std::move(fu);
        v = std::move(fv);
    }
    return StateW::from_initial(std::move(u), std::move(v), 0.0);
}

StepOptions RunConfig::make_step_options() const {
    StepOptions opt;
    opt.parallel = run.parallel;
    opt.threads = run.threads;
    return opt;
}

std::vector<StateSample> RunConfig::make_samples() const {
    std::vector<StateSample> out;
    const int n = check.samples;
    out.reserve(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            StateSample s;
            s.u = n == 1 ? 0.5 * (check.u_min + check.u_max)
                         : check.u_min + i * (check.u_max - check.u_min) / (n - 1);
            s.v = n == 1 ? 0.5 * (check.v_min + check.v_max)
                         : check.v_min + j * (check.v_max - check.v_min) / (n - 1);
            s.t = 0.0;
            out.push_back(s);
        }
    return out;
}

std::vector<BenchCell> RunConfig::bench_cells() const {
    std::vector<BenchCell> cells;
    for (const auto& s : bench.schemes)
        for (const auto& sol : bench.solvers) {
            const Scheme sc = scheme_from_string(s, "bench.schemes");
            const SolverKind kind = solver_from_string(sol, "bench.solvers");
            if (sc == Scheme::FullTheta && kind == SolverKind::BlockBanded)
                continue; // no banded form of the unsplit system
            for (const int n : bench.sizes) {
                BenchCell cell;
                cell.scheme = sc;
                cell.solver = kind;
                cell.n = {n, n, grid.dim == 3 ? n : 0};
                cells.push_back(cell);
            }
        }
    return cells;
}

BenchOptions RunConfig::bench_options() const {
    BenchOptions opt;
    opt.theta = scheme.theta;
    opt.dt = scheme.dt;
    opt.warmup = bench.warmup;
    opt.repetitions = bench.repetitions;
    opt.whole_step = bench.mode == "step";
    opt.parallel = run.parallel;
    opt.threads = run.threads;
    opt.seed = init.seed;
    return opt;
}

} // namespace crossdiff
