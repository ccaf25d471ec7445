#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <random>
#include <string>

#include "crossdiff/errors.hpp"
#include "crossdiff/field_io.hpp"
#include "crossdiff/grid.hpp"
#include "crossdiff/run_config.hpp"
#include "oracle_helpers.hpp"

using namespace crossdiff;

namespace {

unsigned char byte_at(const std::string& s, std::size_t i) {
    return static_cast<unsigned char>(s[i]);
}

std::string corrupted(std::string bytes, std::size_t where, unsigned char value) {
    bytes[where] = static_cast<char>(value);
    return bytes;
}

} // namespace

TEST_SUITE_BEGIN("io");

TEST_CASE("field files have a frozen little-endian layout") {
    const Grid g = Grid::pixels({1, 1}); // 2 x 2 nodes
    Field u(g), v(g);
    u[0] = 1.0;
    u[1] = 2.0;
    u[2] = 0.5;
    u[3] = -1.0;

    const std::string bytes = encode_fields(u, v);
    REQUIRE(bytes.size() == 4 + 4 * 4 + 16 * 4); // magic, 4 header words, 8 doubles
    CHECK(bytes.substr(0, 4) == "XDIF");
    CHECK(byte_at(bytes, 4) == 1); // version 1, little endian
    CHECK(byte_at(bytes, 5) == 0);
    CHECK(byte_at(bytes, 8) == 2);  // dim
    CHECK(byte_at(bytes, 12) == 2); // nodes per axis
    CHECK(byte_at(bytes, 16) == 2);

    // 1.0 encodes as 00 .. 00 F0 3F
    for (std::size_t i = 20; i < 26; ++i) CHECK(byte_at(bytes, i) == 0x00);
    CHECK(byte_at(bytes, 26) == 0xf0);
    CHECK(byte_at(bytes, 27) == 0x3f);
    // -1.0 flips the sign bit only
    CHECK(byte_at(bytes, 20 + 3 * 8 + 7) == 0xbf);
}

TEST_CASE("encode, decode, encode is byte stable") {
    std::mt19937_64 rng(3);
    for (const Grid& g : {Grid::pixels({3, 2}), Grid::pixels({2, 3, 2})}) {
        Field u = oracle::random_field(g, rng, -2.0, 2.0);
        Field v = oracle::random_field(g, rng, -2.0, 2.0);
        // special values must survive through their bit patterns
        u[0] = 0.0;
        u[1] = -0.0;
        v[0] = std::numeric_limits<double>::infinity();
        v[1] = std::numeric_limits<double>::quiet_NaN();
        v[2] = std::numeric_limits<double>::denorm_min();
        u[2] = 1e308;

        const std::string once = encode_fields(u, v);
        const FieldFile file = decode_fields(once);
        CHECK(file.version == kFieldFileVersion);
        REQUIRE(file.nodes.size() == static_cast<std::size_t>(g.dim()));

        const auto [ru, rv] = fields_on_grid(file, g);
        const std::string twice = encode_fields(ru, rv);
        CHECK(once == twice);
    }
}

TEST_CASE("write and read through the filesystem") {
    const Grid g = Grid::pixels({4, 3});
    std::mt19937_64 rng(5);
    const Field u = oracle::random_field(g, rng);
    const Field v = oracle::random_field(g, rng);

    const auto path = std::filesystem::temp_directory_path() / "crossdiff_io_test.xdif";
    write_field_file(path, u, v);
    const FieldFile file = read_field_file(path);
    const auto [ru, rv] = fields_on_grid(file, g);
    for (std::size_t i = 0; i < u.size(); ++i) {
        CHECK(ru[i] == u[i]);
        CHECK(rv[i] == v[i]);
    }
    std::filesystem::remove(path);

    CHECK_THROWS_WITH_AS((void)read_field_file(path), doctest::Contains("cannot open"),
                         ConfigError);
}

TEST_CASE("malformed field files are rejected") {
    const Grid g = Grid::pixels({2, 2});
    const std::string good = encode_fields(Field(g, 1.0), Field(g, 2.0));
    CHECK_NOTHROW((void)decode_fields(good));

    CHECK_THROWS_WITH_AS((void)decode_fields(corrupted(good, 0, 'Y')),
                         doctest::Contains("magic"), ConfigError);
    CHECK_THROWS_WITH_AS((void)decode_fields(corrupted(good, 4, 9)),
                         doctest::Contains("version"), ConfigError);
    CHECK_THROWS_WITH_AS((void)decode_fields(corrupted(good, 8, 4)),
                         doctest::Contains("dimension"), ConfigError);
    CHECK_THROWS_WITH_AS((void)decode_fields(corrupted(good, 12, 1)),
                         doctest::Contains("node counts"), ConfigError);
    CHECK_THROWS_WITH_AS((void)decode_fields(good.substr(0, good.size() - 3)),
                         doctest::Contains("payload"), ConfigError);
    CHECK_THROWS_WITH_AS((void)decode_fields(good + "xx"), doctest::Contains("payload"),
                         ConfigError);
    CHECK_THROWS_WITH_AS((void)decode_fields(good.substr(0, 10)), doctest::Contains("truncated"),
                         ConfigError);

    const FieldFile file = decode_fields(good);
    CHECK_THROWS_WITH_AS((void)fields_on_grid(file, Grid::pixels({3, 2})),
                         doctest::Contains("node counts"), ConfigError);

    Field u2(Grid::pixels({2, 2})), v3(Grid::pixels({3, 3}));
    CHECK_THROWS_AS((void)encode_fields(u2, v3), ConfigError);
}

TEST_SUITE_END();

TEST_SUITE_BEGIN("config");

TEST_CASE("config text parsing") {
    const ConfigMap base = ConfigMap::parse_text("grid.n1 = 8\n"
                                                 "# a comment line\n"
                                                 "\n"
                                                 "model.kind =  complex_diffusion  \n"
                                                 "scheme.theta = 0.25\n");
    ConfigMap m = base;
    CHECK(m.has("grid.n1"));
    CHECK(!m.has("grid.n2"));
    CHECK(m.get_int("grid.n1", 0) == 8);
    CHECK(m.get_string("model.kind", "") == "complex_diffusion"); // trimmed
    CHECK(m.get_double("scheme.theta", 1.0) == doctest::Approx(0.25));
    CHECK(m.get_double("scheme.dt", 0.5) == 0.5); // default passes through
    CHECK_NOTHROW(m.finish());

    ConfigMap unread = base;
    (void)unread.get_int("grid.n1", 0);
    CHECK_THROWS_WITH_AS(unread.finish(), doctest::Contains("model.kind"), ConfigError);
}

TEST_CASE("config parse errors name the line or key") {
    CHECK_THROWS_WITH_AS((void)ConfigMap::parse_text("a.b = 1\nnonsense without equals\n"),
                         doctest::Contains("line 2"), ConfigError);
    CHECK_THROWS_WITH_AS((void)ConfigMap::parse_text("nodots = 1\n"),
                         doctest::Contains("bad key"), ConfigError);
    CHECK_THROWS_WITH_AS((void)ConfigMap::parse_text("a.b.c = 1\n"),
                         doctest::Contains("bad key"), ConfigError);
    CHECK_THROWS_WITH_AS((void)ConfigMap::parse_text("Grid.N1 = 4\n"),
                         doctest::Contains("bad key"), ConfigError);
    CHECK_THROWS_WITH_AS((void)ConfigMap::parse_text("a.b = 1\na.b = 2\n"),
                         doctest::Contains("duplicate"), ConfigError);

    ConfigMap m = ConfigMap::parse_text("a.b = 1\n");
    m.set("a.b", "2"); // set() replaces instead of erroring
    CHECK(m.get_int("a.b", 0) == 2);
    CHECK_THROWS_AS(m.set("BAD KEY", "1"), ConfigError);
}

TEST_CASE("typed getters reject malformed values") {
    ConfigMap m = ConfigMap::parse_text("a.num = 1.5x\n"
                                        "a.int = 3.7\n"
                                        "a.neg = -4\n"
                                        "a.bool = maybe\n"
                                        "a.big = 12345678901\n");
    CHECK_THROWS_WITH_AS((void)m.get_double("a.num", 0.0), doctest::Contains("a.num"),
                         ConfigError);
    CHECK_THROWS_WITH_AS((void)m.get_int("a.int", 0), doctest::Contains("a.int"), ConfigError);
    CHECK_THROWS_WITH_AS((void)m.get_u64("a.neg", 0), doctest::Contains("unsigned"), ConfigError);
    CHECK(m.get_int("a.neg", 0) == -4);
    CHECK_THROWS_WITH_AS((void)m.get_bool("a.bool", false), doctest::Contains("a.bool"),
                         ConfigError);
    CHECK_THROWS_AS((void)m.get_int("a.big", 0), ConfigError); // beyond int range
    CHECK(m.get_u64("a.big", 0) == 12345678901ULL);

    ConfigMap b = ConfigMap::parse_text("x.t = yes\nx.f = Off\nx.one = 1\n");
    CHECK(b.get_bool("x.t", false));
    CHECK(!b.get_bool("x.f", true));
    CHECK(b.get_bool("x.one", false));
}

TEST_CASE("environment overrides") {
    ConfigMap m = ConfigMap::parse_text("scheme.theta = 1.0\n");
    setenv("CDTEST_SCHEME_THETA", "0.25", 1);
    setenv("CDTEST_GRID_N1", "8", 1);
    setenv("CDTEST_MODEL_G_KIND", "perona_malik", 1);
    m.apply_environment("CDTEST_");
    unsetenv("CDTEST_SCHEME_THETA");
    unsetenv("CDTEST_GRID_N1");
    unsetenv("CDTEST_MODEL_G_KIND");

    CHECK(m.get_double("scheme.theta", 0.0) == doctest::Approx(0.25)); // replaced
    CHECK(m.get_int("grid.n1", 0) == 8);
    // the first underscore after the prefix splits section from key
    CHECK(m.get_string("model.g_kind", "") == "perona_malik");

    ConfigMap bad;
    setenv("CDTEST_NOSECTION", "1", 1);
    CHECK_THROWS_WITH_AS(bad.apply_environment("CDTEST_"), doctest::Contains("malformed"),
                         ConfigError);
    unsetenv("CDTEST_NOSECTION");
}

TEST_CASE("run configuration defaults and validation") {
    const RunConfig c = RunConfig::from_map(ConfigMap::parse_text("grid.n1 = 5\ngrid.n2 = 4\n"));
    CHECK(c.grid.dim == 2);
    CHECK(c.grid.n[0] == 5);
    const Grid g = c.make_grid();
    CHECK(g.nodes(0) == 5);
    CHECK(g.nodes(1) == 4);
    CHECK(g.spacing(0) == doctest::Approx(1.0)); // upper defaults to n - 1
    CHECK(c.scheme.kind == "aos");
    CHECK(c.model.kind == "heat");

    auto reject = [](const std::string& text, const char* named) {
        CHECK_THROWS_WITH_AS((void)RunConfig::from_map(ConfigMap::parse_text(text)),
                             doctest::Contains(named), ConfigError);
    };
    reject("grid.n1 = 5\ngrid.n2 = 4\ngrid.dim = 4\n", "grid.dim");
    reject("grid.n1 = 1\ngrid.n2 = 4\n", "grid.n1");
    reject("grid.n1 = 5\ngrid.n2 = 4\ngrid.n3 = 4\n", "grid.n3"); // conflicts with dim 2
    reject("grid.n1 = 5\ngrid.n2 = 4\ngrid.upper1 = -1\n", "grid.upper1");
    reject("grid.n1 = 5\ngrid.n2 = 4\nscheme.theta = 1.5\n", "scheme.theta");
    reject("grid.n1 = 5\ngrid.n2 = 4\nscheme.dt = 0\n", "scheme.dt");
    reject("grid.n1 = 5\ngrid.n2 = 4\nscheme.steps = 0\n", "scheme.steps");
    reject("grid.n1 = 5\ngrid.n2 = 4\nscheme.kind = full_theta\n", "scheme.solver");
    reject("grid.n1 = 5\ngrid.n2 = 4\nmodel.kind = wavelet\n", "model.kind");
    reject("grid.n1 = 5\ngrid.n2 = 4\nmodel.kappa = 0\n", "model.kappa");
    reject("grid.n1 = 5\ngrid.n2 = 4\nreaction.lambda1 = -1\n", "reaction.lambda1");
    reject("grid.n1 = 5\ngrid.n2 = 4\ninit.kind = file\n", "init.file");
    reject("grid.n1 = 5\ngrid.n2 = 4\ninit.kind = sing\n", "init.kind");
    reject("grid.n1 = 5\ngrid.n2 = 4\noutput.snapshot_stride = -1\n", "snapshot_stride");
    reject("grid.n1 = 5\ngrid.n2 = 4\nbench.mode = turbo\n", "bench.mode");
    reject("grid.n1 = 5\ngrid.n2 = 4\nbench.sizes = 16,fast\n", "bench.sizes");
    reject("grid.n1 = 5\ngrid.n2 = 4\ncheck.samples = 0\n", "check.samples");
    reject("grid.n1 = 5\ngrid.n2 = 4\ncheck.u_max = -1\n", "check.u_max");
    reject("grid.n1 = 5\ngrid.n2 = 4\nfuture.flag = 1\n", "unknown config key");

    // full theta is representable with the dense solver
    CHECK_NOTHROW((void)RunConfig::from_map(ConfigMap::parse_text(
        "grid.n1 = 5\ngrid.n2 = 4\nscheme.kind = full_theta\nscheme.solver = dense\n")));
}

TEST_CASE("manifests round-trip to the identical string") {
    const std::string text = "grid.dim = 3\n"
                             "grid.n1 = 5\n"
                             "grid.n2 = 4\n"
                             "grid.n3 = 3\n"
                             "grid.upper2 = 2.5\n"
                             "model.kind = complex_diffusion\n"
                             "model.g_kind = perona_malik\n"
                             "model.kappa = 2.5\n"
                             "model.f = 0.125\n"
                             "reaction.lambda1 = 0.4\n"
                             "reaction.lambda2 = 0.1\n"
                             "scheme.kind = amos\n"
                             "scheme.theta = 0.7\n"
                             "scheme.dt = 0.037\n"
                             "scheme.steps = 12\n"
                             "init.kind = smooth\n"
                             "init.seed = 99\n"
                             "init.offset = 0.6\n"
                             "init.amplitude = 0.3\n"
                             "output.dir = results\n"
                             "output.snapshot_stride = 2\n"
                             "run.parallel = true\n"
                             "bench.schemes = aos,amos\n"
                             "bench.sizes = 8,16\n"
                             "check.samples = 3\n"
                             "check.v_max = 2\n";
    const RunConfig c = RunConfig::from_map(ConfigMap::parse_text(text));
    const std::string manifest = c.to_manifest();
    const RunConfig back = RunConfig::from_map(ConfigMap::parse_text(manifest));
    CHECK(back.to_manifest() == manifest);
    CHECK(back.scheme.dt == c.scheme.dt); // bit-exact through 17 digits
    CHECK(back.grid.upper[1] == c.grid.upper[1]);
}

TEST_CASE("resolved factories build the configured objects") {
    const RunConfig c = RunConfig::from_map(ConfigMap::parse_text(
        "grid.n1 = 5\ngrid.n2 = 4\n"
        "model.kind = scaled_constant\nmodel.g = 2\n"
        "reaction.lambda1 = 0.4\nreaction.lambda2 = 0.1\n"
        "scheme.kind = amos\nscheme.theta = 0.7\nscheme.dt = 0.05\n"
        "check.samples = 2\ncheck.v_min = 2\ncheck.v_max = 3\n"
        "bench.schemes = aos,amos\nbench.solvers = banded,dense\nbench.sizes = 8,16\n"
        "bench.mode = step\n"));

    const auto d = c.make_model().evaluate(0.0, 0.0, 0.0);
    CHECK(d[0] == doctest::Approx(2.0));
    CHECK(d[1] == doctest::Approx(-2.0));

    const ReactionModel re = c.make_reaction();
    CHECK(re.relation == ReactionRelation::FirstDominates);
    CHECK(re.lambda1(0, 0, 0) == doctest::Approx(0.4));

    const SchemeConfig sc = c.make_scheme();
    CHECK(sc.scheme == Scheme::AMOS);
    CHECK(sc.theta == doctest::Approx(0.7));

    const auto samples = c.make_samples();
    REQUIRE(samples.size() == 4);
    CHECK(samples.front().u == doctest::Approx(0.0));
    CHECK(samples.front().v == doctest::Approx(2.0));
    CHECK(samples.back().u == doctest::Approx(1.0));
    CHECK(samples.back().v == doctest::Approx(3.0));

    const auto cells = c.bench_cells();
    CHECK(cells.size() == 2 * 2 * 2);
    CHECK(cells.front().n[2] == 0); // 2D

    const BenchOptions bo = c.bench_options();
    CHECK(bo.whole_step); // mode = step
    CHECK(bo.theta == doctest::Approx(0.7));

    // full_theta x banded cells are dropped rather than generated broken
    const RunConfig fb = RunConfig::from_map(ConfigMap::parse_text(
        "grid.n1 = 5\ngrid.n2 = 4\nbench.schemes = full_theta,aos\n"
        "bench.solvers = banded\nbench.sizes = 8\n"));
    const auto fcells = fb.bench_cells();
    CHECK(fcells.size() == 1);
    CHECK(fcells.front().scheme == Scheme::AOS);
}

TEST_CASE("initial data generation") {
    const Grid g = Grid::pixels({2, 2}); // nodes at {0, 1, 2} per axis

    SUBCASE("random fields are seed deterministic") {
        RunConfig c = RunConfig::from_map(
            ConfigMap::parse_text("grid.n1 = 9\ngrid.n2 = 7\ninit.seed = 42\n"));
        const Grid gg = c.make_grid();
        const StateW a = c.make_initial(gg);
        const StateW b = c.make_initial(gg);
        for (std::size_t i = 0; i < a.u.size(); ++i) {
            CHECK(a.u[i] == b.u[i]);
            CHECK(a.v[i] == b.v[i]);
            CHECK(a.u[i] >= 0.0);
            CHECK(a.u[i] < 1.0);
        }
        c.init.seed = 43;
        const StateW other = c.make_initial(gg);
        bool differs = false;
        for (std::size_t i = 0; i < a.u.size() && !differs; ++i) differs = a.u[i] != other.u[i];
        CHECK(differs);
        // anchors copy the initial fields
        CHECK(a.u0[3] == a.u[3]);
        CHECK(a.t == 0.0);
    }

    SUBCASE("smooth cosine bumps at frozen nodes") {
        RunConfig c = RunConfig::from_map(ConfigMap::parse_text(
            "grid.n1 = 3\ngrid.n2 = 3\ninit.kind = smooth\ninit.offset = 0.5\n"
            "init.amplitude = 0.25\n"));
        const StateW s = c.make_initial(g);
        // corner (0,0): cos(0)^2 = 1 for both profiles
        CHECK(s.u.at(0, 0) == doctest::Approx(0.75));
        CHECK(s.v.at(0, 0) == doctest::Approx(0.75));
        // center (1,1): cos(pi/2)^2 = 0, cos(pi)^2 = 1
        CHECK(s.u.at(1, 1) == doctest::Approx(0.5));
        CHECK(s.v.at(1, 1) == doctest::Approx(0.75));
        // edge midpoint (1,0): one factor vanishes for u only
        CHECK(s.u.at(1, 0) == doctest::Approx(0.5));
        CHECK(s.v.at(1, 0) == doctest::Approx(0.25)); // cos(pi) * cos(0) = -1
    }

    SUBCASE("constant fields") {
        RunConfig c = RunConfig::from_map(ConfigMap::parse_text(
            "grid.n1 = 3\ngrid.n2 = 3\ninit.kind = constant\ninit.value_u = 0.2\n"
            "init.value_v = 0.9\n"));
        const StateW s = c.make_initial(g);
        for (std::size_t i = 0; i < s.u.size(); ++i) {
            CHECK(s.u[i] == 0.2);
            CHECK(s.v[i] == 0.9);
        }
    }

    SUBCASE("file-backed fields") {
        std::mt19937_64 rng(7);
        const Field fu = oracle::random_field(g, rng);
        const Field fv = oracle::random_field(g, rng);
        const auto path = std::filesystem::temp_directory_path() / "crossdiff_init_test.xdif";
        write_field_file(path, fu, fv);

        RunConfig c = RunConfig::from_map(ConfigMap::parse_text(
            "grid.n1 = 3\ngrid.n2 = 3\ninit.kind = file\ninit.file = " + path.string() + "\n"));
        const StateW s = c.make_initial(g);
        for (std::size_t i = 0; i < s.u.size(); ++i) {
            CHECK(s.u[i] == fu[i]);
            CHECK(s.v[i] == fv[i]);
        }
        std::filesystem::remove(path);
    }
}

TEST_SUITE_END();
