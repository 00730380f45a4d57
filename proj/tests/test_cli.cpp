#include <gtest/gtest.h>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "commands.hpp"

using namespace resdecay;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "resdecay");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), {out, err});
    return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(cells);
    }
    return rows;
}

double num(const std::string& s) {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    EXPECT_TRUE(ec == std::errc{} && p == s.data() + s.size()) << "'" << s << "'";
    return v;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("resdecay_test_" + name);
    std::filesystem::remove_all(p);
    return p;
}

}  // namespace

TEST(Format, ShortestRoundTripWithUppercaseExponent) {
    EXPECT_EQ(format_real(0.1), "0.1");
    EXPECT_EQ(format_real(1e-300), "1E-300");
    EXPECT_EQ(format_real(-2.5e20), "-2.5E+20");
    EXPECT_EQ(format_real(0.0), "0");
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> mant(-1.0, 1.0), ex(-300.0, 300.0);
    for (int i = 0; i < 5000; ++i) {
        const double v = mant(rng) * std::pow(10.0, ex(rng));
        EXPECT_EQ(num(format_real(v)), v);
    }
}

TEST(Format, CsvLayout) {
    Table t{{"a", "b", "c"}, {}};
    t.add({1LL, 0.5, std::string()});
    std::ostringstream os;
    write_csv(os, t);
    EXPECT_EQ(os.str(), "a,b,c\n1,0.5,\n");
}

TEST(Config, Defaults) {
    RunConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    EXPECT_EQ(cfg.potential.lambda, 100.0);
    EXPECT_EQ(cfg.potential.a, 1.0);
    EXPECT_EQ(cfg.n_poles, 100);
    EXPECT_EQ(cfg.times, (std::vector<double>{0.2, 0.5, 1.0, 2.0}));
    EXPECT_EQ(cfg.quadrature.outer_cutoff(1.0), 4000.0);
    EXPECT_EQ(cfg.natural_times(10.0), (std::vector<double>{2.0, 5.0, 10.0, 20.0}));
}

TEST(Config, ParsesFlatFile) {
    std::istringstream in(
        "# comment\n"
        "potential.lambda = 50   # trailing\n"
        "potential.a=2\n"
        "\n"
        "initial_state.q = 2\n"
        "expansion.n_poles = 40\n"
        "times = 0.1, 0.4,1\n"
        "times.unit = natural\n"
        "quadrature.r_max = 900\n"
        "grid.n_points = 11\n"
        "output.format = json\n");
    RunConfig cfg;
    parse_config_text(cfg, in);
    EXPECT_EQ(cfg.potential.lambda, 50.0);
    EXPECT_EQ(cfg.potential.a, 2.0);
    EXPECT_EQ(cfg.q, 2);
    EXPECT_EQ(cfg.n_poles, 40);
    EXPECT_EQ(cfg.times, (std::vector<double>{0.1, 0.4, 1.0}));
    EXPECT_EQ(cfg.time_unit, TimeUnit::Natural);
    EXPECT_EQ(cfg.natural_times(7.0), cfg.times);
    EXPECT_EQ(cfg.quadrature.r_max, 900.0);
    EXPECT_EQ(cfg.grid_n_points, 11);
    EXPECT_EQ(cfg.format, OutputFormat::Json);
    EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, Rejections) {
    RunConfig cfg;
    EXPECT_THROW(apply_setting(cfg, "potential.mu", "1"), ConfigError);
    EXPECT_THROW(apply_setting(cfg, "potential.lambda", "abc"), ConfigError);
    EXPECT_THROW(apply_setting(cfg, "expansion.n_poles", "2.5"), ConfigError);
    EXPECT_THROW(apply_setting(cfg, "times", "1,"), ConfigError);
    EXPECT_THROW(apply_setting(cfg, "times.unit", "years"), ConfigError);
    EXPECT_THROW(apply_override(cfg, "potential.lambda"), ConfigError);
    std::istringstream bad("potential.lambda 3\n");
    EXPECT_THROW(parse_config_text(cfg, bad), ConfigError);

    auto invalid = [](const std::string& key, const std::string& value) {
        RunConfig c;
        apply_setting(c, key, value);
        EXPECT_THROW(c.validate(), ConfigError) << key << " = " << value;
    };
    invalid("potential.lambda", "-1");
    invalid("potential.a", "0");
    invalid("initial_state.q", "0");
    invalid("expansion.n_poles", "0");
    invalid("times", "1, 0.5");
    invalid("times", "1, 1");
    invalid("grid.n_points", "1");
    invalid("quadrature.r_max", "0.5");
    invalid("quadrature.min_points_per_oscillation", "3");
    invalid("unitarity.deficit_bound", "0");
}

TEST(Config, LoadsFromFile) {
    const auto dir = scratch_dir("config");
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "run.cfg") << "expansion.n_poles = 3\n";
    EXPECT_EQ(load_config((dir / "run.cfg").string()).n_poles, 3);
    EXPECT_THROW(load_config((dir / "missing.cfg").string()), ConfigError);
    const auto r = run({"--config", (dir / "run.cfg").string(), "poles"});
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(parse_csv(r.out).size(), 4u);
    // command-line overrides win over the file
    const auto r2 = run({"--config", (dir / "run.cfg").string(), "poles", "--set", "expansion.n_poles=5"});
    EXPECT_EQ(parse_csv(r2.out).size(), 6u);
}

TEST(Cli, PolesDefault) {
    const auto r = run({"poles"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = parse_csv(r.out);
    ASSERT_EQ(rows.size(), 101u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"n", "alpha", "beta", "E_n", "Gamma_n", "residual"}));
    for (std::size_t i = 1; i < rows.size(); ++i) {
        EXPECT_EQ(rows[i][0], std::to_string(i));
        EXPECT_LT(num(rows[i][5]), 1e-12);
    }
    EXPECT_EQ(r.out.find('\r'), std::string::npos);
}

TEST(Cli, SinglePole) {
    const auto r = run({"poles", "--set", "expansion.n_poles=1"});
    ASSERT_EQ(r.code, 0);
    const auto rows = parse_csv(r.out);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_NEAR(num(rows[1][1]), 3.11, 0.01);
    EXPECT_NEAR(num(rows[1][2]), 0.001, 1e-4);
}

TEST(Cli, InvalidConfigExitsNonzero) {
    const auto r = run({"poles", "--set", "potential.lambda=-1"});
    EXPECT_EQ(r.code, cli::usage_error);
    EXPECT_NE(r.err.find("potential.lambda"), std::string::npos);
    EXPECT_TRUE(r.out.empty());
    EXPECT_EQ(run({}).code, cli::usage_error);
    EXPECT_EQ(run({"bogus"}).code, cli::usage_error);
    EXPECT_EQ(run({"snapshot"}).code, cli::usage_error);
    EXPECT_EQ(run({"poles", "--set", "nope=1"}).code, cli::usage_error);
}

TEST(Cli, SolverFailureNamesPole) {
    const auto r = run({"poles", "--set", "solver.tol=1e-40"});
    EXPECT_EQ(r.code, cli::numerical_failure);
    EXPECT_NE(r.err.find("n = 1"), std::string::npos);
}

TEST(Cli, OutputIsDeterministic) {
    const auto a = run({"states", "--set", "expansion.n_poles=30"});
    const auto b = run({"states", "--set", "expansion.n_poles=30"});
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out);
    const auto rows = parse_csv(a.out);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"n", "Re_A", "Im_A", "Re_B", "Im_B", "Re_C", "Im_C",
                                                 "norm_residual"}));
    EXPECT_EQ(rows.size(), 31u);
}

TEST(Cli, JsonMatchesCsvExactly) {
    const auto csv = run({"poles", "--set", "expansion.n_poles=20"});
    const auto json = run({"--format", "json", "poles", "--set", "expansion.n_poles=20"});
    ASSERT_EQ(json.code, 0);
    const auto rows = parse_csv(csv.out);
    const auto doc = nlohmann::json::parse(json.out);
    ASSERT_EQ(doc["rows"].size(), rows.size() - 1);
    EXPECT_EQ(doc["columns"].get<std::vector<std::string>>(), rows[0]);
    for (std::size_t i = 0; i < doc["rows"].size(); ++i)
        for (std::size_t j = 1; j < rows[0].size(); ++j)
            EXPECT_EQ(doc["rows"][i][j].get<double>(), num(rows[i + 1][j]));
}

TEST(Cli, WritesIntoOutputDirectory) {
    const auto dir = scratch_dir("outdir");
    const auto r = run({"--out-dir", dir.string(), "poles", "--set", "expansion.n_poles=4"});
    ASSERT_EQ(r.code, 0);
    EXPECT_TRUE(r.out.empty());
    EXPECT_EQ(slurp(dir / "poles.csv"), run({"poles", "--set", "expansion.n_poles=4"}).out);
}

TEST(Cli, SnapshotAtInitialInstant) {
    const auto dir = scratch_dir("snap0");
    const auto r = run({"--out-dir", dir.string(), "snapshot", "--t", "0", "--gamow", "--set", "grid.n_points=11",
                        "--set", "grid.r_max=50"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto in = parse_csv(slurp(dir / "snapshot_internal.csv"));
    const auto ex = parse_csv(slurp(dir / "snapshot_external.csv"));
    ASSERT_EQ(in.size(), 12u);
    EXPECT_EQ(in[0], (std::vector<std::string>{"r", "density", "re_psi", "im_psi", "gamow_density"}));
    for (std::size_t i = 1; i < in.size(); ++i) {
        const double x = num(in[i][0]);
        EXPECT_NEAR(num(in[i][1]), 2.0 * std::pow(std::sin(std::numbers::pi * x), 2), 1e-14);
    }
    for (std::size_t i = 1; i < ex.size(); ++i) EXPECT_EQ(num(ex[i][1]), 0.0);
    const auto meta = nlohmann::json::parse(slurp(dir / "snapshot.json"));
    EXPECT_EQ(meta["t"].get<double>(), 0.0);
    EXPECT_NEAR(meta["I_in"].get<double>(), 1.0, 1e-10);
    EXPECT_EQ(meta["I_ex"].get<double>(), 0.0);
    EXPECT_TRUE(meta["wavefront_positions"].empty());
}

TEST(Cli, SnapshotSidecarAndFront) {
    const auto dir = scratch_dir("snap");
    const auto r = run({"--out-dir", dir.string(), "snapshot", "--t", "0.5", "--gamow", "--set",
                        "grid.n_points=8001", "--set", "quadrature.r_max=1000", "--set", "grid.r_max=1000"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto meta = nlohmann::json::parse(slurp(dir / "snapshot.json"));
    const double t = meta["t"].get<double>();
    EXPECT_NEAR(meta["t_over_tau"].get<double>(), 0.5, 1e-15);
    const auto& fronts = meta["wavefront_positions"];
    ASSERT_EQ(fronts.size(), 100u);
    const double r1 = fronts[0]["r"].get<double>();
    EXPECT_EQ(fronts[0]["n"].get<int>(), 1);
    EXPECT_NEAR(meta["deficit"].get<double>(),
                1.0 - meta["I_in"].get<double>() - meta["I_ex"].get<double>(), 1e-15);
    EXPECT_GT(t, 0.0);
    // main front: the largest density peak lies near r_1
    const auto ex = parse_csv(slurp(dir / "snapshot_external.csv"));
    double best = -1.0, r_best = 0.0;
    for (std::size_t i = 1; i < ex.size(); ++i)
        if (num(ex[i][1]) > best) best = num(ex[i][1]), r_best = num(ex[i][0]);
    EXPECT_LT(std::abs(r_best - r1) / r1, 0.1);
    // Gamow density keeps growing outward while the true density is cut off ahead of the front
    EXPECT_GT(num(ex.back()[4]), num(ex[1][4]));
    EXPECT_LT(num(ex.back()[1]), 1e-3 * num(ex.back()[4]));
}

TEST(Cli, UnitarityNegativeControl) {
    const auto r = run({"unitarity", "--set", "times=2", "--set", "quadrature.r_max=2"});
    EXPECT_EQ(r.code, cli::bound_exceeded);
    EXPECT_NE(r.err.find("truncated front"), std::string::npos);
    const auto rows = parse_csv(r.out);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"t", "t_over_tau", "I_in", "I_ex", "total", "deficit",
                                                 "tail_estimate"}));
    EXPECT_GT(num(rows[1][5]), 0.5);
}

TEST(Cli, UnitarityShortRun) {
    const auto r = run({"unitarity", "--set", "times=0,0.5", "--set", "times.unit=natural"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = parse_csv(r.out);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_NEAR(num(rows[1][4]), 1.0, 1e-10);
    EXPECT_GE(num(rows[2][4]), 0.999);
}

TEST(Cli, SurvivalRows) {
    const auto r = run({"survival", "--set", "times=0,0.5,1"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = parse_csv(r.out);
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"t", "t_over_tau", "S", "P_nonescape"}));
    EXPECT_NEAR(num(rows[1][2]), 1.0, 1e-10);
    EXPECT_NEAR(num(rows[1][3]), 1.0, 1e-10);
    for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LE(num(rows[i][2]), num(rows[i][3]) + 1e-8);
}

TEST(Cli, ForerunnerTable) {
    const auto r = run({"forerunners", "--t", "0.5", "--set", "grid.n_points=16001"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.err.find("coarse"), std::string::npos);
    const auto rows = parse_csv(r.out);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"n", "r_predicted", "r_peak", "relative_offset"}));
    for (int n = 2; n <= 10; ++n) EXPECT_LT(std::abs(num(rows[n][3])), 0.05) << "n = " << n;
    // fronts scale linearly with t
    const auto later = parse_csv(run({"forerunners", "--t", "1.0", "--set", "grid.n_points=16001"}).out);
    EXPECT_NEAR(num(later[3][1]) - 1.0, 2.0 * (num(rows[3][1]) - 1.0), 1e-9);
}

TEST(Cli, ForerunnerCoarseGridWarns) {
    const auto r = run({"forerunners", "--t", "0.5", "--set", "grid.n_points=100"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.err.find("coarse"), std::string::npos);
}

TEST(Cli, SpecialEval) {
    const auto w = parse_csv(run({"special", "eval", "--z", "1,1"}).out);
    ASSERT_EQ(w.size(), 2u);
    EXPECT_NEAR(num(w[1][2]), 3.047442052569125924571388e-1, 1e-15);
    EXPECT_NEAR(num(w[1][3]), 2.082189382028316272874373e-1, 1e-15);
    const auto m = parse_csv(run({"special", "eval", "--M", "100,40,3.1101767,-0.000987"}).out);
    ASSERT_EQ(m.size(), 2u);
    EXPECT_NEAR(num(m[1][4]), 7.310826411145601420846435e-1, 1e-12);
    EXPECT_NEAR(num(m[1][5]), -4.334604641756411737133735e-1, 1e-12);
    EXPECT_EQ(run({"special", "eval"}).code, cli::usage_error);
    EXPECT_EQ(run({"special", "eval", "--M", "0,0,1,0"}).code, cli::numerical_failure);
}
