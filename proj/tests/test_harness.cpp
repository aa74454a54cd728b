#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "quadcs/harness.hpp"

using namespace quadcs;
namespace fs = std::filesystem;

namespace {

// P = 256, N = 128: fast enough for many trials.
ExperimentConfig tiny() {
    ExperimentConfig c;
    c.name = "tiny";
    c.pulse_width = 1.28e-6;
    c.period = 2.56e-6;
    c.bcs_list = {15e6, 30e6};
    c.k_list = {2};
    c.trials = 8;
    c.seed = 42;
    c.threads = 1;
    return c;
}

std::string trials_csv(const ExperimentResult& r) {
    std::ostringstream os;
    write_trials_csv(os, r.records);
    return os.str();
}

std::string aggregate_csv(const ExperimentResult& r) {
    std::ostringstream os;
    write_aggregate_csv(os, r.aggregates);
    return os.str();
}

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("quadcs_test_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST(Config, Validation) {
    auto c = tiny();
    EXPECT_NO_THROW(c.validate());
    c.bcs_list.clear();
    EXPECT_THROW(c.validate(), ConfigError);
    c = tiny();
    c.solver = "lasso";
    EXPECT_THROW(c.validate(), ConfigError);
    c = tiny();
    c.period = 1e-6;
    EXPECT_THROW(c.validate(), ConfigError);
    c = tiny();
    c.bcs_list = {200e6};
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, JsonRoundTrip) {
    auto c = tiny();
    c.isnr_list = {0.0, 10.0};
    c.t_list = {2.56e-6, 5.12e-6};
    c.waveform = WaveformKind::PhaseCoded;
    c.zc_root = 3;
    c.epsilon_count = EpsilonCount::Atoms;
    c.spg.max_iterations = 123;
    const json j = c;
    const ExperimentConfig back = j.get<ExperimentConfig>();
    EXPECT_EQ(json(back).dump(), j.dump());
    EXPECT_EQ(config_hash(back), config_hash(c));
}

TEST(Config, FileLoadingAndErrors) {
    const fs::path dir = scratch_dir("cfg");
    fs::create_directories(dir);
    {
        std::ofstream f(dir / "ok.json");
        f << json(tiny()).dump(2);
    }
    EXPECT_EQ(config_hash(load_config(dir / "ok.json")), config_hash(tiny()));
    {
        std::ofstream f(dir / "bad.json");
        f << "{ \"trials\": ";
    }
    EXPECT_THROW(load_config(dir / "bad.json"), ConfigError);
    EXPECT_THROW(load_config(dir / "missing.json"), ConfigError);
    {
        std::ofstream f(dir / "eps.json");
        f << R"({"bcs_list": [1e7], "k_list": [1], "epsilon_count": "sometimes"})";
    }
    EXPECT_THROW(load_config(dir / "eps.json"), ConfigError);
    fs::remove_all(dir);
}

TEST(Config, HashIgnoresOutputLocation) {
    auto a = tiny();
    auto b = tiny();
    b.output_dir = "/elsewhere";
    b.threads = 7;
    EXPECT_EQ(config_hash(a), config_hash(b));
    b.seed = 43;
    EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Config, OutputDirResolution) {
    auto c = tiny();
    c.output_dir = "explicit";
    EXPECT_EQ(resolve_output_dir(c), fs::path("explicit"));
    c.output_dir.clear();
    ::setenv("QUADCS_OUTPUT_DIR", "/tmp/qo", 1);
    EXPECT_EQ(resolve_output_dir(c), fs::path("/tmp/qo") / "tiny");
    ::unsetenv("QUADCS_OUTPUT_DIR");
    EXPECT_EQ(resolve_output_dir(c), fs::path("quadcs_out") / "tiny");
}

TEST(Run, ZeroTrialsGiveEmptyAggregates) {
    auto c = tiny();
    c.trials = 0;
    const auto r = run_experiment(c);
    EXPECT_TRUE(r.records.empty());
    ASSERT_EQ(r.aggregates.size(), 2u);
    EXPECT_EQ(r.aggregates[0].trials, 0u);
}

TEST(Run, SweepShapeAndRecords) {
    auto c = tiny();
    c.k_list = {1, 2};
    c.isnr_list = {10.0};
    const auto r = run_experiment(c);
    ASSERT_EQ(r.aggregates.size(), 4u);
    EXPECT_EQ(r.records.size(), 4u * c.trials);
    for (const auto& rec : r.records) {
        EXPECT_TRUE(rec.error.empty()) << rec.error;
        EXPECT_EQ((256 - rec.m) % 2, 0u);
        EXPECT_GT(rec.epsilon, 0.0);
    }
}

TEST(Run, NoiseFreeSucceedsWithEnoughRows) {
    auto c = tiny();
    c.bcs_list = {40e6};
    c.trials = 20;
    const auto r = run_experiment(c);
    EXPECT_GE(r.aggregates[0].psr, 0.95);
    EXPECT_EQ(r.aggregates[0].rsnr_db, kSnrCapDb);
    EXPECT_DOUBLE_EQ(r.aggregates[0].hit_rate, 1.0);
}

TEST(Run, BitwiseDeterministicAcrossThreadCounts) {
    auto c = tiny();
    c.isnr_list = {5.0};
    const auto serial = run_experiment(c);
    EXPECT_EQ(trials_csv(serial), trials_csv(run_experiment(c)));
    c.threads = 4;
    const auto threaded = run_experiment(c);
    EXPECT_EQ(trials_csv(serial), trials_csv(threaded));
    EXPECT_EQ(aggregate_csv(serial), aggregate_csv(threaded));
}

TEST(Run, InsertingPointsLeavesOtherStreamsAlone) {
    auto a = tiny();
    auto b = tiny();
    b.bcs_list = {15e6, 20e6, 30e6};
    b.k_list = {1, 2};
    const auto ra = run_experiment(a);
    const auto rb = run_experiment(b);
    auto find = [](const ExperimentResult& r, std::size_t k, double bcs, std::size_t trial) {
        for (const auto& rec : r.records)
            if (rec.point.k == k && rec.point.bcs == bcs && rec.trial == trial) return rec;
        throw std::runtime_error("missing record");
    };
    for (double bcs : {15e6, 30e6})
        for (std::size_t t = 0; t < a.trials; ++t) {
            const auto x = find(ra, 2, bcs, t);
            const auto y = find(rb, 2, bcs, t);
            EXPECT_EQ(x.scene_key, y.scene_key);
            EXPECT_EQ(x.chip_key, y.chip_key);
            EXPECT_EQ(x.metrics.relative_error, y.metrics.relative_error);
        }
}

TEST(Run, ScenesSharedAcrossCompressiveBandwidths) {
    const auto r = run_experiment(tiny());
    ASSERT_EQ(r.records.size(), 16u);
    EXPECT_EQ(r.records[0].scene_key, r.records[8].scene_key);
    EXPECT_EQ(r.records[0].chip_key, r.records[8].chip_key);
    EXPECT_NE(r.records[0].scene_key, r.records[1].scene_key);
}

TEST(Run, TrialFailuresAreRecordedNotThrown) {
    auto c = tiny();
    c.bcs_list = {15e6};
    c.delays = {100e-6};  // beyond the period: every trial throws
    ExperimentResult r;
    ASSERT_NO_THROW(r = run_experiment(c));
    ASSERT_EQ(r.records.size(), c.trials);
    for (const auto& rec : r.records) {
        EXPECT_FALSE(rec.error.empty());
        EXPECT_EQ(rec.status, "error");
    }
    EXPECT_EQ(r.aggregates[0].solver_failures, c.trials);
    EXPECT_EQ(r.aggregates[0].psr, 0.0);
}

TEST(Run, CrossCheckAgreesWithOperator) {
    auto c = tiny();
    c.cross_check = true;
    c.bcs_list = {20e6};
    c.trials = 4;
    const auto r = run_experiment(c);
    for (const auto& rec : r.records) {
        EXPECT_GE(rec.cross_check_error, 0.0);
        EXPECT_LE(rec.cross_check_error, 1e-3);
    }
    EXPECT_EQ(r.aggregates[0].cross_check_failures, 0u);
}

TEST(Frontier, StepFunction) {
    std::vector<std::size_t> grid;
    for (std::size_t m = 10; m <= 100; m += 2) grid.push_back(m);
    const auto row = bisect_frontier(grid, 0.99, [](std::size_t m) { return m >= 58 ? 1.0 : 0.2; });
    EXPECT_TRUE(row.resolved);
    EXPECT_EQ(row.m_star, 58u);
    EXPECT_TRUE(row.monotone_consistent);
    EXPECT_LE(row.evaluated.size(), 9u);
    const auto low = bisect_frontier(grid, 0.99, [](std::size_t) { return 1.0; });
    EXPECT_EQ(low.m_star, 10u);
}

TEST(Frontier, UnresolvedAndInconsistent) {
    const std::vector<std::size_t> grid{10, 20, 30, 40, 50};
    EXPECT_FALSE(bisect_frontier(grid, 0.99, [](std::size_t) { return 0.5; }).resolved);
    // non-monotone curve: the evaluated points contradict the answer
    const auto row = bisect_frontier(grid, 0.99, [](std::size_t m) { return (m == 10 || m >= 40) ? 1.0 : 0.0; });
    EXPECT_TRUE(row.resolved);
    EXPECT_EQ(row.m_star, 10u);
    const auto row2 = bisect_frontier(grid, 0.99, [](std::size_t m) { return (m == 30 || m == 50) ? 1.0 : 0.0; });
    EXPECT_TRUE(row2.resolved);
    EXPECT_EQ(row2.m_star, 30u);
    EXPECT_FALSE(row2.monotone_consistent);
    EXPECT_THROW(bisect_frontier({}, 0.99, [](std::size_t) { return 1.0; }), ConfigError);
}

TEST(Frontier, GridHasEvenDifferences) {
    auto c = tiny();
    c.bcs_list = {5e6, 40e6};
    const auto g = frontier_grid(c, c.period);
    ASSERT_FALSE(g.empty());
    for (std::size_t i = 0; i < g.size(); ++i) {
        EXPECT_EQ((256 - g[i]) % 2, 0u);
        if (i) { EXPECT_EQ(g[i] - g[i - 1], 2u); }
    }
}

TEST(Frontier, LongerPeriodNeedsLessBandwidth) {
    auto c = tiny();
    c.k_list = {3};
    c.t_list = {2.56e-6, 5.12e-6};
    c.bcs_list = {2e6, 50e6};
    c.trials = 20;
    c.psr_target = 0.95;
    const auto rows = bandwidth_frontier(c);
    ASSERT_EQ(rows.size(), 2u);
    ASSERT_TRUE(rows[0].resolved);
    ASSERT_TRUE(rows[1].resolved);
    EXPECT_LT(rows[1].bcs_star, rows[0].bcs_star);
    std::ostringstream os;
    write_frontier_csv(os, rows);
    std::istringstream is(os.str());
    const auto pts = read_frontier_csv(is);
    ASSERT_EQ(pts.size(), 2u);
    EXPECT_DOUBLE_EQ(pts[1].bcs, rows[1].bcs_star);
}

TEST(Output, HeaderOnlyWhenEmpty) {
    std::ostringstream t, a;
    write_trials_csv(t, {});
    write_aggregate_csv(a, {});
    EXPECT_EQ(t.str(), std::string(kTrialColumns) + "\n");
    EXPECT_EQ(a.str(), std::string(kAggregateColumns) + "\n");
}

TEST(Output, NoiseSweepSchema) {
    const std::string cols = kAggregateColumns;
    for (const char* name : {",k,", ",isnr_db,", ",rsnr_db,", ",rsnr_stderr_db,"}) EXPECT_NE(cols.find(name), std::string::npos) << name;
    auto c = tiny();
    c.k_list = {1, 2};
    c.isnr_list = {10.0};
    EXPECT_NE(gnuplot_script(c).find("using 3:13:14"), std::string::npos);
}

TEST(Output, AggregateParseBack) {
    auto c = tiny();
    c.isnr_list = {0.0, 10.0};
    const auto r = run_experiment(c);
    const std::string text = aggregate_csv(r);
    std::istringstream is(text);
    const auto back = read_aggregate_csv(is);
    ASSERT_EQ(back.size(), r.aggregates.size());
    std::ostringstream again;
    write_aggregate_csv(again, back);
    EXPECT_EQ(again.str(), text);
    std::istringstream bad("wrong,header\n");
    EXPECT_THROW(read_aggregate_csv(bad), ConfigError);
}

TEST(Output, EmitWritesAllArtifacts) {
    const fs::path dir = scratch_dir("emit");
    const auto r = run_experiment(tiny());
    emit_outputs(r, dir);
    for (const char* f : {"trials.csv", "aggregate.csv", "summary.json", "plot.gp"}) EXPECT_TRUE(fs::exists(dir / f)) << f;
    std::ifstream js(dir / "summary.json");
    const json j = json::parse(js);
    EXPECT_EQ(j.at("config_hash").get<std::string>(), config_hash(r.config));
    EXPECT_EQ(j.at("points").size(), 2u);
    EXPECT_EQ(j.at("config").at("seed").get<std::uint64_t>(), 42u);
    fs::remove_all(dir);
}

TEST(Output, UnwritableDirectory) {
    const fs::path dir = scratch_dir("blocker");
    fs::create_directories(dir);
    {
        std::ofstream f(dir / "file");
        f << "x";
    }
    EXPECT_THROW(emit_outputs(run_experiment([] {
                     auto c = tiny();
                     c.trials = 1;
                     return c;
                 }()),
                              dir / "file" / "sub"),
                 ConfigError);
    fs::remove_all(dir);
}

TEST(Parallel, CoversEveryIndexOnce) {
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), 4, [&](std::size_t i) { ++hits[i]; });
    for (int h : hits) EXPECT_EQ(h, 1);
    parallel_for(0, 4, [&](std::size_t) { FAIL(); });
}
