#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "acisim/presets.hpp"
#include "acisim/results.hpp"

using namespace acisim;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("acisim_test_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ExperimentConfig small() {
    ExperimentConfig c;
    c.horizon = 3000;
    c.replications = 3;
    c.calibration_samples = 200;
    return c;
}

} // namespace

TEST_CASE("t interval") {
    const std::vector<double> x = {1.2, 0.8, 1.1, 0.9, 1.0, 1.3, 0.7, 1.05, 0.95, 1.0};
    const MetricStat s = summarize(x);
    CHECK(s.n == 10);
    CHECK(s.mean == doctest::Approx(1.0));
    const double t = boost::math::quantile(boost::math::students_t(9), 0.975);
    CHECK(t == doctest::Approx(2.262157));
    CHECK(s.ci_halfwidth == doctest::Approx(t * s.sd / std::sqrt(10.0)));
    CHECK(s.ci_halfwidth == doctest::Approx(0.1272987).epsilon(1e-6));
    const std::vector<double> one = {4.0};
    CHECK(summarize(one).ci_halfwidth == 0.0);
}

TEST_CASE("a run directory is self-describing") {
    const fs::path dir = fresh_dir("run");
    const auto cfg = small();
    const auto res = run_experiment(cfg, "ACI(FSO)", dir, 2);
    REQUIRE(res.replications.size() == 3);
    CHECK(res.seeds() == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(fs::exists(dir / "config.ini"));
    CHECK(parse_config(dir / "config.ini") == cfg);
    for (const char* f : {"metrics.json", "delays.csv", "budget.csv", "switches.csv", "backlog_trace.csv"}) {
        CAPTURE(f);
        CHECK(fs::exists(dir / "rep_00" / f));
    }
    CHECK(slurp(dir / "rep_00" / "switches.csv").rfind("# schema_version: 1\nslot,from,to,theta_deg,K,tau_slots,model", 0) == 0);
    const json m = json::parse(slurp(dir / "rep_01" / "metrics.json"));
    CHECK(m["schema_version"] == kSchemaVersion);
    CHECK(m["seed"] == 2);
    CHECK(m["conservation_ok"] == true);
}

TEST_CASE("metrics.json is identical across thread counts") {
    const auto cfg = small();
    const auto a = run_experiment(cfg, "x", std::nullopt, 1);
    const auto b = run_experiment(cfg, "x", std::nullopt, 3);
    for (int r = 0; r < 3; ++r) CHECK(a.replications[r].metrics.dump() == b.replications[r].metrics.dump());
}

TEST_CASE("merging: single run equals itself; mixed schema versions fail") {
    const auto res = run_experiment(small(), "A", std::nullopt, 0);
    const json one = res.replications[0].metrics;
    const MergedReport r1 = merge_metrics({one});
    const auto& st = r1.at("A").stats.at("/budget/serving");
    CHECK(st.n == 1);
    CHECK(st.mean == one["budget"]["serving"].get<double>());
    CHECK(st.ci_halfwidth == 0.0);

    json other = one;
    other["schema_version"] = kSchemaVersion + 1;
    CHECK_THROWS_AS(merge_metrics({one, other}), SchemaError);
    CHECK_THROWS(merge_metrics({}));

    json b = one;
    b["label"] = "B";
    const MergedReport r2 = merge_metrics({one, b, res.replications[1].metrics});
    REQUIRE(r2.series.size() == 2);
    CHECK(r2.series[0].label == "A");
    CHECK_FALSE(r2.deltas.empty());
}

TEST_CASE("merge_reports reads directories") {
    const fs::path dir = fresh_dir("merge");
    run_experiment(small(), "ACI(FSO)", dir, 0);
    const MergedReport r = merge_reports({dir});
    CHECK(r.at("ACI(FSO)").stats.at("/budget/serving").n == 3);
    CHECK_THROWS(merge_reports({dir / "missing"}));
}

TEST_CASE("presets") {
    CHECK(preset_names().size() == 5);
    const ExperimentConfig base;
    const auto cdf = preset_series("delay-cdf", base);
    REQUIRE(cdf.size() == 5);
    CHECK(cdf[0].label == "ACI(IID)");
    CHECK(cdf[1].label == "ACI(Dependent)");
    CHECK(cdf[2].label == "ACI(FSO)");
    CHECK(cdf[3].label == "ACI-A");
    CHECK(cdf[4].label == "ACI-PA");
    const auto ab = preset_series("ablation", base);
    REQUIRE(ab.size() == 4);
    CHECK(ab[1].config.gamma == 0.0);
    CHECK(ab[2].config.beta == 0.0);
    CHECK(ab[3].config.policy == PolicyKind::MaxWeight);
    const auto tb = preset_series("time-budget", base);
    CHECK(tb[0].label == "MW");
    try {
        preset_series("nope", base);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("delay-cdf") != std::string::npos);
    }
}

TEST_CASE("time-budget preset writes its table and a manifest") {
    const fs::path dir = fresh_dir("preset");
    PresetOptions opt;
    opt.overrides = {"horizon=2000", "replications=2", "calibration_samples=100"};
    opt.seed = 5;
    opt.out_dir = dir;
    run_preset("time-budget", opt);
    CHECK(fs::exists(dir / "budget_summary.csv"));
    CHECK(fs::exists(dir / "mw" / "rep_01" / "metrics.json"));
    const json man = json::parse(slurp(dir / "manifest.json"));
    CHECK(man["seeds"] == json::array({5, 6}));
    CHECK(man.contains("git_describe"));
    CHECK(man.contains("wall_time_s"));
    CHECK(man["schema_version"] == kSchemaVersion);
}

TEST_CASE("channel study") {
    const fs::path dir = fresh_dir("channel");
    const json j = run_channel_study(ExperimentConfig{}, dir, 20000);
    CHECK(j["coherence_time_s"].get<double>() > 3e-3);
    CHECK(j["coherence_time_s"].get<double>() < 30e-3);
    CHECK(slurp(dir / "outage.csv").find("h_th,p_out,ci_halfwidth") != std::string::npos);
    CHECK(slurp(dir / "channel_pdf.csv").find("bin_left,bin_right,density") != std::string::npos);
}
