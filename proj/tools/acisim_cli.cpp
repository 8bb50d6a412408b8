// Command-line front end: run a config, run a named preset, or merge results.
//
// Exit codes: 0 success, 2 configuration error, 3 runtime error.
// ACISIM_OUT_ROOT overrides the default output root (./results); it never
// changes any simulation parameter.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "acisim/config.hpp"
#include "acisim/presets.hpp"
#include "acisim/results.hpp"

namespace fs = std::filesystem;
using namespace acisim;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

fs::path output_root() {
    if (const char* env = std::getenv("ACISIM_OUT_ROOT"); env != nullptr && *env != '\0') return env;
    return "results";
}

fs::path resolve_out(const std::string& explicit_out, const std::string& default_name) {
    return explicit_out.empty() ? output_root() / default_name : fs::path(explicit_out);
}

void print_report(const MergedReport& report) {
    for (const auto& s : report.series) {
        std::cout << s.label << "\n";
        for (const auto& [metric, st] : s.stats) {
            std::cout << "  " << metric << " = " << st.mean << " +/- " << st.ci_halfwidth << " (n=" << st.n << ")\n";
        }
    }
}

int run_config(const std::string& file, const std::string& out, int threads) {
    const auto t0 = std::chrono::steady_clock::now();
    const ExperimentConfig cfg = parse_config(file);
    const fs::path dir = resolve_out(out, cfg.scenario);
    const std::string label = std::string(to_string(cfg.policy)) + "(" + std::string(to_string(cfg.switch_model)) + ")";
    const ExperimentResult res = run_experiment(cfg, label, dir, threads);
    std::vector<nlohmann::json> runs;
    for (const auto& r : res.replications) runs.push_back(r.metrics);
    const MergedReport report = merge_metrics(runs);
    write_text(dir / "summary.json", report.to_json().dump(2) + "\n");
    write_text(dir / "summary.csv", report.to_csv());
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(dir, "run " + file, cfg, res.seeds(), wall, threads);
    print_report(report);
    std::cout << "results written to " << dir.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Slotted single-server scheduling simulator with optical channels and switchover delays"};
    app.require_subcommand(1);

    std::string config_file, run_out;
    int run_threads = 0;
    auto* run = app.add_subcommand("run", "Run every replication of a config file");
    run->add_option("config", config_file, "Config file")->required();
    run->add_option("--out", run_out, "Output directory (default: <root>/<scenario>)");
    run->add_option("--threads", run_threads, "Worker threads (0 = hardware)")->check(CLI::NonNegativeNumber);

    std::string preset_name, preset_out;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    int preset_threads = 0;
    auto* preset = app.add_subcommand("preset", "Run a named experiment preset");
    preset->add_option("name", preset_name, "Preset name")->required();
    preset->add_option("--set", sets, "Override a config key (key=value); repeatable")->allow_extra_args(false);
    preset->add_option("--seed", seed, "Master seed");
    preset->add_option("--out", preset_out, "Output directory (default: <root>/<preset>)");
    preset->add_option("--threads", preset_threads, "Worker threads (0 = hardware)")->check(CLI::NonNegativeNumber);

    std::vector<std::string> report_dirs;
    std::string report_out;
    auto* report = app.add_subcommand("report", "Merge metrics.json files under one or more directories");
    report->add_option("dirs", report_dirs, "Result directories")->required();
    report->add_option("--out", report_out, "Write summary.json and summary.csv here");

    auto* list = app.add_subcommand("list-keys", "Print every accepted config key");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (*run) return run_config(config_file, run_out, run_threads);
        if (*preset) {
            PresetOptions opt;
            opt.overrides = sets;
            opt.seed = seed;
            opt.threads = preset_threads;
            opt.out_dir = resolve_out(preset_out, preset_name);
            preset_series(preset_name, ExperimentConfig{});  // reject unknown names before any work
            run_preset(preset_name, opt);
            std::cout << "preset " << preset_name << " written to " << opt.out_dir.string() << "\n";
            return 0;
        }
        if (*report) {
            std::vector<fs::path> dirs(report_dirs.begin(), report_dirs.end());
            const MergedReport merged = merge_reports(dirs);
            print_report(merged);
            if (!report_out.empty()) {
                fs::create_directories(report_out);
                write_text(fs::path(report_out) / "summary.json", merged.to_json().dump(2) + "\n");
                write_text(fs::path(report_out) / "summary.csv", merged.to_csv());
            }
            return 0;
        }
        if (*list) {
            for (const auto& k : config_keys()) std::cout << k << "\n";
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
