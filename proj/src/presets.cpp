#include "acisim/presets.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <numeric>

namespace acisim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double v) {
    char buf[64];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

std::string schema_line() { return "# schema_version: " + std::to_string(kSchemaVersion) + "\n"; }

PresetSeries series(const ExperimentConfig& base, std::string label, std::string dir, PolicyKind policy,
                    SwitchModelKind model) {
    PresetSeries s{std::move(label), std::move(dir), base};
    s.config.policy = policy;
    s.config.switch_model = model;
    s.config.scenario = s.dir;
    return s;
}

const std::vector<double>& reported_quantiles() {
    static const std::vector<double> q = {0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99};
    return q;
}

} // namespace

std::vector<std::string> preset_names() { return {"channel-pdf", "switching-trace", "delay-cdf", "time-budget", "ablation"}; }

std::vector<PresetSeries> preset_series(const std::string& name, const ExperimentConfig& base) {
    using P = PolicyKind;
    using M = SwitchModelKind;
    if (name == "channel-pdf") return {};
    if (name == "switching-trace") {
        auto s = series(base, "ACI(FSO)", "aci_fso", P::ACI, M::FSO);
        s.config.replications = 1;
        return {s};
    }
    if (name == "delay-cdf") {
        return {series(base, "ACI(IID)", "aci_iid", P::ACI, M::IID),
                series(base, "ACI(Dependent)", "aci_dependent", P::ACI, M::Dependent),
                series(base, "ACI(FSO)", "aci_fso", P::ACI, M::FSO),
                series(base, "ACI-A", "aci_a", P::ACIAge, M::FSO),
                series(base, "ACI-PA", "aci_pa", P::ACIPureAge, M::FSO)};
    }
    if (name == "time-budget") {
        return {series(base, "MW", "mw", P::MaxWeight, M::FSO),
                series(base, "ACI(Dependent)", "aci_dependent", P::ACI, M::Dependent),
                series(base, "ACI(FSO)", "aci_fso", P::ACI, M::FSO),
                series(base, "ACI(IID)", "aci_iid", P::ACI, M::IID)};
    }
    if (name == "ablation") {
        auto no_affinity = series(base, "ACI gamma=0", "aci_no_affinity", P::ACI, M::FSO);
        no_affinity.config.gamma = 0.0;
        auto no_penalty = series(base, "ACI beta=0", "aci_no_penalty", P::ACI, M::FSO);
        no_penalty.config.beta = 0.0;
        return {series(base, "ACI", "aci_full", P::ACI, M::FSO), no_affinity, no_penalty,
                series(base, "MW", "mw", P::MaxWeight, M::FSO)};
    }
    std::string names;
    for (const auto& n : preset_names()) names += (names.empty() ? "" : ", ") + n;
    throw ConfigError("preset", "unknown preset '" + name + "'; available: " + names);
}

ExperimentConfig preset_base(const PresetOptions& opt) {
    ExperimentConfig cfg;
    for (const auto& o : opt.overrides) apply_override(cfg, o);
    if (opt.seed) cfg.seed = *opt.seed;
    cfg.validate();
    return cfg;
}

json run_channel_study(const ExperimentConfig& cfg, const fs::path& out_dir, std::size_t samples) {
    LinkParams link = cfg.link();
    link.hop2.distance_m = cfg.hex_radius;
    const RadioParams radio = cfg.radio();
    std::vector<double> gains = sample_gains(link, samples, cfg.seed);
    std::vector<double> sorted = gains;
    std::sort(sorted.begin(), sorted.end());

    const double hi = sorted[static_cast<std::size_t>(0.999 * static_cast<double>(sorted.size() - 1))];
    const auto pdf = gain_pdf(gains, 0.0, hi > 0.0 ? hi : 1.0, 100);
    std::string s = schema_line() + "bin_left,bin_right,density\n";
    for (const auto& b : pdf) s += num(b.left) + "," + num(b.right) + "," + num(b.density) + "\n";
    write_text(out_dir / "channel_pdf.csv", s);

    // Thresholds implied by transmit powers from -10 to 30 dBm.
    std::vector<double> thresholds;
    for (int dbm = -10; dbm <= 30; ++dbm) {
        thresholds.push_back(gain_threshold(radio.min_snr, radio.noise_std, radio.responsivity, dbm_to_watts(dbm)));
    }
    std::sort(thresholds.begin(), thresholds.end());
    const auto curve = outage_curve(gains, thresholds);
    s = schema_line() + "h_th,p_out,ci_halfwidth\n";
    for (const auto& o : curve) s += num(o.h_th) + "," + num(o.p_out) + "," + num(o.ci_halfwidth) + "\n";
    write_text(out_dir / "outage.csv", s);

    const double mean = std::accumulate(gains.begin(), gains.end(), 0.0) / static_cast<double>(gains.size());
    const double below = static_cast<double>(std::lower_bound(sorted.begin(), sorted.end(), mean) - sorted.begin()) /
                         static_cast<double>(sorted.size());
    const double h_th = gain_threshold(radio.min_snr, radio.noise_std, radio.responsivity, radio.tx_power_w);
    const auto at_pt = outage_curve(gains, std::vector<double>{h_th});
    const double t0 =
        coherence_time(hv_cn2_profile(cfg.cn2_ground), bufton_wind_profile(), cfg.wavelength, 0.0, cfg.z_master);

    json j;
    j["schema_version"] = kSchemaVersion;
    j["label"] = "channel-pdf";
    j["seed"] = cfg.seed;
    j["samples"] = samples;
    j["hop2_range_m"] = link.hop2.distance_m;
    j["mean_gain"] = mean;
    j["fraction_below_mean"] = below;
    j["tx_power_dbm"] = cfg.tx_power_dbm;
    j["h_th"] = h_th;
    j["p_out"] = at_pt.front().p_out;
    j["p_out_ci_halfwidth"] = at_pt.front().ci_halfwidth;
    j["coherence_time_s"] = t0;
    j["slot_len_s"] = cfg.slot_len;
    write_text(out_dir / "metrics.json", j.dump(2) + "\n");
    return j;
}

json run_preset(const std::string& name, const PresetOptions& opt) {
    const auto t0 = std::chrono::steady_clock::now();
    const ExperimentConfig base = preset_base(opt);
    const auto all = preset_series(name, base);  // validates the name
    const fs::path out = opt.out_dir;
    fs::create_directories(out);

    json summary;
    std::vector<std::uint64_t> seeds;
    json extra = {{"preset", name}, {"overrides", opt.overrides}};

    if (name == "channel-pdf") {
        summary = run_channel_study(base, out);
        seeds.push_back(base.seed);
    } else if (name == "switching-trace") {
        const auto& s = all.front();
        const EngineSetup setup(s.config);
        Simulator sim(setup, s.config.seed);
        const MetricsLog log = sim.run();
        write_run(out, log, s.config, s.config.seed, s.label);
        write_mobility_trace(out / "mobility_trace.csv", s.config, log, s.config.trace_stride);
        summary = metrics_to_json(log, s.config, s.config.seed, s.label);
        seeds.push_back(s.config.seed);
    } else {
        std::vector<json> runs;
        std::vector<ExperimentResult> results;
        json labels = json::array();
        for (const auto& s : all) {
            results.push_back(run_experiment(s.config, s.label, out / s.dir, opt.threads));
            for (const auto& r : results.back().replications) runs.push_back(r.metrics);
            labels.push_back({{"label", s.label}, {"dir", s.dir}});
        }
        seeds = results.front().seeds();
        extra["series"] = labels;
        const MergedReport report = merge_metrics(runs);
        summary = report.to_json();
        write_text(out / "summary.json", summary.dump(2) + "\n");
        write_text(out / "summary.csv", report.to_csv());

        if (name == "delay-cdf") {
            std::string cdf = schema_line() + "series,delay_slots,cdf\n";
            std::string qs = schema_line() + "series,q,delay_slots\n";
            for (const auto& r : results) {
                const DelayHistogram h = r.pooled_delays();
                if (h.empty()) continue;
                const auto& counts = h.counts();
                std::int64_t cum = 0;
                for (std::size_t d = 0; d < counts.size(); ++d) {
                    if (counts[d] == 0) continue;
                    cum += counts[d];
                    cdf += r.label + "," + std::to_string(d) + "," +
                           num(static_cast<double>(cum) / static_cast<double>(h.count())) + "\n";
                }
                for (const auto& row : delay_cdf(h, reported_quantiles())) {
                    qs += r.label + "," + num(row.q) + "," + num(row.delay_slots) + "\n";
                }
            }
            write_text(out / "delay_cdf.csv", cdf);
            write_text(out / "delay_quantiles.csv", qs);
        } else if (name == "time-budget") {
            std::string t = schema_line() + "series,serving,serving_ci,switching,switching_ci,idle,idle_ci\n";
            for (const auto& s : report.series) {
                const auto& sv = s.stats.at("/budget/serving");
                const auto& sw = s.stats.at("/budget/switching");
                const auto& id = s.stats.at("/budget/idle");
                t += s.label + "," + num(sv.mean) + "," + num(sv.ci_halfwidth) + "," + num(sw.mean) + "," +
                     num(sw.ci_halfwidth) + "," + num(id.mean) + "," + num(id.ci_halfwidth) + "\n";
            }
            write_text(out / "budget_summary.csv", t);
        } else if (name == "ablation") {
            std::string t = schema_line() +
                            "series,mean_delay_slots,ci_halfwidth,mean_delay_with_residual_slots,residual_ci_halfwidth\n";
            for (const auto& s : report.series) {
                const auto get = [&](const std::string& k) {
                    const auto it = s.stats.find(k);
                    return it == s.stats.end() ? std::make_pair(std::string(), std::string())
                                               : std::make_pair(num(it->second.mean), num(it->second.ci_halfwidth));
                };
                const auto d = get("/delay/mean_slots");
                const auto r = get("/delay/mean_with_residual_slots");
                t += s.label + "," + d.first + "," + d.second + "," + r.first + "," + r.second + "\n";
            }
            write_text(out / "ablation.csv", t);
        }
    }

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(out, "preset " + name, base, seeds, wall, opt.threads, extra);
    return summary;
}

} // namespace acisim
