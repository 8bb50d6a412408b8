#include "acisim/results.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <numbers>
#include <sstream>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#ifndef ACISIM_GIT_DESCRIBE
#define ACISIM_GIT_DESCRIBE "unknown"
#endif

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

json optional_number(bool present, double v) { return present ? json(v) : json(nullptr); }

double t_quantile_975(double dof) {
    const boost::math::students_t dist(dof);
    return boost::math::quantile(dist, 0.975);
}

} // namespace

std::string git_describe() { return ACISIM_GIT_DESCRIBE; }

void write_text(const fs::path& file, const std::string& text) {
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + file.string() + "'");
    out << text;
    if (!out) throw std::runtime_error("write failed for '" + file.string() + "'");
}

json metrics_to_json(const MetricsLog& log, const ExperimentConfig& cfg, std::uint64_t seed, const std::string& label) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["label"] = label;
    j["scenario"] = cfg.scenario;
    j["policy"] = std::string(to_string(cfg.policy));
    j["switch_model"] = std::string(to_string(cfg.switch_model));
    j["seed"] = seed;
    j["horizon"] = log.horizon;
    j["warmup_slots"] = log.warmup;
    j["n_queues"] = log.n_queues;
    j["slot_len_s"] = log.slot_len;

    const TimeBudget b = time_budget(log);
    j["budget"] = {{"serving", b.serving}, {"switching", b.switching}, {"idle", b.idle}};
    j["phi_sw"] = phi_sw(log);

    const bool any = !log.delays.empty();
    DelayHistogram with_residual = log.delays;
    with_residual.merge(log.residual);
    j["delay"] = {
        {"packets", log.delays.count()},
        {"mean_slots", optional_number(any, any ? log.delays.mean() : 0.0)},
        {"q50_slots", optional_number(any, any ? log.delays.quantile(0.5) : 0.0)},
        {"q90_slots", optional_number(any, any ? log.delays.quantile(0.9) : 0.0)},
        {"q99_slots", optional_number(any, any ? log.delays.quantile(0.99) : 0.0)},
        {"max_slots", optional_number(any, any ? static_cast<double>(log.delays.max()) : 0.0)},
        {"residual_packets", log.residual.count()},
        {"mean_with_residual_slots",
         optional_number(!with_residual.empty(), with_residual.empty() ? 0.0 : with_residual.mean())},
    };

    if (log.total_backlog.size() >= 3) {
        const StabilityReport s = stability_probe(log);
        j["stability"] = {{"verdict", std::string(to_string(s.verdict))},
                          {"growing", s.verdict == StabilityVerdict::Growing ? 1 : 0},
                          {"max_last_bits", s.max_last},
                          {"max_middle_bits", s.max_middle},
                          {"slope_bits_per_slot", s.slope},
                          {"slope_lower_bits_per_slot", s.slope_lower}};
    } else {
        j["stability"] = nullptr;
    }

    Slot tau_sum = 0;
    std::int64_t failed = 0;
    for (const auto& e : log.switches) {
        tau_sum += e.tau;
        failed += e.failed ? 1 : 0;
    }
    Slot switching_slots = 0;
    for (SlotClass c : log.slot_class) switching_slots += c == SlotClass::Switching;
    j["switches"] = {
        {"count", log.switches.size()},
        {"failed", failed},
        {"unavailable_picks", log.unavailable_picks},
        {"mean_tau_slots", optional_number(!log.switches.empty(),
                                           log.switches.empty() ? 0.0
                                                                : static_cast<double>(tau_sum) /
                                                                      static_cast<double>(log.switches.size()))},
        {"blackout_truncated_slots", log.blackout_truncated},
        {"blackout_accounting_ok", switching_slots == tau_sum - log.blackout_truncated},
    };
    j["halts"] = {{"drained", log.halts.drained},
                  {"outage", log.halts.outage},
                  {"shortfall", log.halts.shortfall},
                  {"dominated", log.halts.dominated}};
    j["decision_epochs"] = log.decision_epochs;
    j["zeta"] = {{"value", log.zeta},
                 {"checks", log.zeta_checks},
                 {"violations", log.zeta_violations},
                 {"min_relative_margin", log.zeta_min_margin}};
    j["tau_max_slots"] = log.tau_max;
    j["ring_means_slots"] = log.ring_means;

    const auto lambdas = cfg.per_queue_arrival_rates();
    const ServiceShares shares = service_shares(log);
    Slot max_gap = 0;
    bool conserved = true;
    json per_queue = json::array();
    for (int i = 0; i < log.n_queues; ++i) {
        const auto k = static_cast<std::size_t>(i);
        const bool ok = log.arrived_bits[k] - log.departed_bits[k] == log.final_backlog[k];
        conserved = conserved && ok;
        max_gap = std::max(max_gap, log.max_service_gap[k]);
        const auto& qd = log.queue_delays[k];
        per_queue.push_back({{"queue", i},
                             {"arrival_rate_bps", lambdas[k]},
                             {"arrived_bits", log.arrived_bits[k]},
                             {"departed_bits", log.departed_bits[k]},
                             {"final_backlog_bits", log.final_backlog[k]},
                             {"conservation_ok", ok},
                             {"max_service_gap_slots", log.max_service_gap[k]},
                             {"mean_rate_bps", log.mean_rate_bps[k]},
                             {"outage_fraction", log.outage_fraction[k]},
                             {"alpha", shares.alpha[k]},
                             {"phi", shares.phi[k]},
                             {"mean_delay_slots", optional_number(!qd.empty(), qd.empty() ? 0.0 : qd.mean())}});
    }
    j["per_queue"] = per_queue;
    j["conservation_ok"] = conserved;
    j["max_service_gap_slots"] = max_gap;

    if (std::all_of(log.mean_rate_bps.begin(), log.mean_rate_bps.end(), [](double r) { return r > 0.0; })) {
        const Feasibility f = feasibility_check(lambdas, log.mean_rate_bps, phi_sw(log));
        j["feasibility"] = {{"inside", f.inside}, {"load", f.load}, {"margin", f.margin}};
    } else {
        j["feasibility"] = nullptr;
    }
    return j;
}

void write_run(const fs::path& dir, const MetricsLog& log, const ExperimentConfig& cfg, std::uint64_t seed,
               const std::string& label) {
    fs::create_directories(dir);
    write_text(dir / "metrics.json", metrics_to_json(log, cfg, seed, label).dump(2) + "\n");

    {
        std::string s = schema_line() + "delay_slots,count,cdf\n";
        const auto& counts = log.delays.counts();
        std::int64_t cum = 0;
        for (std::size_t d = 0; d < counts.size(); ++d) {
            if (counts[d] == 0) continue;
            cum += counts[d];
            s += std::to_string(d) + "," + std::to_string(counts[d]) + "," +
                 num(static_cast<double>(cum) / static_cast<double>(log.delays.count())) + "\n";
        }
        write_text(dir / "delays.csv", s);
    }
    {
        const TimeBudget b = time_budget(log);
        const auto total = static_cast<Slot>(log.slot_class.size());
        const double window = static_cast<double>(total - std::min(log.warmup, total));
        const auto slots = [&](double f) { return std::to_string(std::llround(f * window)); };
        std::string s = schema_line() + "class,slots,fraction\n";
        s += "serving," + slots(b.serving) + "," + num(b.serving) + "\n";
        s += "switching," + slots(b.switching) + "," + num(b.switching) + "\n";
        s += "idle," + slots(b.idle) + "," + num(b.idle) + "\n";
        write_text(dir / "budget.csv", s);
    }
    {
        std::string s = schema_line() + "slot,from,to,theta_deg,K,tau_slots,model,failed\n";
        const std::string model(to_string(cfg.switch_model));
        for (const auto& e : log.switches) {
            s += std::to_string(e.slot) + "," + std::to_string(e.from) + "," + std::to_string(e.to) + "," +
                 num(e.theta_deg) + "," + std::to_string(e.attempts) + "," + std::to_string(e.tau) + "," + model + "," +
                 (e.failed ? "1" : "0") + "\n";
        }
        write_text(dir / "switches.csv", s);
    }
    {
        std::string s = schema_line() + "slot";
        for (int i = 0; i < log.n_queues; ++i) s += ",q" + std::to_string(i) + "_bits";
        s += ",total_bits\n";
        for (std::size_t r = 0; r < log.trace_slots.size(); ++r) {
            s += std::to_string(log.trace_slots[r]);
            Bits total = 0;
            for (Bits q : log.trace_backlog[r]) {
                s += "," + std::to_string(q);
                total += q;
            }
            s += "," + std::to_string(total) + "\n";
        }
        write_text(dir / "backlog_trace.csv", s);
    }
    if (cfg.audit) {
        std::string s = schema_line() + "slot,current,action,chosen";
        for (int i = 0; i < log.n_queues; ++i) s += ",score_" + std::to_string(i);
        s += ",zeta,chosen_unscaled,best_unscaled,margin,ok\n";
        for (const auto& a : log.audit) {
            s += std::to_string(a.slot) + "," + std::to_string(a.current) + "," + a.action + "," +
                 std::to_string(a.chosen);
            for (int i = 0; i < log.n_queues; ++i) {
                const auto k = static_cast<std::size_t>(i);
                s += "," + num(k < a.scores.size() ? a.scores[k] : 0.0);
            }
            s += "," + num(a.zeta.zeta) + "," + num(a.zeta.chosen_unscaled) + "," + num(a.zeta.best_unscaled) + "," +
                 num(a.zeta.margin) + "," + (a.zeta.ok ? "1" : "0") + "\n";
        }
        write_text(dir / "audit.csv", s);
    }
}

void write_mobility_trace(const fs::path& file, const ExperimentConfig& cfg, const MetricsLog& log, int stride) {
    if (stride < 1) throw std::invalid_argument("mobility trace stride must be >= 1");
    const Formation f = cfg.formation();
    std::string s = schema_line() + "slot,slave,range_m,theta_to_current_deg\n";
    for (Slot t = 0; t < static_cast<Slot>(log.slot_queue.size()); t += stride) {
        const GeometrySnapshot geo(f, static_cast<double>(t) * cfg.slot_len);
        const int cur = log.slot_queue[static_cast<std::size_t>(t)];
        for (int i = 0; i < geo.size(); ++i) {
            s += std::to_string(t) + "," + std::to_string(i) + "," + num(geo.range(i)) + ",";
            if (cur >= 0) s += num(geo.theta(cur, i) * 180.0 / std::numbers::pi);
            s += "\n";
        }
    }
    write_text(file, s);
}

DelayHistogram ExperimentResult::pooled_delays() const {
    DelayHistogram h;
    for (const auto& r : replications) h.merge(r.delays);
    return h;
}

std::vector<std::uint64_t> ExperimentResult::seeds() const {
    std::vector<std::uint64_t> out;
    for (const auto& r : replications) out.push_back(r.seed);
    return out;
}

std::uint64_t replication_seed(const ExperimentConfig& cfg, int r) { return cfg.seed + static_cast<std::uint64_t>(r); }

ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::string& label,
                                const std::optional<fs::path>& out_dir, int threads) {
    const EngineSetup setup(cfg);
    const int reps = cfg.replications;
    ExperimentResult result;
    result.label = label;
    result.config = cfg;
    result.replications.resize(static_cast<std::size_t>(reps));
    if (out_dir) {
        fs::create_directories(*out_dir);
        write_text(*out_dir / "config.ini", emit_config(cfg));
    }

    int workers = threads > 0 ? threads : static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
    workers = std::clamp(workers, 1, reps);
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    const auto work = [&](int w) {
        try {
            for (int r = next++; r < reps; r = next++) {
                const std::uint64_t seed = replication_seed(cfg, r);
                Simulator sim(setup, seed);
                const MetricsLog log = sim.run();
                auto& rep = result.replications[static_cast<std::size_t>(r)];
                rep.seed = seed;
                rep.metrics = metrics_to_json(log, cfg, seed, label);
                rep.delays = log.delays;
                rep.residual = log.residual;
                if (out_dir) {
                    char name[32];
                    std::snprintf(name, sizeof name, "rep_%02d", r);
                    write_run(*out_dir / name, log, cfg, seed, label);
                }
            }
        } catch (...) {
            errors[static_cast<std::size_t>(w)] = std::current_exception();
            next = reps;
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return result;
}

void write_manifest(const fs::path& dir, const std::string& command, const ExperimentConfig& cfg,
                    const std::vector<std::uint64_t>& seeds, double wall_time_s, int threads, const json& extra) {
    fs::create_directories(dir);
    write_text(dir / "config.ini", emit_config(cfg));
    json m;
    m["schema_version"] = kSchemaVersion;
    m["command"] = command;
    m["git_describe"] = git_describe();
    m["seeds"] = seeds;
    m["wall_time_s"] = wall_time_s;
    m["threads"] = threads;
    m["config_file"] = "config.ini";
    m["config"] = emit_config(cfg);
    m["extra"] = extra;
    write_text(dir / "manifest.json", m.dump(2) + "\n");
}

MetricStat summarize(std::span<const double> xs) {
    MetricStat s;
    s.n = static_cast<int>(xs.size());
    if (xs.empty()) return s;
    double sum = 0.0;
    for (double x : xs) sum += x;
    s.mean = sum / static_cast<double>(s.n);
    if (s.n > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
        s.ci_halfwidth = t_quantile_975(static_cast<double>(s.n - 1)) * s.sd / std::sqrt(static_cast<double>(s.n));
    }
    return s;
}

const std::vector<std::string>& summary_metrics() {
    static const std::vector<std::string> keys = {
        "/budget/serving",      "/budget/switching",    "/budget/idle",
        "/phi_sw",              "/delay/mean_slots",    "/delay/q50_slots",
        "/delay/q90_slots",     "/delay/q99_slots",     "/delay/mean_with_residual_slots",
        "/switches/count",      "/switches/mean_tau_slots", "/stability/growing",
        "/max_service_gap_slots", "/zeta/violations",
    };
    return keys;
}

const SeriesSummary& MergedReport::at(const std::string& label) const {
    for (const auto& s : series) {
        if (s.label == label) return s;
    }
    throw std::out_of_range("no series labelled '" + label + "'");
}

json MergedReport::to_json() const {
    json j;
    j["schema_version"] = schema_version;
    json arr = json::array();
    for (const auto& s : series) {
        json m = json::object();
        int n = 0;
        for (const auto& [k, st] : s.stats) {
            m[k] = {{"n", st.n}, {"mean", st.mean}, {"sd", st.sd}, {"ci_halfwidth", st.ci_halfwidth}};
            n = std::max(n, st.n);
        }
        arr.push_back({{"label", s.label}, {"replications", n}, {"metrics", m}});
    }
    j["series"] = arr;
    json d = json::array();
    for (const auto& x : deltas) {
        d.push_back({{"a", x.a}, {"b", x.b}, {"metric", x.metric}, {"delta", x.delta}, {"ci_halfwidth", x.ci_halfwidth}});
    }
    j["deltas"] = d;
    return j;
}

std::string MergedReport::to_csv() const {
    std::string s = schema_line() + "label,metric,n,mean,sd,ci_halfwidth\n";
    for (const auto& series_ : series) {
        for (const auto& [k, st] : series_.stats) {
            s += series_.label + "," + k + "," + std::to_string(st.n) + "," + num(st.mean) + "," + num(st.sd) + "," +
                 num(st.ci_halfwidth) + "\n";
        }
    }
    return s;
}

MergedReport merge_metrics(const std::vector<json>& runs) {
    if (runs.empty()) throw std::invalid_argument("merge needs at least one run");
    std::optional<int> version;
    for (const auto& r : runs) {
        if (!r.contains("schema_version") || !r["schema_version"].is_number_integer()) {
            throw SchemaError("run without an integer schema_version");
        }
        const int v = r["schema_version"].get<int>();
        if (version && *version != v) {
            throw SchemaError("mixed schema versions: " + std::to_string(*version) + " and " + std::to_string(v));
        }
        version = v;
    }
    if (*version != kSchemaVersion) {
        throw SchemaError("schema version " + std::to_string(*version) + " is not supported (expected " +
                          std::to_string(kSchemaVersion) + ")");
    }

    MergedReport report;
    report.schema_version = *version;
    std::vector<std::string> labels;
    for (const auto& r : runs) {
        const std::string label = r.value("label", std::string("unlabelled"));
        if (std::find(labels.begin(), labels.end(), label) == labels.end()) labels.push_back(label);
    }
    std::map<std::string, std::map<std::string, std::vector<double>>> values;
    for (const auto& label : labels) {
        SeriesSummary s;
        s.label = label;
        for (const auto& key : summary_metrics()) {
            std::vector<double> xs;
            for (const auto& r : runs) {
                if (r.value("label", std::string("unlabelled")) != label) continue;
                const json::json_pointer ptr(key);
                if (r.contains(ptr) && r[ptr].is_number()) xs.push_back(r[ptr].get<double>());
            }
            if (xs.empty()) continue;
            s.stats[key] = summarize(xs);
            values[label][key] = std::move(xs);
        }
        report.series.push_back(std::move(s));
    }

    static const std::vector<std::string> compared = {"/delay/mean_slots", "/delay/mean_with_residual_slots",
                                                      "/budget/serving"};
    for (std::size_t a = 0; a < report.series.size(); ++a) {
        for (std::size_t b = a + 1; b < report.series.size(); ++b) {
            const auto& sa = report.series[a];
            const auto& sb = report.series[b];
            for (const auto& key : compared) {
                if (!sa.stats.count(key) || !sb.stats.count(key)) continue;
                const MetricStat& x = sa.stats.at(key);
                const MetricStat& y = sb.stats.at(key);
                MetricDelta d{sa.label, sb.label, key, x.mean - y.mean, 0.0};
                if (x.n > 1 && y.n > 1) {
                    const double vx = x.sd * x.sd / x.n;
                    const double vy = y.sd * y.sd / y.n;
                    const double se = std::sqrt(vx + vy);
                    if (se > 0.0) {
                        const double dof = (vx + vy) * (vx + vy) / (vx * vx / (x.n - 1) + vy * vy / (y.n - 1));
                        d.ci_halfwidth = t_quantile_975(dof) * se;
                    }
                }
                report.deltas.push_back(d);
            }
        }
    }
    return report;
}

MergedReport merge_reports(const std::vector<fs::path>& dirs) {
    std::vector<fs::path> files;
    for (const auto& dir : dirs) {
        if (!fs::is_directory(dir)) throw std::runtime_error("not a results directory: '" + dir.string() + "'");
        std::vector<fs::path> found;
        for (const auto& e : fs::recursive_directory_iterator(dir)) {
            if (e.is_regular_file() && e.path().filename() == "metrics.json") found.push_back(e.path());
        }
        if (found.empty()) throw std::runtime_error("no metrics.json under '" + dir.string() + "'");
        std::sort(found.begin(), found.end());
        files.insert(files.end(), found.begin(), found.end());
    }
    std::vector<json> runs;
    for (const auto& f : files) {
        std::ifstream in(f);
        try {
            runs.push_back(json::parse(in));
        } catch (const json::parse_error& e) {
            throw std::runtime_error("cannot parse '" + f.string() + "': " + e.what());
        }
    }
    return merge_metrics(runs);
}

} // namespace acisim
