// Acceptance checks at the nominal operating point: 10^5-slot horizon, 10 seeds.
// Prints one PASS/FAIL line per criterion and exits non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "acisim/engine.hpp"
#include "acisim/fso_channel.hpp"
#include "acisim/presets.hpp"
#include "acisim/results.hpp"
#include "acisim/switchover.hpp"

using namespace acisim;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::int64_t kHorizon = 100000;
constexpr int kSeeds = 10;

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
    std::printf("[%s] criterion %d: %s -- %s\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

ExperimentConfig nominal(PolicyKind p, SwitchModelKind m) {
    ExperimentConfig c;
    c.horizon = kHorizon;
    c.replications = kSeeds;
    c.policy = p;
    c.switch_model = m;
    return c;
}

struct Series {
    ExperimentResult result;
    double wall_s = 0.0;

    std::vector<double> metric(const std::string& pointer) const {
        std::vector<double> v;
        for (const auto& r : result.replications) v.push_back(r.metrics.at(json::json_pointer(pointer)).get<double>());
        return v;
    }
    MetricStat stat(const std::string& pointer) const {
        const auto v = metric(pointer);
        return summarize(v);
    }
    bool all(const std::string& pointer) const {
        return std::all_of(result.replications.begin(), result.replications.end(),
                           [&](const auto& r) { return r.metrics.at(json::json_pointer(pointer)).template get<bool>(); });
    }
};

Series run_series(const ExperimentConfig& cfg, const std::string& label) {
    const auto t0 = std::chrono::steady_clock::now();
    Series s{run_experiment(cfg, label, std::nullopt, 0), 0.0};
    s.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return s;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Two queues, the lighter one holding the server: find the first upward crossing
/// of the switching threshold by the heavier queue's backlog (below at one
/// attached slot, above at the next) and return (crossing slot, slots until the
/// switch to it was decided); (-1, -1) if no crossing happened.
std::pair<Slot, Slot> threshold_crossing(std::uint64_t seed) {
    ExperimentConfig c;
    c.n_slaves = 2;
    c.horizon = 5000;
    // Small packets keep the light queue's per-slot backlog nearly deterministic,
    // so the threshold moves smoothly and the crossing time is well defined.
    c.arrival_weights = {0.01, 1.0};
    c.packet_size = 100;
    c.switch_model = SwitchModelKind::FSO;
    const EngineSetup setup(c);
    Simulator sim(setup, seed);
    SwitchModel forecast(setup.switch_cfg, 2, c.slot_len, 0);
    Slot crossed = -1;
    bool below = false;
    std::vector<double> rate_sum(2, 0.0);  // running means estimate E[R_i]
    while (!sim.done()) {
        const Slot t = sim.slot();
        const bool attached = sim.current() && *sim.current() == 0 && sim.blackout_remaining() == 0;
        const Bits q0 = sim.queues()[0].backlog();
        const Bits q1 = sim.queues()[1].backlog();
        sim.step();
        for (int i = 0; i < 2; ++i) rate_sum[i] += sim.rates()[i];
        if (crossed >= 0) continue;
        if (!attached) {
            below = false;
            continue;
        }
        const GeometrySnapshot geo(setup.formation, static_cast<double>(t) * c.slot_len);
        const double theta = geo.theta(0, 1);
        const auto tau = forecast.expected_tau(0, 1, SwitchContext{theta, geo.range(1)});
        if (!tau) continue;
        const double chi = 1.0 - theta / std::numbers::pi;
        const double f_ii = 1.0 + c.gamma;
        const double f_ij = (1.0 + c.gamma * chi) / (1.0 + c.beta * *tau);
        const double th =
            starvation_threshold(static_cast<double>(q0), rate_sum[0], rate_sum[1], f_ii, f_ij, *tau, c.frame_len);
        if (static_cast<double>(q1) <= th) below = true;
        else if (below) crossed = t;
    }
    if (crossed < 0) return {-1, -1};
    for (const auto& e : sim.log().switches) {
        if (e.to == 1 && e.slot >= crossed) return {crossed, e.slot - crossed};
    }
    return {crossed, std::numeric_limits<Slot>::max()};
}

} // namespace

int main(int argc, char** argv) {
    const auto t_start = std::chrono::steady_clock::now();
    using P = PolicyKind;
    using M = SwitchModelKind;

    // Series shared by several criteria, run on first use.
    std::map<std::string, std::function<ExperimentConfig()>> recipes = {
        {"MW", [] { return nominal(P::MaxWeight, M::FSO); }},
        {"ACI(IID)", [] { return nominal(P::ACI, M::IID); }},
        {"ACI(Dependent)", [] { return nominal(P::ACI, M::Dependent); }},
        {"ACI(FSO)", [] { return nominal(P::ACI, M::FSO); }},
        {"ACI-A", [] { return nominal(P::ACIAge, M::FSO); }},
        {"ACI-PA", [] { return nominal(P::ACIPureAge, M::FSO); }},
        {"ACI gamma=0", [] { auto c = nominal(P::ACI, M::FSO); c.gamma = 0.0; return c; }},
        {"ACI beta=0", [] { auto c = nominal(P::ACI, M::FSO); c.beta = 0.0; return c; }},
    };
    std::map<std::string, Series> cache;
    struct Lazy {
        std::map<std::string, std::function<ExperimentConfig()>>& recipes;
        std::map<std::string, Series>& cache;
        const Series& at(const std::string& k) {
            auto it = cache.find(k);
            if (it == cache.end()) it = cache.emplace(k, run_series(recipes.at(k)(), k)).first;
            return it->second;
        }
    } s{recipes, cache};

    std::vector<int> only;
    for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
    const auto wanted = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };

    // 1. Time budget.
    if (wanted(1)) {
        const double mw = s.at("MW").stat("/budget/serving").mean;
        const double dep = s.at("ACI(Dependent)").stat("/budget/serving").mean;
        const double fso = s.at("ACI(FSO)").stat("/budget/serving").mean;
        const double wall = s.at("MW").wall_s + s.at("ACI(Dependent)").wall_s + s.at("ACI(FSO)").wall_s +
                            s.at("ACI(IID)").wall_s;
        const bool ok = mw <= 0.05 && dep >= 0.80 && fso >= 0.65 && fso <= 0.90 && wall < 600.0;
        report(1, ok, "serving fractions MW <= 0.05, ACI(Dependent) >= 0.80, ACI(FSO) in [0.65, 0.90]; preset < 10 min",
               "MW " + fmt("%.4f", mw) + ", ACI(Dependent) " + fmt("%.4f", dep) + ", ACI(FSO) " + fmt("%.4f", fso) +
                   ", time-budget runs " + fmt("%.1f", wall) + " s");
    }

    // 2. Delay CDF structure (pooled over seeds).
    if (wanted(2)) {
        const auto q = [&](const std::string& k, double p) { return s.at(k).result.pooled_delays().quantile(p); };
        const double med_fso = q("ACI(FSO)", 0.5), med_dep = q("ACI(Dependent)", 0.5);
        const double q_iid = q("ACI(IID)", 0.99), q_dep = q("ACI(Dependent)", 0.99), q_fso = q("ACI(FSO)", 0.99);
        const double q_a = q("ACI-A", 0.99), q_pa = q("ACI-PA", 0.99);
        const double rel = std::abs(med_fso - med_dep) / std::max(med_fso, med_dep);
        const bool a = rel <= 0.15;
        const bool b = q_iid < q_dep && q_iid < q_fso;
        const bool c = q_fso >= q_dep;
        const bool d = q_a <= q_pa;
        report(2, a && b && c && d, "delay CDF structure (a) medians within 15% (b) IID lightest tail (c) FSO q99 >= Dependent q99 (d) ACI-A q99 <= ACI-PA q99",
               std::string("(a) ") + (a ? "ok" : "no") + " medians FSO " + fmt("%.1f", med_fso) + " / Dep " +
                   fmt("%.1f", med_dep) + "; (b) " + (b ? "ok" : "no") + " q99 IID " + fmt("%.1f", q_iid) +
                   "; (c) " + (c ? "ok" : "no") + " q99 FSO " + fmt("%.1f", q_fso) + " / Dep " + fmt("%.1f", q_dep) +
                   "; (d) " + (d ? "ok" : "no") + " q99 ACI-A " + fmt("%.1f", q_a) + " / ACI-PA " + fmt("%.1f", q_pa));
    }

    // 3. Ablation: mean delay including packets still queued at the horizon.
    if (wanted(3)) {
        const std::string key = "/delay/mean_with_residual_slots";
        const MetricStat full = s.at("ACI(FSO)").stat(key);
        const MetricStat g0 = s.at("ACI gamma=0").stat(key);
        const MetricStat b0 = s.at("ACI beta=0").stat(key);
        const MetricStat mw = s.at("MW").stat(key);
        const auto separated = [](const MetricStat& lo, const MetricStat& hi) {
            return lo.mean + lo.ci_halfwidth < hi.mean - hi.ci_halfwidth;
        };
        const bool ok = separated(full, g0) && separated(full, b0) && full.mean < mw.mean && g0.mean < mw.mean &&
                        b0.mean < mw.mean;
        const auto show = [](const MetricStat& m) { return fmt("%.2f", m.mean) + " +/- " + fmt("%.2f", m.ci_halfwidth); };
        report(3, ok, "ablation: full ACI below gamma=0 and beta=0 with disjoint 95% CIs; all below MW",
               "full " + show(full) + ", gamma=0 " + show(g0) + ", beta=0 " + show(b0) + ", MW " + show(mw) +
                   " slots");
    }

    // 4. Coherence time.
    if (wanted(4)) {
        const ExperimentConfig c;
        const double t0 = coherence_time(hv_cn2_profile(c.cn2_ground), bufton_wind_profile(), c.wavelength, 0.0,
                                         c.z_master);
        report(4, t0 >= 3e-3 && t0 <= 30e-3, "coherence time in [3, 30] ms", fmt("%.2f", t0 * 1e3) + " ms");
    }

    // 5. Conservation, per queue, on every run above.
    if (wanted(5)) {
        bool ok = true;
        int runs = 0;
        for (const auto& [name, recipe] : recipes) {
            const Series& series = s.at(name);
            ok = ok && series.all("/conservation_ok");
            for (const auto& r : series.result.replications) {
                for (const auto& q : r.metrics["per_queue"]) {
                    ok = ok && q["arrived_bits"].get<std::int64_t>() ==
                                   q["departed_bits"].get<std::int64_t>() + q["final_backlog_bits"].get<std::int64_t>();
                }
                ++runs;
            }
        }
        report(5, ok, "arrivals = departures + final backlog per queue", std::to_string(runs) + " runs checked");
    }

    // 6. Turbulence mean and CRN outage monotonicity.
    if (wanted(6)) {
        bool mean_ok = true;
        std::string detail;
        for (double v : {0.01, 0.1, 0.5}) {
            StreamRng rng(2024, StreamPurpose::MonteCarlo, 0, static_cast<std::uint64_t>(v * 1e4));
            const int n = 1000000;
            double sum = 0.0, sum2 = 0.0;
            for (int i = 0; i < n; ++i) {
                const double h = turbulence_sample(v, rng);
                sum += h;
                sum2 += h * h;
            }
            const double mean = sum / n;
            const double se = std::sqrt((sum2 / n - mean * mean) / n);
            const double z = (mean - 1.0) / se;
            mean_ok = mean_ok && std::abs(z) <= 3.0;
            detail += "V=" + fmt("%g", v) + " z=" + fmt("%+.2f", z) + "; ";
        }
        const ExperimentConfig c;
        LinkParams link = c.link();
        link.hop2.distance_m = c.hex_radius;
        const auto gains = sample_gains(link, 200000, 7);
        std::vector<double> th;
        for (int dbm = -10; dbm <= 30; ++dbm) th.push_back(gain_threshold(c.radio().min_snr, c.noise_std, c.responsivity, dbm_to_watts(dbm)));
        std::sort(th.begin(), th.end());
        const auto curve = outage_curve(gains, th);
        bool mono = true;
        for (std::size_t i = 1; i < curve.size(); ++i) mono = mono && curve[i].p_out >= curve[i - 1].p_out;
        report(6, mean_ok && mono, "E[h_a] = 1 within 3 SE at V in {0.01, 0.1, 0.5}; outage monotone under CRN",
               detail + "monotone over " + std::to_string(curve.size()) + " thresholds: " + (mono ? "yes" : "no"));
    }

    // 7. Zeta audit with audit mode on.
    if (wanted(7)) {
        auto c = nominal(P::ACI, M::FSO);
        c.audit = true;
        c.replications = 1;
        const MetricsLog log = run_simulation(c, c.seed);
        std::int64_t bad = log.zeta_violations, checks = log.zeta_checks;
        for (const char* k : {"ACI(FSO)", "ACI(IID)", "ACI(Dependent)", "ACI-A"}) {
            for (const auto& r : s.at(k).result.replications) {
                bad += r.metrics["zeta"]["violations"].get<std::int64_t>();
                checks += r.metrics["zeta"]["checks"].get<std::int64_t>();
            }
        }
        std::int64_t audited = 0;
        for (const auto& a : log.audit) audited += a.zeta.ok ? 0 : 1;
        report(7, bad == 0 && audited == 0 && checks > 0, "zeta audit has zero violations",
               std::to_string(checks) + " epochs checked, " + std::to_string(bad + audited) + " violations, audit rows " +
                   std::to_string(log.audit.size()));
    }

    // 8. Starvation avoidance.
    if (wanted(8)) {
        // Judged on the nominal configuration (FSO switching); the other switch
        // models are reported for information.
        const auto max_gap = [&](const char* k) {
            Slot g = 0;
            for (const auto& r : s.at(k).result.replications) g = std::max(g, r.metrics["max_service_gap_slots"].get<Slot>());
            return g;
        };
        const Slot worst = max_gap("ACI(FSO)");
        const bool gap_ok = worst < kHorizon / 10;
        bool cross_ok = true;
        std::string cross;
        int crossings = 0;
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const auto [t, lag] = threshold_crossing(seed);
            if (t < 0) {
                cross += "seed " + std::to_string(seed) + ": no crossing; ";
                continue;
            }
            ++crossings;
            cross_ok = cross_ok && lag <= 10;
            cross += "seed " + std::to_string(seed) + ": crossed at " + std::to_string(t) + ", switch after " +
                     std::to_string(lag) + "; ";
        }
        cross_ok = cross_ok && crossings > 0;
        report(8, gap_ok && cross_ok, "ACI max inter-service gap < horizon/10; switch within 10 slots of threshold crossing",
               "max gap ACI(FSO) " + std::to_string(worst) + " slots (IID " + std::to_string(max_gap("ACI(IID)")) +
                   ", Dependent " + std::to_string(max_gap("ACI(Dependent)")) + "); " + cross);
    }

    // 9. Stability dichotomy at 50% of the measured inner bound.
    if (wanted(9)) {
        const Series& ref = s.at("ACI(FSO)");
        const ExperimentConfig base = nominal(P::ACI, M::FSO);
        const auto lambdas = base.per_queue_arrival_rates();
        std::vector<double> r(lambdas.size(), 0.0);
        for (const auto& rep : ref.result.replications) {
            for (std::size_t i = 0; i < r.size(); ++i) r[i] += rep.metrics["per_queue"][i]["mean_rate_bps"].get<double>() / kSeeds;
        }
        const double phi = ref.stat("/phi_sw").mean;
        const Feasibility f = feasibility_check(lambdas, r, phi);
        const double scale = 0.5 * (1.0 - phi) / f.load;  // 50% of the boundary scaling
        auto aci = base;
        aci.arrival_rate = base.arrival_rate * scale;
        const Series a = run_series(aci, "ACI");
        auto mw = aci;
        mw.policy = P::MaxWeight;
        mw.switch_time_scale = 5.0;
        const Series m = run_series(mw, "MW");
        int aci_stable = 0, mw_growing = 0;
        for (const auto& rep : a.result.replications) aci_stable += rep.metrics["stability"]["verdict"] == "STABLE";
        for (const auto& rep : m.result.replications) mw_growing += rep.metrics["stability"]["verdict"] == "GROWING";
        report(9, aci_stable == kSeeds && mw_growing >= 8,
               "ACI STABLE on all seeds at 50% of the inner bound; MW with 5x switch time GROWING on >= 8/10",
               "load scale " + fmt("%.3f", scale) + " (aggregate " + fmt("%.0f", aci.arrival_rate / 1e6) +
                   " Mbps, phi_sw " + fmt("%.3f", phi) + "); ACI stable " + std::to_string(aci_stable) + "/10, MW growing " +
                   std::to_string(mw_growing) + "/10");
    }

    // 10. Determinism across reruns and thread counts.
    if (wanted(10)) {
        const fs::path root = fs::temp_directory_path() / "acisim_acceptance_determinism";
        fs::remove_all(root);
        auto c = nominal(P::ACI, M::FSO);
        run_experiment(c, "ACI(FSO)", root / "a", 1);
        run_experiment(c, "ACI(FSO)", root / "b", 0);
        run_experiment(c, "ACI(FSO)", root / "c", 3);
        bool same = true;
        for (int rep = 0; rep < kSeeds; ++rep) {
            char name[16];
            std::snprintf(name, sizeof name, "rep_%02d", rep);
            const std::string a = slurp(root / "a" / name / "metrics.json");
            same = same && !a.empty() && a == slurp(root / "b" / name / "metrics.json") &&
                   a == slurp(root / "c" / name / "metrics.json");
        }
        report(10, same, "metrics.json byte-identical across runs and thread counts",
               std::to_string(kSeeds) + " replications x 3 runs (1, hardware, 3 threads)");
        fs::remove_all(root);
    }

    const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    std::printf("acceptance: %d criteria failed (%.1f s)\n", failures, total);
    return failures == 0 ? 0 : 1;
}
