#include "acisim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace acisim {

namespace {

// Calibration of the IID / Dependent ring means is seed-independent so every
// replication of a config sees the same marginal switching law.
constexpr std::uint64_t kCalibrationSeed = 0x5EEDCA11B4A7EULL;

bool scores_switch_cost(PolicyKind p) { return p == PolicyKind::ACI || p == PolicyKind::ACIAge; }

} // namespace

EngineSetup::EngineSetup(const ExperimentConfig& c)
    : cfg(c), hop1(c.hop1()), hop2(c.hop2()), radio(c.radio()), formation(c.formation()),
      switch_cfg(c.switch_config()), policy(c.policy_config()), lambdas(c.per_queue_arrival_rates()) {
    cfg.validate();
    if (switch_cfg.kind != SwitchModelKind::FSO) {
        const double span = c.loiter_rate > 0.0 ? 2.0 * std::numbers::pi / c.loiter_rate : c.slot_len;
        ring_means = calibrate_ring_means(switch_cfg, formation, c.slot_len, span,
                                          static_cast<std::size_t>(c.calibration_samples), kCalibrationSeed);
    }
}

Simulator::Simulator(const EngineSetup& setup, std::uint64_t seed)
    : setup_(setup), seed_(seed),
      switch_model_(setup.switch_cfg, setup.cfg.n_slaves, setup.cfg.slot_len,
                    derive_stream(seed, StreamPurpose::Switching, kSharedStream, 0)) {
    const auto& cfg = setup_.cfg;
    const int n = cfg.n_slaves;
    const auto un = static_cast<std::size_t>(n);
    if (!setup_.ring_means.empty()) switch_model_.set_ring_means(setup_.ring_means);
    zeta_ = zeta_bound(setup_.policy.beta, setup_.policy.gamma, switch_model_.tau_max());

    current_ = 0;
    for (double l : setup_.lambdas) queues_.emplace_back(l);
    rate_.assign(un, 0.0);
    cap_bits_.assign(un, 0);
    last_service_.assign(un, -1);
    rate_sum_.assign(un, 0.0);
    outage_slots_.assign(un, 0);

    log_.n_queues = n;
    log_.horizon = cfg.horizon;
    log_.warmup = cfg.warmup_slots();
    log_.slot_len = cfg.slot_len;
    log_.trace_stride = cfg.trace_stride;
    const auto h = static_cast<std::size_t>(cfg.horizon);
    log_.slot_class.reserve(h);
    log_.slot_queue.reserve(h);
    log_.served_bits.reserve(h);
    log_.total_backlog.reserve(h);
    log_.queue_delays.resize(un);
    log_.max_service_gap.assign(un, 0);
    log_.zeta = zeta_;
    log_.tau_max = switch_model_.tau_max();
    log_.ring_means = setup_.ring_means;
}

void Simulator::draw_channel(const GeometrySnapshot& geo) {
    const auto& cfg = setup_.cfg;
    StreamRng shared(seed_, StreamPurpose::Channel, kSharedStream, static_cast<std::uint64_t>(slot_));
    const HopDraw h1 = sample_hop(setup_.hop1, setup_.hop1.distance_m, shared);
    const double usable = cfg.slot_len - cfg.proc_overhead;
    for (int i = 0; i < geo.size(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        StreamRng rng(seed_, StreamPurpose::Channel, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(slot_));
        const HopDraw h2 = sample_hop(setup_.hop2, geo.range(i), rng);
        const ChannelDraw d = combine_hops(h1, h2, cfg.reflectivity, setup_.radio);
        rate_[k] = d.rate_bps;
        cap_bits_[k] = static_cast<Bits>(std::floor(d.rate_bps * usable));
        rate_sum_[k] += d.rate_bps;
        if (d.rate_bps <= 0.0) ++outage_slots_[k];
    }
}

Snapshot Simulator::make_snapshot(const GeometrySnapshot& geo, std::vector<Bits>& backlog, std::vector<double>& age,
                                  std::vector<std::optional<double>>& tau, std::vector<double>& chi) const {
    const int n = geo.size();
    const auto un = static_cast<std::size_t>(n);
    backlog.resize(un);
    age.resize(un);
    tau.assign(un, std::nullopt);
    chi.assign(un, 1.0);
    for (int i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        backlog[k] = queues_[k].backlog();
        age[k] = static_cast<double>(queues_[k].hol_age(slot_));
        if (current_ && *current_ == i) {
            tau[k] = 0.0;
            continue;
        }
        if (!current_) continue;
        const double theta = geo.theta(*current_, i);
        tau[k] = switch_model_.expected_tau(*current_, i, SwitchContext{theta, geo.range(i)});
        chi[k] = 1.0 - theta / std::numbers::pi;
    }
    Snapshot s;
    s.backlog = backlog;
    s.rate_bps = rate_;
    s.hol_age = age;
    s.tau = tau;
    s.affinity = chi;
    s.current = current_;
    s.slot_len = setup_.cfg.slot_len;
    return s;
}

std::vector<double> Simulator::urgency(const Snapshot& s) const {
    if (setup_.cfg.policy == PolicyKind::ACIAge) return {s.hol_age.begin(), s.hol_age.end()};
    std::vector<double> u(s.backlog.size());
    std::transform(s.backlog.begin(), s.backlog.end(), u.begin(), [](Bits b) { return static_cast<double>(b); });
    return u;
}

void Simulator::finish_blackout() {
    current_ = pending_target_;
    frame_rates_.clear();
    frame_remaining_ = pending_failed_ ? 0 : (setup_.cfg.policy == PolicyKind::MaxWeight ? 1 : setup_.policy.frame_len);
    pending_target_ = -1;
    pending_failed_ = false;
}

int Simulator::control(const GeometrySnapshot& geo, SlotClass& cls) {
    if (blackout_remaining_ > 0) {
        cls = SlotClass::Switching;
        if (--blackout_remaining_ == 0) finish_blackout();
        return -1;
    }
    if (frame_remaining_ > 0 && current_) {
        const int c = *current_;
        const auto kc = static_cast<std::size_t>(c);
        frame_rates_.push_back(rate_[kc]);
        // The first committed slot of a frame is always served.
        if (frame_rates_.size() > 1) {
            std::vector<Bits> backlog;
            std::vector<double> age, chi;
            std::vector<std::optional<double>> tau;
            const Snapshot s = make_snapshot(geo, backlog, age, tau, chi);
            const Decision d = select(setup_.cfg.policy, s, setup_.policy);
            double best_other = 0.0;
            for (std::size_t i = 0; i < d.scores.size(); ++i) {
                if (i != kc) best_other = std::max(best_other, d.scores[i]);
            }
            FrameProgress p;
            p.backlog = queues_[kc].backlog();
            p.realized_rates = frame_rates_;
            p.forecast_rate = frame_forecast_;
            p.current_score = d.scores.empty() ? 0.0 : d.scores[kc];
            p.best_other_score = best_other;
            const auto& th = setup_.policy.halt;
            if (early_halt_check(p, th)) {
                const auto& r = frame_rates_;
                const bool outage = static_cast<int>(r.size()) >= th.outage_slots &&
                                    std::all_of(r.end() - th.outage_slots, r.end(), [](double x) { return x <= 0.0; });
                const double mean = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
                if (p.backlog == 0) ++log_.halts.drained;
                else if (outage) ++log_.halts.outage;
                else if (mean < th.shortfall_factor * p.forecast_rate) ++log_.halts.shortfall;
                else ++log_.halts.dominated;
                frame_remaining_ = 0;
                frame_rates_.clear();
                cls = SlotClass::Idle;
                return -1;
            }
        }
        --frame_remaining_;
        cls = queues_[kc].backlog() > 0 ? SlotClass::Serving : SlotClass::Idle;
        return c;
    }
    return decide(geo, cls);
}

int Simulator::decide(const GeometrySnapshot& geo, SlotClass& cls) {
    ++log_.decision_epochs;
    std::vector<Bits> backlog;
    std::vector<double> age, chi;
    std::vector<std::optional<double>> tau;
    const Snapshot s = make_snapshot(geo, backlog, age, tau, chi);
    const Decision d = select(setup_.cfg.policy, s, setup_.policy);

    if (scores_switch_cost(setup_.cfg.policy)) {
        const auto u = urgency(s);
        const auto cands = aci_candidates(s, setup_.policy, u);
        const ZetaAudit za = zeta_audit(cands, d.action == Decision::Action::Idle ? -1 : d.target, zeta_);
        ++log_.zeta_checks;
        if (!za.ok) ++log_.zeta_violations;
        if (za.best_unscaled > 0.0) log_.zeta_min_margin = log_.zeta_checks == 1 ? za.margin / za.best_unscaled
                                                           : std::min(log_.zeta_min_margin, za.margin / za.best_unscaled);
        if (setup_.cfg.audit) {
            static constexpr const char* kNames[] = {"STAY", "SWITCH", "HALT", "IDLE"};
            log_.audit.push_back(AuditRecord{slot_, current_ ? *current_ : -1, d.target,
                                             kNames[static_cast<int>(d.action)], d.scores, za});
        }
    }

    switch (d.action) {
    case Decision::Action::Stay: {
        const auto kc = static_cast<std::size_t>(d.target);
        frame_remaining_ = d.dwell - 1;
        frame_forecast_ = rate_[kc];
        frame_rates_.assign(1, rate_[kc]);
        cls = queues_[kc].backlog() > 0 ? SlotClass::Serving : SlotClass::Idle;
        return d.target;
    }
    case Decision::Action::Switch: {
        const int from = *current_;
        const SwitchContext ctx{geo.theta(from, d.target), geo.range(d.target)};
        const SwitchSample smp = switch_model_.sample(from, d.target, ctx);
        if (smp.unavailable) {
            ++log_.unavailable_picks;
            cls = SlotClass::Idle;
            return -1;
        }
        log_.switches.push_back(
            SwitchEvent{slot_, from, d.target, smp.theta_deg, smp.attempts, smp.tau, smp.multiplier, smp.failed});
        current_.reset();
        pending_target_ = d.target;
        pending_failed_ = smp.failed;
        frame_forecast_ = rate_[static_cast<std::size_t>(d.target)];
        blackout_remaining_ = smp.tau;
        cls = SlotClass::Switching;
        if (--blackout_remaining_ == 0) finish_blackout();
        return -1;
    }
    case Decision::Action::Halt:
    case Decision::Action::Idle: break;
    }
    cls = SlotClass::Idle;
    return -1;
}

void Simulator::step() {
    if (done()) throw std::logic_error("step past the horizon");
    const auto& cfg = setup_.cfg;
    const int n = cfg.n_slaves;
    const GeometrySnapshot geo(setup_.formation, static_cast<double>(slot_) * cfg.slot_len);

    // (1) channel, (2) arrivals: both depend only on (seed, slot, queue).
    draw_channel(geo);
    std::vector<PacketBatch> arrivals(static_cast<std::size_t>(n));
    Bits total = 0;
    for (int i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        StreamRng rng(seed_, StreamPurpose::Arrivals, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(slot_));
        arrivals[k] = sample_arrivals(setup_.lambdas[k], cfg.slot_len, cfg.packet_size, slot_, rng);
        total += queues_[k].backlog();
    }
    log_.total_backlog.push_back(total);
    if (slot_ % cfg.trace_stride == 0) {
        log_.trace_slots.push_back(slot_);
        std::vector<Bits> row(static_cast<std::size_t>(n));
        for (std::size_t k = 0; k < row.size(); ++k) row[k] = queues_[k].backlog();
        log_.trace_backlog.push_back(std::move(row));
    }

    // (3) control on the pre-arrival backlog Q(t).
    SlotClass cls = SlotClass::Idle;
    const int serve = control(geo, cls);

    // (4) service, then this slot's arrivals join: Q(t+1) = (Q - D)^+ + A.
    Bits served = 0;
    for (int i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        Bits d = 0;
        if (i == serve) {
            d = service_amount(queues_[k].backlog(), cap_bits_[k], true);
            served = d;
        }
        const DelaySink sink{&log_.queue_delays[k], log_.warmup};
        queues_[k].advance(d, arrivals[k], slot_, sink);
        if (d > 0) {
            log_.max_service_gap[k] = std::max(log_.max_service_gap[k], slot_ - last_service_[k] - 1);
            last_service_[k] = slot_;
        }
    }

    // (5) log.
    log_.slot_class.push_back(cls);
    int shown = serve;
    if (cls == SlotClass::Switching) {
        // The blackout's target; it is already the current queue on the last blackout slot.
        shown = pending_target_ >= 0 ? pending_target_ : current_.value_or(-1);
    }
    log_.slot_queue.push_back(static_cast<std::int8_t>(shown));
    log_.served_bits.push_back(served);
    ++slot_;
}

void Simulator::finalize() {
    const auto n = static_cast<std::size_t>(setup_.cfg.n_slaves);
    log_.blackout_truncated = blackout_remaining_;
    log_.arrived_bits.resize(n);
    log_.departed_bits.resize(n);
    log_.final_backlog.resize(n);
    log_.mean_rate_bps.resize(n);
    log_.outage_fraction.resize(n);
    const double h = static_cast<double>(std::max<Slot>(1, slot_));
    log_.delays = DelayHistogram{};
    for (std::size_t k = 0; k < n; ++k) {
        log_.arrived_bits[k] = queues_[k].arrived_total();
        log_.departed_bits[k] = queues_[k].departed_total();
        log_.final_backlog[k] = queues_[k].backlog();
        log_.mean_rate_bps[k] = rate_sum_[k] / h;
        log_.outage_fraction[k] = static_cast<double>(outage_slots_[k]) / h;
        log_.max_service_gap[k] = std::max(log_.max_service_gap[k], slot_ - last_service_[k] - 1);
        log_.delays.merge(log_.queue_delays[k]);
        for (const PacketBatch& b : queues_[k].ledger()) {
            if (b.arrival_slot >= log_.warmup) log_.residual.record(slot_ - b.arrival_slot, b.count);
        }
    }
}

MetricsLog Simulator::run() {
    while (!done()) step();
    finalize();
    return std::move(log_);
}

MetricsLog run_simulation(const ExperimentConfig& cfg, std::uint64_t seed) {
    const EngineSetup setup(cfg);
    Simulator sim(setup, seed);
    return sim.run();
}

TimeBudget time_budget(const MetricsLog& log) {
    const auto total = static_cast<Slot>(log.slot_class.size());
    const Slot start = std::min(log.warmup, total);
    const Slot n = total - start;
    if (n <= 0) return {0.0, 0.0, 1.0};
    Slot serving = 0;
    Slot switching = 0;
    for (Slot t = start; t < total; ++t) {
        const SlotClass c = log.slot_class[static_cast<std::size_t>(t)];
        serving += c == SlotClass::Serving;
        switching += c == SlotClass::Switching;
    }
    TimeBudget b;
    b.serving = static_cast<double>(serving) / static_cast<double>(n);
    b.switching = static_cast<double>(switching) / static_cast<double>(n);
    b.idle = static_cast<double>(n - serving - switching) / static_cast<double>(n);
    return b;
}

double phi_sw(std::span<const Slot> visits, std::span<const Slot> switch_slots) {
    const double v = static_cast<double>(std::accumulate(visits.begin(), visits.end(), Slot{0}));
    const double s = static_cast<double>(std::accumulate(switch_slots.begin(), switch_slots.end(), Slot{0}));
    if (v + s <= 0.0) return 0.0;
    return s / (v + s);
}

namespace {

std::vector<Slot> serving_visits(const MetricsLog& log) {
    std::vector<Slot> visits(static_cast<std::size_t>(log.n_queues), 0);
    const auto total = static_cast<Slot>(log.slot_class.size());
    for (Slot t = std::min(log.warmup, total); t < total; ++t) {
        const auto k = static_cast<std::size_t>(t);
        if (log.slot_class[k] == SlotClass::Serving) ++visits[static_cast<std::size_t>(log.slot_queue[k])];
    }
    return visits;
}

} // namespace

double phi_sw(const MetricsLog& log) {
    const auto visits = serving_visits(log);
    const auto total = static_cast<Slot>(log.slot_class.size());
    std::vector<Slot> switched;
    for (const auto& e : log.switches) {
        if (e.slot < log.warmup) continue;
        switched.push_back(std::min(e.tau, total - e.slot));
    }
    return phi_sw(visits, switched);
}

ServiceShares service_shares(const MetricsLog& log) {
    const auto visits = serving_visits(log);
    const TimeBudget b = time_budget(log);
    const auto total = static_cast<Slot>(log.slot_class.size());
    const double window = static_cast<double>(total - std::min(log.warmup, total));
    const double usable = window * (1.0 - b.switching);
    const double phi = phi_sw(log);
    ServiceShares s;
    for (Slot v : visits) {
        const double a = usable > 0.0 ? static_cast<double>(v) / usable : 0.0;
        s.alpha.push_back(a);
        s.phi.push_back((1.0 - phi) * a);
    }
    return s;
}

Feasibility feasibility_check(std::span<const double> lambdas, std::span<const double> r, double phi) {
    if (lambdas.size() != r.size()) throw std::invalid_argument("feasibility_check: lambda and r lengths differ");
    Feasibility f;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (!(r[i] > 0.0)) throw std::invalid_argument("feasibility_check: every r_i must be > 0");
        f.load += lambdas[i] / r[i];
    }
    f.margin = (1.0 - phi) - f.load;
    f.inside = f.margin > 0.0;
    return f;
}

std::vector<QuantileRow> delay_cdf(const DelayHistogram& delays, std::span<const double> quantiles) {
    if (delays.empty()) throw std::domain_error("delay_cdf: no delay samples");
    std::vector<QuantileRow> rows;
    rows.reserve(quantiles.size());
    for (double q : quantiles) rows.push_back({q, delays.quantile(q)});
    return rows;
}

std::string_view to_string(StabilityVerdict v) { return v == StabilityVerdict::Stable ? "STABLE" : "GROWING"; }

StabilityReport stability_probe(std::span<const Bits> series, Slot window, double c) {
    const auto n = static_cast<Slot>(series.size());
    if (window < 1 || n < 3 * window) throw std::invalid_argument("stability_probe needs at least 3 windows of data");
    const auto max_over = [&](Slot lo, Slot hi) {
        return static_cast<double>(*std::max_element(series.begin() + lo, series.begin() + hi));
    };
    StabilityReport r;
    r.max_last = max_over(n - window, n);
    const Slot mid = n / 2 - window / 2;
    r.max_middle = max_over(mid, mid + window);

    // OLS slope on block means of the last half. Backlog under polling-like
    // service is correlated over thousands of slots, so the slope's standard
    // error uses an AR(1) effective sample size n_eff = k (1 - rho) / (1 + rho)
    // estimated from the lag-1 autocorrelation rho of the residuals.
    const Slot lo = n / 2;
    const Slot len = n - lo;
    const Slot blocks = std::min<Slot>(50, len);
    const Slot bsize = len / blocks;
    std::vector<double> x, y;
    for (Slot b = 0; b < blocks; ++b) {
        const Slot s = lo + b * bsize;
        const Slot e = (b + 1 == blocks) ? n : s + bsize;
        long double sum = 0;
        for (Slot t = s; t < e; ++t) sum += static_cast<long double>(series[static_cast<std::size_t>(t)]);
        x.push_back(0.5 * static_cast<double>(s + e - 1));
        y.push_back(static_cast<double>(sum / static_cast<long double>(e - s)));
    }
    const double k = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / k;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / k;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    r.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    r.slope_lower = r.slope;
    if (x.size() > 2 && sxx > 0.0) {
        std::vector<double> res(x.size());
        double sse = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            res[i] = y[i] - (my + r.slope * (x[i] - mx));
            sse += res[i] * res[i];
        }
        double lag1 = 0.0;
        for (std::size_t i = 1; i < res.size(); ++i) lag1 += res[i] * res[i - 1];
        const double rho = sse > 0.0 ? std::clamp(lag1 / sse, 0.0, 0.99) : 0.0;
        const double n_eff = std::max(3.0, k * (1.0 - rho) / (1.0 + rho));
        const double dof = n_eff - 2.0;
        const double se = std::sqrt(sse / dof / sxx);
        const boost::math::students_t dist(dof);
        r.slope_lower = r.slope - boost::math::quantile(dist, 0.95) * se;
    }
    const bool bounded = r.max_last <= c * r.max_middle;
    r.verdict = (bounded && !(r.slope_lower > 0.0)) ? StabilityVerdict::Stable : StabilityVerdict::Growing;
    return r;
}

StabilityReport stability_probe(const MetricsLog& log) {
    const auto n = static_cast<Slot>(log.total_backlog.size());
    return stability_probe(log.total_backlog, std::max<Slot>(1, n / 5));
}

} // namespace acisim
