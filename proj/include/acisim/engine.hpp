#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "acisim/config.hpp"
#include "acisim/fso_channel.hpp"
#include "acisim/geometry.hpp"
#include "acisim/queueing.hpp"
#include "acisim/schedulers.hpp"
#include "acisim/switchover.hpp"

namespace acisim {

enum class SlotClass : std::uint8_t { Serving = 0, Switching = 1, Idle = 2 };

struct SwitchEvent {
    Slot slot = 0;  // decision slot = first blackout slot
    int from = 0;
    int to = 0;
    double theta_deg = 0.0;
    std::int64_t attempts = 0;
    Slot tau = 0;
    double multiplier = 1.0;
    bool failed = false;
};

/// One row of the optional per-epoch audit.
struct AuditRecord {
    Slot slot = 0;
    int current = -1;
    int chosen = -1;
    std::string action;
    std::vector<double> scores;
    ZetaAudit zeta;
};

/// Why a committed frame ended early.
struct HaltCounts {
    std::int64_t drained = 0;
    std::int64_t outage = 0;
    std::int64_t shortfall = 0;
    std::int64_t dominated = 0;
};

struct MetricsLog {
    int n_queues = 0;
    Slot horizon = 0;
    Slot warmup = 0;
    double slot_len = 0.0;

    // Per-slot records (full horizon).
    std::vector<SlotClass> slot_class;
    std::vector<std::int8_t> slot_queue;  // queue served (or switched to); -1 when none
    std::vector<Bits> served_bits;
    std::vector<Bits> total_backlog;      // sum_i Q_i(t) at the start of slot t
    // Per-queue backlog sampled every `trace_stride` slots.
    int trace_stride = 1;
    std::vector<Slot> trace_slots;
    std::vector<std::vector<Bits>> trace_backlog;

    // Delays of packets that arrived at or after `warmup`.
    DelayHistogram delays;
    std::vector<DelayHistogram> queue_delays;
    /// Packets still queued at the horizon, recorded at (horizon - arrival):
    /// a lower bound on their delay. Keeps unstable runs from looking fast.
    DelayHistogram residual;

    std::vector<SwitchEvent> switches;
    Slot blackout_truncated = 0;  // blackout slots cut off by the horizon end
    std::int64_t unavailable_picks = 0;

    // Per-queue totals (full horizon).
    std::vector<Bits> arrived_bits;
    std::vector<Bits> departed_bits;
    std::vector<Bits> final_backlog;
    std::vector<Slot> max_service_gap;   // longest run of slots without service, incl. the tail
    std::vector<double> mean_rate_bps;   // E[mu_i] over all slots (capped)
    std::vector<double> outage_fraction; // slots with mu_i = 0

    HaltCounts halts;
    std::int64_t decision_epochs = 0;
    std::int64_t zeta_checks = 0;
    std::int64_t zeta_violations = 0;
    double zeta = 1.0;
    double zeta_min_margin = 0.0;  // min (chosen - zeta * best) / best over checked epochs
    std::vector<AuditRecord> audit;
    std::vector<double> ring_means;  // calibrated switch means (IID / Dependent)
    double tau_max = 0.0;
};

/// Pre-computed, seed-independent pieces shared by runs of one config.
struct EngineSetup {
    ExperimentConfig cfg;
    HopParams hop1;
    HopParams hop2;
    RadioParams radio;
    Formation formation;
    SwitchModelConfig switch_cfg;
    PolicyConfig policy;
    std::vector<double> lambdas;
    std::vector<double> ring_means;  // empty for FSO

    explicit EngineSetup(const ExperimentConfig& cfg);
};

class Simulator {
public:
    Simulator(const EngineSetup& setup, std::uint64_t seed);

    /// Advance one slot. Precondition: !done().
    void step();
    bool done() const { return slot_ >= setup_.cfg.horizon; }
    /// Run to the horizon and return the completed log.
    MetricsLog run();

    Slot slot() const { return slot_; }
    std::optional<int> current() const { return current_; }
    Slot blackout_remaining() const { return blackout_remaining_; }
    int frame_remaining() const { return frame_remaining_; }
    const std::vector<QueueState>& queues() const { return queues_; }
    const MetricsLog& log() const { return log_; }
    /// Rates of the last drawn slot.
    const std::vector<double>& rates() const { return rate_; }

    /// Force the server position (tests).
    void set_current(std::optional<int> q) { current_ = q; }

private:
    void draw_channel(const GeometrySnapshot& geo);
    Snapshot make_snapshot(const GeometrySnapshot& geo, std::vector<Bits>& backlog, std::vector<double>& age,
                           std::vector<std::optional<double>>& tau, std::vector<double>& chi) const;
    std::vector<double> urgency(const Snapshot& s) const;
    /// Returns the queue to serve this slot, or -1.
    int control(const GeometrySnapshot& geo, SlotClass& cls);
    int decide(const GeometrySnapshot& geo, SlotClass& cls);
    void finish_blackout();
    void finalize();

    const EngineSetup& setup_;
    std::uint64_t seed_;
    SwitchModel switch_model_;
    double zeta_ = 1.0;

    Slot slot_ = 0;
    std::optional<int> current_;
    Slot blackout_remaining_ = 0;
    int pending_target_ = -1;
    bool pending_failed_ = false;
    int frame_remaining_ = 0;
    double frame_forecast_ = 0.0;
    std::vector<double> frame_rates_;

    std::vector<QueueState> queues_;
    std::vector<double> rate_;
    std::vector<Bits> cap_bits_;
    std::vector<Slot> last_service_;
    std::vector<double> rate_sum_;
    std::vector<std::int64_t> outage_slots_;
    MetricsLog log_;
};

MetricsLog run_simulation(const ExperimentConfig& cfg, std::uint64_t seed);

struct TimeBudget {
    double serving = 0.0;
    double switching = 0.0;
    double idle = 0.0;
};

/// Fractions over slots [warmup, horizon). An empty window counts as all idle.
TimeBudget time_budget(const MetricsLog& log);

/// sum p_ij tau_ij / (sum v_k + sum p_ij tau_ij). `visits[k]` are serving-slot
/// totals, `switch_slots` the blackout totals of all transitions.
double phi_sw(std::span<const Slot> visits, std::span<const Slot> switch_slots);
/// phi_sw over the post-warm-up part of a run: visits from serving slots,
/// transitions from switch events that started after warm-up.
double phi_sw(const MetricsLog& log);

/// Empirical alpha_i (share of serving slots given to i) and phi_i = (1 - phi_sw) alpha_i.
struct ServiceShares {
    std::vector<double> alpha;
    std::vector<double> phi;
};
ServiceShares service_shares(const MetricsLog& log);

struct Feasibility {
    bool inside = false;
    double load = 0.0;    // sum lambda_i / r_i
    double margin = 0.0;  // (1 - phi_sw) - load
};
/// Inner bound sum lambda_i / r_i < 1 - phi_sw. Throws std::invalid_argument if some r_i <= 0.
Feasibility feasibility_check(std::span<const double> lambdas, std::span<const double> r, double phi_sw);

struct QuantileRow {
    double q;
    double delay_slots;
};
/// Requested quantiles of the delay distribution. Throws std::domain_error when empty.
std::vector<QuantileRow> delay_cdf(const DelayHistogram& delays, std::span<const double> quantiles);

enum class StabilityVerdict { Stable, Growing };
std::string_view to_string(StabilityVerdict v);

struct StabilityReport {
    StabilityVerdict verdict = StabilityVerdict::Stable;
    double max_last = 0.0;
    double max_middle = 0.0;
    double slope = 0.0;        // bits per slot over the last half
    double slope_lower = 0.0;  // one-sided 95% lower confidence bound; > 0 means significant growth
};
/// STABLE iff max over the last window <= c * max over the middle window and the
/// last-half slope (OLS on block means) is not significantly positive at 95%.
/// Throws std::invalid_argument if the series is shorter than 3 windows.
StabilityReport stability_probe(std::span<const Bits> total_backlog, Slot window, double c = 1.5);
StabilityReport stability_probe(const MetricsLog& log);

} // namespace acisim
