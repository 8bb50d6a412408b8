#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "acisim/queueing.hpp"

namespace acisim {

enum class PolicyKind { MaxWeight, ACI, ACIAge, ACIPureAge };

std::string_view to_string(PolicyKind p);
PolicyKind parse_policy(std::string_view s);

struct EarlyHaltThresholds {
    int outage_slots = 2;
    double shortfall_factor = 0.5;
    double dominance_margin = 2.0;
};

struct PolicyConfig {
    double beta = 1.0;
    double gamma = 1.0;
    int frame_len = 3;          // L, slots
    double proc_overhead = 0.0; // t_p, seconds
    EarlyHaltThresholds halt;

    void validate(double slot_len_s) const;
};

/// What a policy sees at a decision epoch. All spans have one entry per queue.
struct Snapshot {
    std::span<const Bits> backlog;
    std::span<const double> rate_bps;       // current per-slot rate, capped at mu_bar
    std::span<const double> hol_age;        // slots
    /// Forecast switchover from the current position, slots; nullopt = unavailable.
    /// The entry for the current queue is 0.
    std::span<const std::optional<double>> tau;
    /// chi_{current, i} in [0, 1]; 1 for the current queue.
    std::span<const double> affinity;
    std::optional<int> current;
    double slot_len = 0.0;

    int size() const { return static_cast<int>(backlog.size()); }
};

struct Decision {
    enum class Action { Stay, Switch, Halt, Idle };

    Action action = Action::Idle;
    int target = -1;
    int dwell = 0;
    /// Per-candidate score (0 for unavailable candidates).
    std::vector<double> scores;

    static Decision idle(std::vector<double> scores = {}) { return {Action::Idle, -1, 0, std::move(scores)}; }
};

/// argmax Q_i mu_i dt, lowest index on ties; all-zero weights -> stay on current.
Decision mw_select(std::span<const Bits> backlog, std::span<const double> mu_slot_bits, double slot_len,
                   std::optional<int> current);
Decision mw_select(const Snapshot& s);

/// B_hat = L R (dt - t_p)^+.
double estimated_frame_bits(double rate_bps, int frame_len, double slot_len, double proc_overhead);
/// B_hat / (tau dt + L dt), bits/s.
double amortized_goodput(double frame_bits, double tau_slots, int frame_len, double slot_len);
/// (1 + gamma chi) / (1 + beta tau).
double switching_modulator(double tau_slots, double chi, double beta, double gamma);

/// One candidate's score pieces. The unscaled objective is urgency * goodput.
struct CandidateScore {
    double urgency = 0.0;
    double goodput = 0.0;
    double modulator = 0.0;
    bool available = false;

    double unscaled() const { return urgency * goodput; }
    double score() const { return urgency * goodput * modulator; }
};

std::vector<CandidateScore> aci_candidates(const Snapshot& s, const PolicyConfig& cfg, std::span<const double> urgency);

/// argmax_i Q_i * mu_bar_{i|j} * f_ij over available candidates incl. staying.
Decision aci_select(const Snapshot& s, const PolicyConfig& cfg);
/// Same with Q_i replaced by HoL age.
Decision aci_a_select(const Snapshot& s, const PolicyConfig& cfg);
/// argmax HoL age; no channel or switch term.
Decision aci_pa_select(const Snapshot& s, const PolicyConfig& cfg);

Decision select(PolicyKind kind, const Snapshot& s, const PolicyConfig& cfg);

/// Progress inside a committed frame.
struct FrameProgress {
    Bits backlog = 0;
    std::span<const double> realized_rates;  // rates seen in this frame so far, oldest first
    double forecast_rate = 0.0;              // R used at commit
    double current_score = 0.0;
    double best_other_score = 0.0;
};

bool early_halt_check(const FrameProgress& p, const EarlyHaltThresholds& t);

/// zeta = f_min / f_max = 1 / ((1 + beta tau_max)(1 + gamma)).
double zeta_bound(double beta, double gamma, double tau_max);

/// Theta_ij(L) = Q_i (E[R_i] f_ii) / (E[R_j] f_ij) (1 + tau_ij / L). Infinite when E[R_j] == 0.
double starvation_threshold(double q_i, double er_i, double er_j, double f_ii, double f_ij, double tau_slots,
                            int frame_len);

/// Audit of one ACI epoch: G(i*) >= zeta * max_i G(i).
struct ZetaAudit {
    double chosen_unscaled = 0.0;
    double best_unscaled = 0.0;
    double zeta = 1.0;
    double margin = 0.0;  // chosen - zeta * best
    bool ok = true;
};

ZetaAudit zeta_audit(std::span<const CandidateScore> candidates, int chosen, double zeta);

} // namespace acisim
