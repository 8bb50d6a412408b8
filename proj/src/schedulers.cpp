#include "acisim/schedulers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace acisim {

std::string_view to_string(PolicyKind p) {
    switch (p) {
    case PolicyKind::MaxWeight: return "MW";
    case PolicyKind::ACI: return "ACI";
    case PolicyKind::ACIAge: return "ACI-A";
    case PolicyKind::ACIPureAge: return "ACI-PA";
    }
    return "?";
}

PolicyKind parse_policy(std::string_view s) {
    if (s == "MW") return PolicyKind::MaxWeight;
    if (s == "ACI") return PolicyKind::ACI;
    if (s == "ACI-A") return PolicyKind::ACIAge;
    if (s == "ACI-PA") return PolicyKind::ACIPureAge;
    throw std::invalid_argument("unknown policy '" + std::string(s) + "' (MW | ACI | ACI-A | ACI-PA)");
}

void PolicyConfig::validate(double slot_len_s) const {
    if (beta < 0.0) throw std::invalid_argument("beta must be >= 0");
    if (gamma < 0.0) throw std::invalid_argument("gamma must be >= 0");
    if (frame_len < 1) throw std::invalid_argument("frame_len must be >= 1");
    if (proc_overhead < 0.0 || proc_overhead >= slot_len_s) throw std::invalid_argument("proc_overhead must lie in [0, slot_len)");
    if (halt.outage_slots < 1) throw std::invalid_argument("halt_outage_slots must be >= 1");
    if (halt.shortfall_factor < 0.0) throw std::invalid_argument("halt_shortfall_factor must be >= 0");
    if (halt.dominance_margin < 1.0) throw std::invalid_argument("halt_dominance_margin must be >= 1");
}

Decision mw_select(std::span<const Bits> backlog, std::span<const double> mu_slot_bits, double slot_len,
                   std::optional<int> current) {
    if (backlog.size() != mu_slot_bits.size() || backlog.empty()) {
        throw std::invalid_argument("mw_select: backlog and rate vectors must be nonempty and equal length");
    }
    Decision d;
    d.scores.resize(backlog.size());
    int best = -1;
    double best_w = 0.0;
    for (std::size_t i = 0; i < backlog.size(); ++i) {
        const double w = static_cast<double>(backlog[i]) * mu_slot_bits[i] * slot_len;
        d.scores[i] = w;
        if (w > best_w) {
            best_w = w;
            best = static_cast<int>(i);
        }
    }
    if (best < 0) {
        if (!current) return Decision::idle(std::move(d.scores));
        d.action = Decision::Action::Stay;
        d.target = *current;
    } else {
        d.action = (current && *current == best) ? Decision::Action::Stay : Decision::Action::Switch;
        d.target = best;
    }
    d.dwell = 1;
    return d;
}

Decision mw_select(const Snapshot& s) { return mw_select(s.backlog, s.rate_bps, s.slot_len, s.current); }

double estimated_frame_bits(double rate_bps, int frame_len, double slot_len, double proc_overhead) {
    return static_cast<double>(frame_len) * rate_bps * std::max(0.0, slot_len - proc_overhead);
}

double amortized_goodput(double frame_bits, double tau_slots, int frame_len, double slot_len) {
    return frame_bits / (tau_slots * slot_len + static_cast<double>(frame_len) * slot_len);
}

double switching_modulator(double tau_slots, double chi, double beta, double gamma) {
    return (1.0 + gamma * chi) / (1.0 + beta * tau_slots);
}

std::vector<CandidateScore> aci_candidates(const Snapshot& s, const PolicyConfig& cfg, std::span<const double> urgency) {
    const int n = s.size();
    std::vector<CandidateScore> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        const bool stay = s.current && *s.current == i;
        double tau = 0.0;
        double chi = 1.0;
        if (!stay) {
            if (!s.tau[k]) continue;
            tau = *s.tau[k];
            chi = s.affinity[k];
        }
        CandidateScore& c = out[k];
        c.available = true;
        c.urgency = urgency[k];
        const double bits = estimated_frame_bits(s.rate_bps[k], cfg.frame_len, s.slot_len, cfg.proc_overhead);
        c.goodput = amortized_goodput(bits, tau, cfg.frame_len, s.slot_len);
        c.modulator = switching_modulator(tau, chi, cfg.beta, cfg.gamma);
    }
    return out;
}

namespace {

Decision argmax_decision(std::span<const double> scores, std::span<const std::uint8_t> available, std::optional<int> current,
                         int dwell) {
    Decision d;
    d.scores.assign(scores.begin(), scores.end());
    int best = -1;
    double best_score = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!available[i]) continue;
        if (scores[i] > best_score) {
            best_score = scores[i];
            best = static_cast<int>(i);
        }
    }
    if (best < 0) return Decision::idle(std::move(d.scores));
    d.target = best;
    d.dwell = dwell;
    d.action = (current && *current == best) ? Decision::Action::Stay : Decision::Action::Switch;
    return d;
}

Decision score_select(const Snapshot& s, const PolicyConfig& cfg, std::span<const double> urgency) {
    const auto cands = aci_candidates(s, cfg, urgency);
    std::vector<double> scores(cands.size());
    std::vector<std::uint8_t> avail(cands.size());
    for (std::size_t i = 0; i < cands.size(); ++i) {
        scores[i] = cands[i].available ? cands[i].score() : 0.0;
        avail[i] = cands[i].available;
    }
    return argmax_decision(scores, avail, s.current, cfg.frame_len);
}

std::vector<double> backlog_as_urgency(const Snapshot& s) {
    std::vector<double> u(s.backlog.size());
    std::transform(s.backlog.begin(), s.backlog.end(), u.begin(), [](Bits b) { return static_cast<double>(b); });
    return u;
}

} // namespace

Decision aci_select(const Snapshot& s, const PolicyConfig& cfg) {
    const auto u = backlog_as_urgency(s);
    return score_select(s, cfg, u);
}

Decision aci_a_select(const Snapshot& s, const PolicyConfig& cfg) { return score_select(s, cfg, s.hol_age); }

Decision aci_pa_select(const Snapshot& s, const PolicyConfig& cfg) {
    std::vector<double> scores(s.hol_age.begin(), s.hol_age.end());
    std::vector<std::uint8_t> avail(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        avail[i] = (s.current && *s.current == static_cast<int>(i)) || s.tau[i].has_value();
    }
    return argmax_decision(scores, avail, s.current, cfg.frame_len);
}

Decision select(PolicyKind kind, const Snapshot& s, const PolicyConfig& cfg) {
    switch (kind) {
    case PolicyKind::MaxWeight: return mw_select(s);
    case PolicyKind::ACI: return aci_select(s, cfg);
    case PolicyKind::ACIAge: return aci_a_select(s, cfg);
    case PolicyKind::ACIPureAge: return aci_pa_select(s, cfg);
    }
    throw std::logic_error("unknown policy");
}

bool early_halt_check(const FrameProgress& p, const EarlyHaltThresholds& t) {
    if (p.backlog == 0) return true;
    const auto& r = p.realized_rates;
    if (static_cast<int>(r.size()) >= t.outage_slots &&
        std::all_of(r.end() - t.outage_slots, r.end(), [](double x) { return x <= 0.0; })) {
        return true;
    }
    if (r.size() >= 2) {
        const double mean = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
        if (mean < t.shortfall_factor * p.forecast_rate) return true;
    }
    return p.best_other_score > t.dominance_margin * p.current_score;
}

double zeta_bound(double beta, double gamma, double tau_max) {
    if (!std::isfinite(tau_max) || tau_max < 0.0) throw std::invalid_argument("zeta_bound needs a finite tau_max >= 0");
    return 1.0 / ((1.0 + beta * tau_max) * (1.0 + gamma));
}

double starvation_threshold(double q_i, double er_i, double er_j, double f_ii, double f_ij, double tau_slots,
                            int frame_len) {
    if (er_j <= 0.0 || f_ij <= 0.0) return std::numeric_limits<double>::infinity();
    return q_i * (er_i * f_ii) / (er_j * f_ij) * (1.0 + tau_slots / static_cast<double>(frame_len));
}

ZetaAudit zeta_audit(std::span<const CandidateScore> candidates, int chosen, double zeta) {
    ZetaAudit a;
    a.zeta = zeta;
    for (const auto& c : candidates) {
        if (c.available) a.best_unscaled = std::max(a.best_unscaled, c.unscaled());
    }
    if (chosen >= 0) a.chosen_unscaled = candidates[static_cast<std::size_t>(chosen)].unscaled();
    // An idle epoch has every score at zero, so nothing is forgone.
    a.margin = chosen >= 0 ? a.chosen_unscaled - zeta * a.best_unscaled : 0.0;
    // Relative slack for rounding in the products.
    a.ok = a.margin >= -1e-12 * std::max(1.0, a.best_unscaled);
    return a;
}

} // namespace acisim
