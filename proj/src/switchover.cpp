#include "acisim/switchover.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "acisim/fso_channel.hpp"

namespace acisim {

void GimbalLimits::validate() const {
    if (!(v_max_deg_s > 0.0 && a_max_deg_s2 > 0.0 && j_max_deg_s3 > 0.0)) {
        throw std::invalid_argument("gimbal limits must be strictly positive");
    }
}

void AcquisitionParams::validate() const {
    if (!(t_acq() > 0.0) || t_fsm_s < 0.0 || t_pilot_s < 0.0) throw std::invalid_argument("T_acq must be > 0");
    if (!(p_base > 0.0 && p_base <= 1.0)) throw std::invalid_argument("p_base must lie in (0, 1]");
    if (!(p_floor >= 0.0 && p_floor <= p_base)) throw std::invalid_argument("p_floor must lie in [0, p_base]");
    if (k_cap < 1) throw std::invalid_argument("k_cap must be >= 1");
}

void SwitchModelConfig::validate() const {
    gimbal.validate();
    acquisition.validate();
    if (lateral_jitter_var < 0.0 || angular_jitter_var < 0.0 || fov_half_angle_rad < 0.0) {
        throw std::invalid_argument("switch model jitter variances and FOV must be >= 0");
    }
    if (!(phi_global >= 0.0 && phi_global < 1.0) || !(phi_target >= 0.0 && phi_target < 1.0)) {
        throw std::invalid_argument("AR(1) persistence must lie in [0, 1)");
    }
    if (innovation_std < 0.0) throw std::invalid_argument("innovation_std must be >= 0");
    if (!(multiplier_cap >= 1.0)) throw std::invalid_argument("multiplier_cap must be >= 1");
    if (!(time_scale > 0.0)) throw std::invalid_argument("time_scale must be > 0");
}

std::string_view to_string(SwitchModelKind k) {
    switch (k) {
    case SwitchModelKind::IID: return "IID";
    case SwitchModelKind::Dependent: return "DEPENDENT";
    case SwitchModelKind::FSO: return "FSO";
    }
    return "?";
}

SwitchModelKind parse_switch_model(std::string_view s) {
    if (s == "IID") return SwitchModelKind::IID;
    if (s == "DEPENDENT") return SwitchModelKind::Dependent;
    if (s == "FSO") return SwitchModelKind::FSO;
    throw std::invalid_argument("unknown switch model '" + std::string(s) + "' (IID | DEPENDENT | FSO)");
}

double slew_time(double theta_deg, const GimbalLimits& g) {
    return theta_deg / g.v_max_deg_s + g.v_max_deg_s / g.a_max_deg_s2 + 4.0 * g.a_max_deg_s2 / g.j_max_deg_s3;
}

std::optional<std::int64_t> acquisition_rounds(double p, StreamRng& rng) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("acquisition probability must lie in [0, 1]");
    if (p == 0.0) return std::nullopt;
    if (p == 1.0) return 1;
    std::geometric_distribution<std::int64_t> failures(p);
    return failures(rng) + 1;
}

int ring_distance(int i, int j, int n) {
    const int d = std::abs(i - j) % n;
    return std::min(d, n - d);
}

SwitchModel::SwitchModel(SwitchModelConfig cfg, int n_queues, double slot_len_s, std::uint64_t stream_key)
    : cfg_(cfg), n_(n_queues), slot_len_(slot_len_s), rng_(stream_key),
      level_target_(static_cast<std::size_t>(n_queues), 0.0) {
    cfg_.validate();
    if (n_queues < 1) throw std::invalid_argument("switch model needs at least one queue");
    if (!(slot_len_s > 0.0)) throw std::invalid_argument("slot_len must be > 0");
    // Start the AR(1) levels in their stationary law so there is no burn-in.
    std::normal_distribution<double> n01(0.0, 1.0);
    level_global_ = std::sqrt(stationary_var_global()) * n01(rng_);
    for (double& l : level_target_) l = std::sqrt(stationary_var_target()) * n01(rng_);
}

void SwitchModel::set_ring_means(std::vector<double> means) {
    const auto needed = static_cast<std::size_t>(n_ / 2 + 1);
    if (means.size() < needed) throw std::invalid_argument("ring means need one entry per ring distance");
    for (std::size_t d = 1; d < needed; ++d) {
        if (!(means[d] >= 1.0)) throw std::invalid_argument("ring means must be >= 1 slot");
    }
    ring_means_ = std::move(means);
}

double SwitchModel::stationary_var_global() const {
    return cfg_.innovation_std * cfg_.innovation_std / (1.0 - cfg_.phi_global * cfg_.phi_global);
}

double SwitchModel::stationary_var_target() const {
    return cfg_.innovation_std * cfg_.innovation_std / (1.0 - cfg_.phi_target * cfg_.phi_target);
}

double SwitchModel::clamp_multiplier(double m) const {
    return std::clamp(m, 1.0 / cfg_.multiplier_cap, cfg_.multiplier_cap);
}

double SwitchModel::current_multiplier(int to) const {
    if (cfg_.kind != SwitchModelKind::Dependent) return 1.0;
    // exp(y - var/2) has mean one under the stationary law.
    const double g = level_global_ - 0.5 * stationary_var_global();
    const double t = level_target_[static_cast<std::size_t>(to)] - 0.5 * stationary_var_target();
    return clamp_multiplier(std::exp(g + t));
}

Slot SwitchModel::ring_tau(int from, int to, double multiplier) const {
    if (ring_means_.empty()) throw std::logic_error("ring means not calibrated");
    const double mean = ring_means_[static_cast<std::size_t>(ring_distance(from, to, n_))];
    return std::max<Slot>(1, std::llround(mean * multiplier));
}

std::optional<double> SwitchModel::success_probability(double target_range_m) const {
    const double miss =
        fov_miss_probability(cfg_.lateral_jitter_var, cfg_.angular_jitter_var, target_range_m, cfg_.fov_half_angle_rad);
    const double p = cfg_.acquisition.p_base * (1.0 - miss);
    if (p <= 0.0 || p < cfg_.acquisition.p_floor) return std::nullopt;
    return p;
}

SwitchSample SwitchModel::sample(int from, int to, const SwitchContext& ctx) {
    SwitchSample s;
    if (from == to) return s;
    s.theta_deg = ctx.theta_rad * 180.0 / std::numbers::pi;
    switch (cfg_.kind) {
    case SwitchModelKind::IID: {
        std::normal_distribution<double> n01(0.0, 1.0);
        const double var = stationary_var_global() + stationary_var_target();
        s.multiplier = clamp_multiplier(std::exp(-0.5 * var + std::sqrt(var) * n01(rng_)));
        s.tau = ring_tau(from, to, s.multiplier);
        s.attempts = 1;
        break;
    }
    case SwitchModelKind::Dependent: {
        std::normal_distribution<double> innov(0.0, cfg_.innovation_std);
        level_global_ = cfg_.phi_global * level_global_ + innov(rng_);
        auto& lt = level_target_[static_cast<std::size_t>(to)];
        lt = cfg_.phi_target * lt + innov(rng_);
        s.multiplier = current_multiplier(to);
        s.tau = ring_tau(from, to, s.multiplier);
        s.attempts = 1;
        break;
    }
    case SwitchModelKind::FSO: {
        const auto p = success_probability(ctx.target_range_m);
        if (!p) {
            s.unavailable = true;
            return s;
        }
        const auto k = acquisition_rounds(*p, rng_);
        std::int64_t attempts = *k;
        if (attempts > cfg_.acquisition.k_cap) {
            attempts = cfg_.acquisition.k_cap;
            s.failed = true;
        }
        s.attempts = attempts;
        const double t = cfg_.time_scale *
                         (slew_time(s.theta_deg, cfg_.gimbal) + static_cast<double>(attempts) * cfg_.acquisition.t_acq());
        s.tau = std::max<Slot>(1, static_cast<Slot>(std::ceil(t / slot_len_ - 1e-9)));
        break;
    }
    }
    return s;
}

std::optional<double> SwitchModel::expected_tau(int from, int to, const SwitchContext& ctx) const {
    if (from == to) return 0.0;
    switch (cfg_.kind) {
    case SwitchModelKind::IID:
        return ring_means_.at(static_cast<std::size_t>(ring_distance(from, to, n_)));
    case SwitchModelKind::Dependent:
        return ring_means_.at(static_cast<std::size_t>(ring_distance(from, to, n_))) * current_multiplier(to);
    case SwitchModelKind::FSO: {
        const auto p = success_probability(ctx.target_range_m);
        if (!p) return std::nullopt;
        const double theta_deg = ctx.theta_rad * 180.0 / std::numbers::pi;
        const double t = cfg_.time_scale * (slew_time(theta_deg, cfg_.gimbal) + cfg_.acquisition.t_acq() / *p);
        return std::max(1.0, t / slot_len_);
    }
    }
    return std::nullopt;
}

double SwitchModel::tau_max() const {
    if (cfg_.kind == SwitchModelKind::FSO) {
        const double t = cfg_.time_scale * (slew_time(180.0, cfg_.gimbal) +
                                            static_cast<double>(cfg_.acquisition.k_cap) * cfg_.acquisition.t_acq());
        return std::ceil(t / slot_len_);
    }
    if (ring_means_.empty()) throw std::logic_error("ring means not calibrated");
    const double worst = *std::max_element(ring_means_.begin() + 1, ring_means_.end());
    return std::ceil(worst * cfg_.multiplier_cap) + 1.0;
}

std::vector<double> calibrate_ring_means(const SwitchModelConfig& cfg, const Formation& formation, double slot_len_s,
                                         double span_s, std::size_t samples_per_ring, std::uint64_t seed) {
    const int n = formation.n_slaves;
    std::vector<double> means(static_cast<std::size_t>(n / 2 + 1), 1.0);
    if (n < 2) return means;
    SwitchModelConfig fso = cfg;
    fso.kind = SwitchModelKind::FSO;
    SwitchModel model(fso, n, slot_len_s, derive_stream(seed, StreamPurpose::Calibration, 0, 0));
    StreamRng pick(seed, StreamPurpose::Calibration, 1, 0);
    for (int d = 1; d <= n / 2; ++d) {
        double total = 0.0;
        std::size_t used = 0;
        for (std::size_t k = 0; k < samples_per_ring; ++k) {
            const double t = pick.uniform() * span_s;
            const int i = static_cast<int>(pick.uniform() * n) % n;
            const int j = (i + d) % n;
            const SwitchContext ctx{angular_separation(formation, i, j, t), range_to_master(formation, j, t)};
            const SwitchSample s = model.sample(i, j, ctx);
            if (s.unavailable) continue;
            total += static_cast<double>(s.tau);
            ++used;
        }
        if (used == 0) throw std::runtime_error("calibration: every sampled switch was unavailable");
        means[static_cast<std::size_t>(d)] = total / static_cast<double>(used);
    }
    return means;
}

} // namespace acisim
