#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "acisim/geometry.hpp"
#include "acisim/queueing.hpp"
#include "acisim/rng.hpp"

namespace acisim {

struct GimbalLimits {
    double v_max_deg_s = 120.0;
    double a_max_deg_s2 = 600.0;
    double j_max_deg_s3 = 4000.0;

    void validate() const;
};

/// T_acq = t_fsm + t_pilot per attempt; attempts K ~ Geometric(p) on {1, 2, ...}.
/// p = p_base * Pr[no hop-2 FOV miss at the target's current range]; a target
/// whose p falls below p_floor is rejected for this epoch.
struct AcquisitionParams {
    double t_fsm_s = 0.003;
    double t_pilot_s = 0.001;
    double p_base = 0.9;
    double p_floor = 0.05;
    std::int64_t k_cap = 50;

    double t_acq() const { return t_fsm_s + t_pilot_s; }
    void validate() const;
};

enum class SwitchModelKind { IID, Dependent, FSO };

std::string_view to_string(SwitchModelKind k);
SwitchModelKind parse_switch_model(std::string_view s);

struct SwitchModelConfig {
    SwitchModelKind kind = SwitchModelKind::FSO;
    GimbalLimits gimbal;
    AcquisitionParams acquisition;
    // Hop-2 error model used for the acquisition success probability.
    double lateral_jitter_var = 0.005;
    double angular_jitter_var = 5.25e-6;
    double fov_half_angle_rad = 9e-3;
    // AR(1) drift of log multipliers (Dependent); IID draws use the same
    // stationary marginal without memory.
    double phi_global = 0.95;
    double phi_target = 0.9;
    double innovation_std = 0.1;
    double multiplier_cap = 4.0;
    /// Scales every switching time (1 = nominal).
    double time_scale = 1.0;

    void validate() const;
};

/// Trapezoidal S-curve slew: theta / v_max + v_max / a_max + 4 a_max / j_max.
double slew_time(double theta_deg, const GimbalLimits& limits);

/// Number of acquisition attempts; std::nullopt when p == 0 (geometric rejection).
std::optional<std::int64_t> acquisition_rounds(double p, StreamRng& rng);

/// Geometry the switch model needs for one (i -> j) move.
struct SwitchContext {
    double theta_rad = 0.0;       // angular separation at the master
    double target_range_m = 0.0;  // Z_{2,j}(t)
};

struct SwitchSample {
    Slot tau = 0;
    double theta_deg = 0.0;
    std::int64_t attempts = 0;
    double multiplier = 1.0;
    bool failed = false;       // attempts hit k_cap; blackout consumed, no link
    bool unavailable = false;  // rejected before any blackout
};

/// Ring distance on the hexagon: min(|i - j|, N - |i - j|).
int ring_distance(int i, int j, int n);

class SwitchModel {
public:
    SwitchModel(SwitchModelConfig cfg, int n_queues, double slot_len_s, std::uint64_t stream_key);

    SwitchModelKind kind() const { return cfg_.kind; }
    const SwitchModelConfig& config() const { return cfg_; }
    int size() const { return n_; }
    double slot_len() const { return slot_len_; }

    /// Mean tau in slots per ring distance (index 1..N/2). Required for IID and Dependent.
    void set_ring_means(std::vector<double> means);
    const std::vector<double>& ring_means() const { return ring_means_; }

    /// Raw acquisition success probability at the target range; nullopt when below p_floor.
    std::optional<double> success_probability(double target_range_m) const;

    /// Realised switchover. tau_ii = 0. Advances the AR(1) state (Dependent).
    SwitchSample sample(int from, int to, const SwitchContext& ctx);

    /// Expected tau in slots for scoring; nullopt if the target is unavailable.
    std::optional<double> expected_tau(int from, int to, const SwitchContext& ctx) const;

    /// Upper bound on any realised or forecast tau.
    double tau_max() const;

    /// Current Dependent multiplier for a target (1 for other models).
    double current_multiplier(int to) const;
    double log_level_global() const { return level_global_; }
    double log_level_target(int to) const { return level_target_[static_cast<std::size_t>(to)]; }

private:
    double stationary_var_global() const;
    double stationary_var_target() const;
    double clamp_multiplier(double m) const;
    Slot ring_tau(int from, int to, double multiplier) const;

    SwitchModelConfig cfg_;
    int n_;
    double slot_len_;
    StreamRng rng_;
    std::vector<double> ring_means_;
    double level_global_ = 0.0;
    std::vector<double> level_target_;
};

/// Mean FSO tau per ring distance, averaged over uniformly random times within
/// `span_s` (one pre-pass, own stream). Index 0 is unused.
std::vector<double> calibrate_ring_means(const SwitchModelConfig& cfg, const Formation& formation, double slot_len_s,
                                         double span_s, std::size_t samples_per_ring, std::uint64_t seed);

} // namespace acisim
