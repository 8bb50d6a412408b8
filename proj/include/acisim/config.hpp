#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "acisim/fso_channel.hpp"
#include "acisim/geometry.hpp"
#include "acisim/schedulers.hpp"
#include "acisim/switchover.hpp"

namespace acisim {

/// Bad configuration: unparsable text or a field outside its bounds.
/// `field` is the dotted path (e.g. "policy.beta"); `line` is 0 when unknown.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
          field_(std::move(field)), line_(line) {}

    const std::string& field() const { return field_; }
    int line() const { return line_; }

private:
    std::string field_;
    int line_;
};

/// Every knob of one experiment. Defaults are the nominal operating point:
/// N = 6, dt = 10.41 ms, L = 3, beta = gamma = 1, aggregate load 350 Mbps,
/// theta_FOV = 9 mrad, gimbal (120 deg/s, 600 deg/s^2, 4000 deg/s^3),
/// t_pilot = 1 ms, t_FSM = 3 ms, P_t = 22 dBm, sigma_p = 0.05 m, sigma_theta = 1 mrad.
struct ExperimentConfig {
    // [experiment]
    std::string scenario = "default";
    PolicyKind policy = PolicyKind::ACI;
    SwitchModelKind switch_model = SwitchModelKind::FSO;
    std::int64_t horizon = 100000;
    int replications = 10;
    std::uint64_t seed = 1;
    double warmup_fraction = 0.05;
    int trace_stride = 10;
    bool audit = false;

    // [queueing]
    int n_slaves = 6;
    double slot_len = 10.41e-3;
    double arrival_rate = 350e6;          // aggregate, bits/s
    std::vector<double> arrival_weights;  // empty -> uniform split
    std::int64_t packet_size = 12000;

    // [policy]
    double beta = 1.0;
    double gamma = 1.0;
    int frame_len = 3;
    double proc_overhead = 0.0;
    int halt_outage_slots = 2;
    double halt_shortfall_factor = 0.5;
    double halt_dominance_margin = 2.0;

    // [channel]
    double z_master = 500.0;
    double aperture_master = 0.1;
    double aperture_slave = 0.1;
    double beam_radius_hop1 = 0.5;
    double beam_radius_hop2 = 2.5;
    double extinction = 1e-4;
    double log_amp_var = 0.03;
    double sigma_p = 0.05;
    double sigma_theta = 1e-3;
    double sigma_turb = 0.5e-3;
    double fov_half_angle = 9e-3;
    double reflectivity = 0.95;
    double responsivity = 0.5;
    double tx_power_dbm = 22.0;
    double noise_std = 1e-7;
    double efficiency = 0.8;
    double bandwidth = 1e9;
    double snr_gap = 2.0;
    double min_snr_db = 20.0;
    double throughput_cap = 2.5e9;
    double wavelength = 1.55e-6;
    double cn2_ground = 1.7e-14;

    // [mobility]
    double hex_radius = 250.0;
    double loiter_radius = 150.0;
    double loiter_rate = 0.1;

    // [switching]
    double v_max = 120.0;
    double a_max = 600.0;
    double j_max = 4000.0;
    double t_pilot = 1e-3;
    double t_fsm = 3e-3;
    double p_base = 0.9;
    double p_floor = 0.05;
    std::int64_t k_cap = 50;
    double phi_global = 0.95;
    double phi_target = 0.9;
    double ar_innovation_std = 0.1;
    double multiplier_cap = 4.0;
    double switch_time_scale = 1.0;
    std::int64_t calibration_samples = 2000;

    /// Throws ConfigError naming the first offending field and its bound.
    void validate() const;

    HopParams hop1() const;
    HopParams hop2() const;
    LinkParams link() const;
    RadioParams radio() const;
    Formation formation() const;
    SwitchModelConfig switch_config() const;
    PolicyConfig policy_config() const;
    std::vector<double> per_queue_arrival_rates() const;
    Slot warmup_slots() const;

    bool operator==(const ExperimentConfig&) const = default;
};

/// Parse the key-value text format. Sections ("[policy]") are optional; a key
/// under a section must belong to it. Unknown keys are rejected.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config(const std::filesystem::path& file);

/// Apply one "key=value" (or "section.key=value") override in place.
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

/// Full resolved config in the same format; parse(emit(c)) == c.
std::string emit_config(const ExperimentConfig& cfg);

/// Dotted names of every known key, in emission order.
std::vector<std::string> config_keys();

} // namespace acisim
