#include "acisim/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <numeric>
#include <sstream>

namespace acisim {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(std::string_view text) {
    T v{};
    const auto* end = text.data() + text.size();
    const auto [p, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || p != end) throw std::invalid_argument("'" + std::string(text) + "' is not a valid number");
    if constexpr (std::is_floating_point_v<T>) {
        if (!std::isfinite(v)) throw std::invalid_argument("'" + std::string(text) + "' is not finite");
    }
    return v;
}

template <class T>
std::string format_number(T v) {
    char buf[64];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

// Per-type text conversion.
template <class T>
struct Codec;

template <>
struct Codec<double> {
    static double parse(std::string_view s) { return parse_number<double>(s); }
    static std::string format(double v) { return format_number(v); }
};
template <>
struct Codec<int> {
    static int parse(std::string_view s) { return parse_number<int>(s); }
    static std::string format(int v) { return format_number(v); }
};
template <>
struct Codec<std::int64_t> {
    static std::int64_t parse(std::string_view s) { return parse_number<std::int64_t>(s); }
    static std::string format(std::int64_t v) { return format_number(v); }
};
template <>
struct Codec<std::uint64_t> {
    static std::uint64_t parse(std::string_view s) { return parse_number<std::uint64_t>(s); }
    static std::string format(std::uint64_t v) { return format_number(v); }
};
template <>
struct Codec<bool> {
    static bool parse(std::string_view s) {
        if (s == "true" || s == "1") return true;
        if (s == "false" || s == "0") return false;
        throw std::invalid_argument("'" + std::string(s) + "' is not a boolean (true | false)");
    }
    static std::string format(bool v) { return v ? "true" : "false"; }
};
template <>
struct Codec<std::string> {
    static std::string parse(std::string_view s) {
        if (s.empty()) throw std::invalid_argument("value must not be empty");
        return std::string(s);
    }
    static std::string format(const std::string& v) { return v; }
};
template <>
struct Codec<PolicyKind> {
    static PolicyKind parse(std::string_view s) { return parse_policy(s); }
    static std::string format(PolicyKind v) { return std::string(to_string(v)); }
};
template <>
struct Codec<SwitchModelKind> {
    static SwitchModelKind parse(std::string_view s) { return parse_switch_model(s); }
    static std::string format(SwitchModelKind v) { return std::string(to_string(v)); }
};
template <>
struct Codec<std::vector<double>> {
    static std::vector<double> parse(std::string_view s) {
        std::vector<double> out;
        while (!s.empty()) {
            const auto comma = s.find(',');
            out.push_back(parse_number<double>(trim(s.substr(0, comma))));
            if (comma == std::string_view::npos) break;
            s.remove_prefix(comma + 1);
        }
        return out;
    }
    static std::string format(const std::vector<double>& v) {
        std::string out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i > 0) out += ", ";
            out += format_number(v[i]);
        }
        return out;
    }
};

struct Key {
    std::string section;
    std::string name;
    std::function<std::string(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, std::string_view)> set;

    std::string path() const { return section + "." + name; }
};

template <class T>
Key field(const char* section, const char* name, T ExperimentConfig::*member) {
    return Key{section, name, [member](const ExperimentConfig& c) { return Codec<T>::format(c.*member); },
               [member](ExperimentConfig& c, std::string_view v) { c.*member = Codec<T>::parse(v); }};
}

const std::vector<Key>& registry() {
    using C = ExperimentConfig;
    static const std::vector<Key> keys = {
        field("experiment", "scenario", &C::scenario),
        field("experiment", "policy", &C::policy),
        field("experiment", "switch_model", &C::switch_model),
        field("experiment", "horizon", &C::horizon),
        field("experiment", "replications", &C::replications),
        field("experiment", "seed", &C::seed),
        field("experiment", "warmup_fraction", &C::warmup_fraction),
        field("experiment", "trace_stride", &C::trace_stride),
        field("experiment", "audit", &C::audit),

        field("queueing", "n_slaves", &C::n_slaves),
        field("queueing", "slot_len", &C::slot_len),
        field("queueing", "arrival_rate", &C::arrival_rate),
        field("queueing", "arrival_weights", &C::arrival_weights),
        field("queueing", "packet_size", &C::packet_size),

        field("policy", "beta", &C::beta),
        field("policy", "gamma", &C::gamma),
        field("policy", "frame_len", &C::frame_len),
        field("policy", "proc_overhead", &C::proc_overhead),
        field("policy", "halt_outage_slots", &C::halt_outage_slots),
        field("policy", "halt_shortfall_factor", &C::halt_shortfall_factor),
        field("policy", "halt_dominance_margin", &C::halt_dominance_margin),

        field("channel", "z_master", &C::z_master),
        field("channel", "aperture_master", &C::aperture_master),
        field("channel", "aperture_slave", &C::aperture_slave),
        field("channel", "beam_radius_hop1", &C::beam_radius_hop1),
        field("channel", "beam_radius_hop2", &C::beam_radius_hop2),
        field("channel", "extinction", &C::extinction),
        field("channel", "log_amp_var", &C::log_amp_var),
        field("channel", "sigma_p", &C::sigma_p),
        field("channel", "sigma_theta", &C::sigma_theta),
        field("channel", "sigma_turb", &C::sigma_turb),
        field("channel", "fov_half_angle", &C::fov_half_angle),
        field("channel", "reflectivity", &C::reflectivity),
        field("channel", "responsivity", &C::responsivity),
        field("channel", "tx_power_dbm", &C::tx_power_dbm),
        field("channel", "noise_std", &C::noise_std),
        field("channel", "efficiency", &C::efficiency),
        field("channel", "bandwidth", &C::bandwidth),
        field("channel", "snr_gap", &C::snr_gap),
        field("channel", "min_snr_db", &C::min_snr_db),
        field("channel", "throughput_cap", &C::throughput_cap),
        field("channel", "wavelength", &C::wavelength),
        field("channel", "cn2_ground", &C::cn2_ground),

        field("mobility", "hex_radius", &C::hex_radius),
        field("mobility", "loiter_radius", &C::loiter_radius),
        field("mobility", "loiter_rate", &C::loiter_rate),

        field("switching", "v_max", &C::v_max),
        field("switching", "a_max", &C::a_max),
        field("switching", "j_max", &C::j_max),
        field("switching", "t_pilot", &C::t_pilot),
        field("switching", "t_fsm", &C::t_fsm),
        field("switching", "p_base", &C::p_base),
        field("switching", "p_floor", &C::p_floor),
        field("switching", "k_cap", &C::k_cap),
        field("switching", "phi_global", &C::phi_global),
        field("switching", "phi_target", &C::phi_target),
        field("switching", "ar_innovation_std", &C::ar_innovation_std),
        field("switching", "multiplier_cap", &C::multiplier_cap),
        field("switching", "switch_time_scale", &C::switch_time_scale),
        field("switching", "calibration_samples", &C::calibration_samples),
    };
    return keys;
}

/// Find a key by bare name or "section.name"; `section` (may be empty) must match when given.
const Key& find_key(std::string_view name, std::string_view section, int line) {
    std::string_view bare = name;
    if (const auto dot = name.find('.'); dot != std::string_view::npos) {
        section = name.substr(0, dot);
        bare = name.substr(dot + 1);
    }
    for (const auto& k : registry()) {
        if (k.name != bare) continue;
        if (!section.empty() && k.section != section) {
            throw ConfigError(std::string(name),
                              "key '" + std::string(bare) + "' belongs to section [" + k.section + "], not [" +
                                  std::string(section) + "]",
                              line);
        }
        return k;
    }
    throw ConfigError(std::string(name), "unknown key '" + std::string(name) + "'", line);
}

void assign(ExperimentConfig& cfg, const Key& key, std::string_view value, int line) {
    try {
        key.set(cfg, value);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(key.path(), key.path() + ": " + e.what(), line);
    } catch (const std::out_of_range& e) {
        throw ConfigError(key.path(), key.path() + ": value out of range", line);
    }
}

// Bound checks: each failure names the field path, the bound and the offending value.
template <class T>
void require(bool ok, const char* path, const std::string& bound, T value) {
    if (!ok) {
        std::ostringstream os;
        os << path << " must be " << bound << " (got " << value << ")";
        throw ConfigError(path, os.str());
    }
}

} // namespace

void ExperimentConfig::validate() const {
    require(!scenario.empty(), "experiment.scenario", "non-empty", "''");
    require(horizon >= 1, "experiment.horizon", ">= 1", horizon);
    require(replications >= 1 && replications <= 10000, "experiment.replications", "in [1, 10000]", replications);
    require(warmup_fraction >= 0.0 && warmup_fraction < 1.0, "experiment.warmup_fraction", "in [0, 1)", warmup_fraction);
    require(trace_stride >= 1, "experiment.trace_stride", ">= 1", trace_stride);

    require(n_slaves >= 1 && n_slaves <= 6, "queueing.n_slaves", "in [1, 6] (hexagon formation)", n_slaves);
    require(slot_len > 0.0 && slot_len <= 1.0, "queueing.slot_len", "in (0, 1] s", slot_len);
    require(arrival_rate >= 0.0, "queueing.arrival_rate", ">= 0", arrival_rate);
    if (!arrival_weights.empty()) {
        require(arrival_weights.size() == static_cast<std::size_t>(n_slaves), "queueing.arrival_weights",
                "one entry per queue (n_slaves)", arrival_weights.size());
        double sum = 0.0;
        for (double w : arrival_weights) {
            require(w >= 0.0, "queueing.arrival_weights", "all >= 0", w);
            sum += w;
        }
        require(sum > 0.0, "queueing.arrival_weights", "of positive sum", sum);
    }
    require(packet_size >= 1, "queueing.packet_size", ">= 1 bit", packet_size);

    require(beta >= 0.0, "policy.beta", ">= 0", beta);
    require(gamma >= 0.0, "policy.gamma", ">= 0", gamma);
    require(frame_len >= 1 && frame_len <= 100000, "policy.frame_len", "in [1, 100000] slots", frame_len);
    require(proc_overhead >= 0.0 && proc_overhead < slot_len, "policy.proc_overhead", "in [0, slot_len)", proc_overhead);
    require(halt_outage_slots >= 1, "policy.halt_outage_slots", ">= 1", halt_outage_slots);
    require(halt_shortfall_factor >= 0.0 && halt_shortfall_factor <= 1.0, "policy.halt_shortfall_factor", "in [0, 1]",
            halt_shortfall_factor);
    require(halt_dominance_margin >= 1.0, "policy.halt_dominance_margin", ">= 1", halt_dominance_margin);

    require(z_master > 0.0, "channel.z_master", "> 0 m", z_master);
    require(aperture_master > 0.0, "channel.aperture_master", "> 0 m", aperture_master);
    require(aperture_slave > 0.0, "channel.aperture_slave", "> 0 m", aperture_slave);
    require(beam_radius_hop1 > 0.0, "channel.beam_radius_hop1", "> 0 m", beam_radius_hop1);
    require(beam_radius_hop2 > 0.0, "channel.beam_radius_hop2", "> 0 m", beam_radius_hop2);
    require(extinction >= 0.0, "channel.extinction", ">= 0 1/m", extinction);
    require(log_amp_var >= 0.0 && log_amp_var <= 2.0, "channel.log_amp_var", "in [0, 2]", log_amp_var);
    require(sigma_p >= 0.0, "channel.sigma_p", ">= 0 m", sigma_p);
    require(sigma_theta >= 0.0, "channel.sigma_theta", ">= 0 rad", sigma_theta);
    require(sigma_turb >= 0.0, "channel.sigma_turb", ">= 0 rad", sigma_turb);
    require(fov_half_angle > 0.0 && fov_half_angle < std::numbers::pi / 2, "channel.fov_half_angle", "in (0, pi/2) rad",
            fov_half_angle);
    require(reflectivity > 0.0 && reflectivity <= 1.0, "channel.reflectivity", "in (0, 1]", reflectivity);
    require(responsivity > 0.0, "channel.responsivity", "> 0 A/W", responsivity);
    require(tx_power_dbm >= -30.0 && tx_power_dbm <= 60.0, "channel.tx_power_dbm", "in [-30, 60] dBm", tx_power_dbm);
    require(noise_std > 0.0, "channel.noise_std", "> 0 A", noise_std);
    require(efficiency > 0.0 && efficiency <= 1.0, "channel.efficiency", "in (0, 1]", efficiency);
    require(bandwidth > 0.0, "channel.bandwidth", "> 0 Hz", bandwidth);
    require(snr_gap >= 1.0, "channel.snr_gap", ">= 1", snr_gap);
    require(min_snr_db >= -50.0 && min_snr_db <= 100.0, "channel.min_snr_db", "in [-50, 100] dB", min_snr_db);
    require(throughput_cap > 0.0, "channel.throughput_cap", "> 0 bit/s", throughput_cap);
    require(wavelength > 0.0 && wavelength < 1e-4, "channel.wavelength", "in (0, 1e-4) m", wavelength);
    require(cn2_ground > 0.0, "channel.cn2_ground", "> 0 m^(-2/3)", cn2_ground);

    require(hex_radius > 0.0, "mobility.hex_radius", "> 0 m", hex_radius);
    require(loiter_radius >= 0.0 && loiter_radius < hex_radius, "mobility.loiter_radius", "in [0, hex_radius) m",
            loiter_radius);
    require(loiter_rate >= 0.0, "mobility.loiter_rate", ">= 0 rad/s", loiter_rate);

    require(v_max > 0.0, "switching.v_max", "> 0 deg/s", v_max);
    require(a_max > 0.0, "switching.a_max", "> 0 deg/s^2", a_max);
    require(j_max > 0.0, "switching.j_max", "> 0 deg/s^3", j_max);
    require(t_pilot >= 0.0, "switching.t_pilot", ">= 0 s", t_pilot);
    require(t_fsm >= 0.0, "switching.t_fsm", ">= 0 s", t_fsm);
    require(t_pilot + t_fsm > 0.0, "switching.t_fsm", "such that t_fsm + t_pilot > 0", t_fsm);
    require(p_base > 0.0 && p_base <= 1.0, "switching.p_base", "in (0, 1]", p_base);
    require(p_floor >= 0.0 && p_floor <= p_base, "switching.p_floor", "in [0, p_base]", p_floor);
    require(k_cap >= 1, "switching.k_cap", ">= 1", k_cap);
    require(phi_global >= 0.0 && phi_global < 1.0, "switching.phi_global", "in [0, 1)", phi_global);
    require(phi_target >= 0.0 && phi_target < 1.0, "switching.phi_target", "in [0, 1)", phi_target);
    require(ar_innovation_std >= 0.0, "switching.ar_innovation_std", ">= 0", ar_innovation_std);
    require(multiplier_cap >= 1.0, "switching.multiplier_cap", ">= 1", multiplier_cap);
    require(switch_time_scale > 0.0, "switching.switch_time_scale", "> 0", switch_time_scale);
    require(calibration_samples >= 1, "switching.calibration_samples", ">= 1", calibration_samples);
}

HopParams ExperimentConfig::hop1() const {
    HopParams h;
    h.distance_m = z_master;
    h.aperture_radius_m = aperture_master;
    h.beam_radius_m = beam_radius_hop1;
    h.extinction_per_m = extinction;
    h.log_amp_var = log_amp_var;
    // Ground pointing and master platform jitter add per axis.
    h.lateral_jitter_var = 2.0 * sigma_p * sigma_p;
    h.angular_jitter_var = 0.0;
    h.fov_half_angle_rad = 0.0;
    return h;
}

HopParams ExperimentConfig::hop2() const {
    HopParams h;
    h.distance_m = hex_radius;  // replaced by the geometry every slot
    h.aperture_radius_m = aperture_slave;
    h.beam_radius_m = beam_radius_hop2;
    h.extinction_per_m = extinction;
    h.log_amp_var = log_amp_var;
    h.lateral_jitter_var = 2.0 * sigma_p * sigma_p;
    // Master pointing enters twice (reflected beam), plus the slave's own and turbulence.
    h.angular_jitter_var = 4.0 * sigma_theta * sigma_theta + sigma_theta * sigma_theta + sigma_turb * sigma_turb;
    h.fov_half_angle_rad = fov_half_angle;
    return h;
}

LinkParams ExperimentConfig::link() const { return LinkParams{hop1(), hop2(), reflectivity}; }

RadioParams ExperimentConfig::radio() const {
    RadioParams r;
    r.responsivity = responsivity;
    r.tx_power_w = dbm_to_watts(tx_power_dbm);
    r.noise_std = noise_std;
    r.efficiency = efficiency;
    r.bandwidth_hz = bandwidth;
    r.snr_gap = snr_gap;
    r.min_snr = std::pow(10.0, min_snr_db / 10.0);
    r.throughput_cap_bps = throughput_cap;
    return r;
}

Formation ExperimentConfig::formation() const {
    Formation f;
    f.n_slaves = n_slaves;
    f.master_pos = Vec3{0.0, 0.0, z_master};
    f.hex_radius_m = hex_radius;
    f.loiter_radius_m = loiter_radius;
    f.loiter_rate_rad_s = loiter_rate;
    return f;
}

SwitchModelConfig ExperimentConfig::switch_config() const {
    SwitchModelConfig s;
    s.kind = switch_model;
    s.gimbal = GimbalLimits{v_max, a_max, j_max};
    s.acquisition = AcquisitionParams{t_fsm, t_pilot, p_base, p_floor, k_cap};
    const HopParams h2 = hop2();
    s.lateral_jitter_var = h2.lateral_jitter_var;
    s.angular_jitter_var = h2.angular_jitter_var;
    s.fov_half_angle_rad = fov_half_angle;
    s.phi_global = phi_global;
    s.phi_target = phi_target;
    s.innovation_std = ar_innovation_std;
    s.multiplier_cap = multiplier_cap;
    s.time_scale = switch_time_scale;
    return s;
}

PolicyConfig ExperimentConfig::policy_config() const {
    PolicyConfig p;
    p.beta = beta;
    p.gamma = gamma;
    p.frame_len = frame_len;
    p.proc_overhead = proc_overhead;
    p.halt = EarlyHaltThresholds{halt_outage_slots, halt_shortfall_factor, halt_dominance_margin};
    return p;
}

std::vector<double> ExperimentConfig::per_queue_arrival_rates() const {
    const auto n = static_cast<std::size_t>(n_slaves);
    std::vector<double> w = arrival_weights.empty() ? std::vector<double>(n, 1.0) : arrival_weights;
    const double sum = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& x : w) x = arrival_rate * x / sum;
    return w;
}

Slot ExperimentConfig::warmup_slots() const {
    return static_cast<Slot>(std::floor(warmup_fraction * static_cast<double>(horizon)));
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line = 0;
    std::vector<std::string> seen;
    while (std::getline(in, raw)) {
        ++line;
        std::string_view s = raw;
        if (const auto hash = s.find_first_of("#;"); hash != std::string_view::npos) s = s.substr(0, hash);
        s = trim(s);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError("", "malformed section header '" + std::string(s) + "'", line);
            section = std::string(trim(s.substr(1, s.size() - 2)));
            const auto& keys = registry();
            if (std::none_of(keys.begin(), keys.end(), [&](const Key& k) { return k.section == section; })) {
                throw ConfigError(section, "unknown section [" + section + "]", line);
            }
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("", "expected 'key = value', got '" + std::string(s) + "'", line);
        }
        const auto name = trim(s.substr(0, eq));
        const auto value = trim(s.substr(eq + 1));
        if (name.empty()) throw ConfigError("", "missing key before '='", line);
        const Key& key = find_key(name, section, line);
        if (std::find(seen.begin(), seen.end(), key.path()) != seen.end()) {
            throw ConfigError(key.path(), "duplicate key '" + key.path() + "'", line);
        }
        seen.push_back(key.path());
        assign(cfg, key, value, line);
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig parse_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("", "cannot open config file '" + file.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("", "override '" + assignment + "' is not key=value");
    const std::string_view a = assignment;
    const Key& key = find_key(trim(a.substr(0, eq)), {}, 0);
    assign(cfg, key, trim(a.substr(eq + 1)), 0);
}

std::string emit_config(const ExperimentConfig& cfg) {
    std::string out;
    std::string section;
    for (const auto& k : registry()) {
        if (k.section != section) {
            if (!section.empty()) out += "\n";
            section = k.section;
            out += "[" + section + "]\n";
        }
        out += k.name + " = " + k.get(cfg) + "\n";
    }
    return out;
}

std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const auto& k : registry()) out.push_back(k.path());
    return out;
}

} // namespace acisim
