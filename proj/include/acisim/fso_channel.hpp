#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "acisim/rng.hpp"

namespace acisim {

/// Optics and jitter of one hop. Hop 1 (ground -> master) has no FOV gate and a
/// fixed distance; hop 2 (master -> slave) gets its distance from the geometry
/// each slot.
struct HopParams {
    double distance_m = 500.0;
    double aperture_radius_m = 0.1;
    double beam_radius_m = 0.5;
    double extinction_per_m = 1e-4;
    double log_amp_var = 0.1;
    double lateral_jitter_var = 0.005;  // m^2 per axis
    double angular_jitter_var = 0.0;    // rad^2 per axis
    double fov_half_angle_rad = 0.0;    // 0 disables the gate

    bool has_fov_gate() const { return fov_half_angle_rad > 0.0; }
    void validate(const char* name) const;
};

struct RadioParams {
    double responsivity = 0.5;      // A/W
    double tx_power_w = 0.1585;     // 22 dBm
    double noise_std = 1e-7;        // A
    double efficiency = 0.8;
    double bandwidth_hz = 1e9;
    double snr_gap = 2.0;
    double min_snr = 100.0;         // 20 dB
    double throughput_cap_bps = 2.5e9;

    void validate() const;
};

/// One hop's factored gains for one slot.
struct HopDraw {
    double h_path = 1.0;
    double h_turb = 1.0;
    double h_geom = 1.0;
    double h_point = 1.0;
    double radial_error_m = 0.0;
    bool fov_miss = false;

    double gain() const { return fov_miss ? 0.0 : h_path * h_turb * h_geom * h_point; }
};

struct ChannelDraw {
    HopDraw hop1;
    HopDraw hop2;
    double e2e_gain = 0.0;
    double rate_bps = 0.0;
};

struct Coupling {
    double nu;
    double a0;
};

double path_loss(double extinction_per_m, double distance_m);
/// exp(X), X ~ N(-2V, 4V); exactly 1 for V == 0.
double turbulence_sample(double log_amp_var, StreamRng& rng);
Coupling geometric_coupling(double aperture_radius_m, double beam_radius_m);
/// w_eq^2 = w_z^2 sqrt(pi erf(nu) / (2 nu exp(-nu^2))).
double equivalent_beam_width_sq(double beam_radius_m, double nu);
double pointing_loss(double radial_error_m, double beam_radius_m, double nu);

struct RadialError {
    double r_m;
    bool fov_miss;
};

/// r = |delta_lat + Z theta_ang| with independent isotropic 2-axis Gaussians.
RadialError hop2_error(double lateral_var, double angular_var, double distance_m, double fov_half_angle_rad,
                       StreamRng& rng);
/// Rayleigh radial error with the given per-axis variance.
double rayleigh_error(double per_axis_var, StreamRng& rng);
/// Pr[r > Z theta_FOV] for the hop-2 error model (Rayleigh tail).
double fov_miss_probability(double lateral_var, double angular_var, double distance_m, double fov_half_angle_rad);

HopDraw sample_hop(const HopParams& hop, double distance_m, StreamRng& rng);
/// H = rho * H1 * H2, zero on a hop-2 FOV miss. Rate is left at 0; see snr_and_rate.
ChannelDraw e2e_gain_sample(const HopParams& hop1, const HopParams& hop2, double rho, StreamRng& rng);
ChannelDraw combine_hops(const HopDraw& hop1, const HopDraw& hop2, double rho, const RadioParams& radio);

/// h_th = sqrt(SNR_min) sigma_n / (R P_t).
double gain_threshold(double min_snr, double noise_std, double responsivity, double tx_power_w);
/// SNR = (R P_t H / sigma_n)^2.
double snr_from_gain(double gain, const RadioParams& radio);
/// eta B log2(1 + SNR / Gamma), or 0 when SNR < SNR_min. Not capped.
double snr_and_rate(double gain, const RadioParams& radio);
/// min(mu_bar, rate).
double capped_rate(double gain, const RadioParams& radio);

double dbm_to_watts(double dbm);

/// Everything needed to draw the end-to-end gain of one slave at a fixed hop-2 range.
struct LinkParams {
    HopParams hop1;
    HopParams hop2;
    double reflectivity = 0.95;
};

/// Common-random-numbers Monte Carlo: the same (seed, n) always yields the same
/// gain samples, so the estimate is exactly nondecreasing in h_th.
std::vector<double> sample_gains(const LinkParams& link, std::size_t n, std::uint64_t seed);

struct OutageEstimate {
    double h_th;
    double p_out;
    double ci_halfwidth;  // 3 binomial standard errors
};

OutageEstimate outage_probability(const LinkParams& link, double h_th, std::size_t n, std::uint64_t seed);
std::vector<OutageEstimate> outage_curve(std::span<const double> gains, std::span<const double> thresholds);

struct HistogramBin {
    double left;
    double right;
    double density;
};

/// Fixed-edge density histogram over [lo, hi); samples outside are counted in
/// the normalisation but not binned.
std::vector<HistogramBin> gain_pdf(std::span<const double> gains, double lo, double hi, std::size_t bins);

using Profile = std::function<double(double)>;

/// Hufnagel-Valley C_n^2(h) with the given ground term (HV-5/7 uses 1.7e-14 and v_rms = 21 m/s).
Profile hv_cn2_profile(double ground_cn2 = 1.7e-14, double v_rms = 21.0);
/// Bufton wind model v(h) = v_g + v_t exp(-((h - h_t) / L_t)^2).
Profile bufton_wind_profile(double ground_speed = 5.0, double peak_speed = 30.0, double peak_altitude = 9400.0,
                            double peak_width = 4800.0);

/// Greenwood coherence time [2.91 k^2 int C_n^2 v^{5/3} dh]^{-3/5} over [h_lo, h_hi].
/// Throws std::runtime_error if the adaptive quadrature does not converge.
double coherence_time(const Profile& cn2, const Profile& wind, double wavelength_m, double h_lo, double h_hi);

} // namespace acisim
