#include "acisim/fso_channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace acisim {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

double standard_normal(StreamRng& rng) {
    std::normal_distribution<double> n01(0.0, 1.0);
    return n01(rng);
}

} // namespace

void HopParams::validate(const char* name) const {
    const std::string n(name);
    require(distance_m > 0.0, n + ".distance must be > 0");
    require(aperture_radius_m > 0.0, n + ".aperture_radius must be > 0");
    require(beam_radius_m > 0.0, n + ".beam_radius must be > 0");
    require(extinction_per_m >= 0.0, n + ".extinction must be >= 0");
    require(log_amp_var >= 0.0, n + ".log_amp_var must be >= 0");
    require(lateral_jitter_var >= 0.0, n + ".lateral_jitter_var must be >= 0");
    require(angular_jitter_var >= 0.0, n + ".angular_jitter_var must be >= 0");
    require(fov_half_angle_rad >= 0.0, n + ".fov_half_angle must be >= 0");
}

void RadioParams::validate() const {
    require(responsivity > 0.0, "responsivity must be > 0");
    require(tx_power_w > 0.0, "tx_power must be > 0");
    require(noise_std > 0.0, "noise_std must be > 0");
    require(efficiency > 0.0, "efficiency must be > 0");
    require(bandwidth_hz > 0.0, "bandwidth must be > 0");
    require(snr_gap >= 1.0, "snr_gap must be >= 1");
    require(min_snr > 0.0, "min_snr must be > 0");
    require(throughput_cap_bps > 0.0, "throughput_cap must be > 0");
}

double path_loss(double extinction_per_m, double distance_m) { return std::exp(-extinction_per_m * distance_m); }

double turbulence_sample(double log_amp_var, StreamRng& rng) {
    if (log_amp_var == 0.0) return 1.0;
    const double x = -2.0 * log_amp_var + 2.0 * std::sqrt(log_amp_var) * standard_normal(rng);
    return std::exp(x);
}

Coupling geometric_coupling(double aperture_radius_m, double beam_radius_m) {
    const double nu = std::sqrt(std::numbers::pi) * aperture_radius_m / (std::numbers::sqrt2 * beam_radius_m);
    const double e = std::erf(nu);
    return {nu, e * e};
}

double equivalent_beam_width_sq(double beam_radius_m, double nu) {
    const double ratio = std::numbers::pi * std::erf(nu) / (2.0 * nu * std::exp(-nu * nu));
    return beam_radius_m * beam_radius_m * std::sqrt(ratio);
}

double pointing_loss(double radial_error_m, double beam_radius_m, double nu) {
    const double weq2 = equivalent_beam_width_sq(beam_radius_m, nu);
    return std::exp(-2.0 * radial_error_m * radial_error_m / weq2);
}

double rayleigh_error(double per_axis_var, StreamRng& rng) {
    if (per_axis_var == 0.0) return 0.0;
    const double s = std::sqrt(per_axis_var);
    const double x = s * standard_normal(rng);
    const double y = s * standard_normal(rng);
    return std::hypot(x, y);
}

RadialError hop2_error(double lateral_var, double angular_var, double distance_m, double fov_half_angle_rad,
                       StreamRng& rng) {
    const double sl = std::sqrt(lateral_var);
    const double sa = std::sqrt(angular_var);
    // Four draws in fixed order: lateral x, lateral y, angular x, angular y.
    const double lx = sl * standard_normal(rng);
    const double ly = sl * standard_normal(rng);
    const double ax = sa * standard_normal(rng);
    const double ay = sa * standard_normal(rng);
    const double r = std::hypot(lx + distance_m * ax, ly + distance_m * ay);
    const bool miss = fov_half_angle_rad > 0.0 && r > distance_m * fov_half_angle_rad;
    return {r, miss};
}

double fov_miss_probability(double lateral_var, double angular_var, double distance_m, double fov_half_angle_rad) {
    if (fov_half_angle_rad <= 0.0) return 0.0;
    const double var = lateral_var + distance_m * distance_m * angular_var;
    if (var == 0.0) return 0.0;
    const double gate = distance_m * fov_half_angle_rad;
    return std::exp(-gate * gate / (2.0 * var));
}

HopDraw sample_hop(const HopParams& hop, double distance_m, StreamRng& rng) {
    HopDraw d;
    d.h_path = path_loss(hop.extinction_per_m, distance_m);
    d.h_turb = turbulence_sample(hop.log_amp_var, rng);
    const Coupling c = geometric_coupling(hop.aperture_radius_m, hop.beam_radius_m);
    d.h_geom = c.a0;
    if (hop.has_fov_gate() || hop.angular_jitter_var > 0.0) {
        const RadialError e =
            hop2_error(hop.lateral_jitter_var, hop.angular_jitter_var, distance_m, hop.fov_half_angle_rad, rng);
        d.radial_error_m = e.r_m;
        d.fov_miss = e.fov_miss;
    } else {
        d.radial_error_m = rayleigh_error(hop.lateral_jitter_var, rng);
    }
    d.h_point = pointing_loss(d.radial_error_m, hop.beam_radius_m, c.nu);
    return d;
}

ChannelDraw combine_hops(const HopDraw& hop1, const HopDraw& hop2, double rho, const RadioParams& radio) {
    ChannelDraw out;
    out.hop1 = hop1;
    out.hop2 = hop2;
    out.e2e_gain = (hop1.fov_miss || hop2.fov_miss) ? 0.0 : rho * hop1.gain() * hop2.gain();
    out.rate_bps = capped_rate(out.e2e_gain, radio);
    return out;
}

ChannelDraw e2e_gain_sample(const HopParams& hop1, const HopParams& hop2, double rho, StreamRng& rng) {
    ChannelDraw out;
    out.hop1 = sample_hop(hop1, hop1.distance_m, rng);
    out.hop2 = sample_hop(hop2, hop2.distance_m, rng);
    out.e2e_gain = (out.hop1.fov_miss || out.hop2.fov_miss) ? 0.0 : rho * out.hop1.gain() * out.hop2.gain();
    return out;
}

double gain_threshold(double min_snr, double noise_std, double responsivity, double tx_power_w) {
    return std::sqrt(min_snr) * noise_std / (responsivity * tx_power_w);
}

double snr_from_gain(double gain, const RadioParams& radio) {
    const double amp = radio.responsivity * radio.tx_power_w * gain / radio.noise_std;
    return amp * amp;
}

double snr_and_rate(double gain, const RadioParams& radio) {
    if (gain <= 0.0) return 0.0;
    const double snr = snr_from_gain(gain, radio);
    if (snr < radio.min_snr) return 0.0;
    return radio.efficiency * radio.bandwidth_hz * std::log2(1.0 + snr / radio.snr_gap);
}

double capped_rate(double gain, const RadioParams& radio) {
    return std::min(radio.throughput_cap_bps, snr_and_rate(gain, radio));
}

double dbm_to_watts(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }

std::vector<double> sample_gains(const LinkParams& link, std::size_t n, std::uint64_t seed) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        StreamRng rng(seed, StreamPurpose::MonteCarlo, 0, i);
        out[i] = e2e_gain_sample(link.hop1, link.hop2, link.reflectivity, rng).e2e_gain;
    }
    return out;
}

OutageEstimate outage_probability(const LinkParams& link, double h_th, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw std::invalid_argument("outage_probability needs at least one sample");
    const std::vector<double> gains = sample_gains(link, n, seed);
    const double thresholds[] = {h_th};
    return outage_curve(gains, thresholds).front();
}

std::vector<OutageEstimate> outage_curve(std::span<const double> gains, std::span<const double> thresholds) {
    std::vector<double> sorted(gains.begin(), gains.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    std::vector<OutageEstimate> out;
    out.reserve(thresholds.size());
    for (double h : thresholds) {
        const auto below = std::lower_bound(sorted.begin(), sorted.end(), h) - sorted.begin();
        const double p = static_cast<double>(below) / n;
        out.push_back({h, p, 3.0 * std::sqrt(p * (1.0 - p) / n)});
    }
    return out;
}

std::vector<HistogramBin> gain_pdf(std::span<const double> gains, double lo, double hi, std::size_t bins) {
    if (!(hi > lo) || bins == 0) throw std::invalid_argument("gain_pdf needs hi > lo and bins > 0");
    std::vector<std::int64_t> counts(bins, 0);
    const double width = (hi - lo) / static_cast<double>(bins);
    for (double g : gains) {
        if (g < lo || g >= hi) continue;
        auto k = static_cast<std::size_t>((g - lo) / width);
        counts[std::min(k, bins - 1)] += 1;
    }
    std::vector<HistogramBin> out(bins);
    const double n = static_cast<double>(gains.size());
    for (std::size_t k = 0; k < bins; ++k) {
        out[k].left = lo + width * static_cast<double>(k);
        out[k].right = lo + width * static_cast<double>(k + 1);
        out[k].density = n > 0 ? static_cast<double>(counts[k]) / (n * width) : 0.0;
    }
    return out;
}

Profile hv_cn2_profile(double ground_cn2, double v_rms) {
    return [ground_cn2, v_rms](double h) {
        const double w = v_rms / 27.0;
        return 0.00594 * w * w * std::pow(1e-5 * h, 10.0) * std::exp(-h / 1000.0) +
               2.7e-16 * std::exp(-h / 1500.0) + ground_cn2 * std::exp(-h / 100.0);
    };
}

Profile bufton_wind_profile(double ground_speed, double peak_speed, double peak_altitude, double peak_width) {
    return [=](double h) {
        const double z = (h - peak_altitude) / peak_width;
        return ground_speed + peak_speed * std::exp(-z * z);
    };
}

double coherence_time(const Profile& cn2, const Profile& wind, double wavelength_m, double h_lo, double h_hi) {
    if (!(wavelength_m > 0.0) || !(h_hi > h_lo)) throw std::invalid_argument("coherence_time: bad path or wavelength");
    auto integrand = [&](double h) { return cn2(h) * std::pow(wind(h), 5.0 / 3.0); };
    double err = 0.0;
    const double integral =
        boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, h_lo, h_hi, 15, 1e-10, &err);
    if (!std::isfinite(integral) || integral <= 0.0 || err > 1e-6 * std::abs(integral)) {
        throw std::runtime_error("coherence_time: quadrature did not converge");
    }
    const double k = 2.0 * std::numbers::pi / wavelength_m;
    return std::pow(2.91 * k * k * integral, -3.0 / 5.0);
}

} // namespace acisim
