#include "acisim/geometry.hpp"

#include <algorithm>
#include <numbers>
#include <stdexcept>

namespace acisim {

void Formation::validate() const {
    if (n_slaves < 1 || n_slaves > 6) throw std::invalid_argument("n_slaves must lie in [1, 6] (one hexagon ring)");
    if (!(hex_radius_m > 0.0)) throw std::invalid_argument("hex_radius must be > 0");
    if (loiter_radius_m < 0.0 || loiter_radius_m >= hex_radius_m) {
        throw std::invalid_argument("loiter_radius must lie in [0, hex_radius)");
    }
    if (!phase_offsets.empty() && static_cast<int>(phase_offsets.size()) != n_slaves) {
        throw std::invalid_argument("phase_offsets must have one entry per slave");
    }
}

double Formation::phase(int i) const {
    if (!phase_offsets.empty()) return phase_offsets[static_cast<std::size_t>(i)];
    return 2.0 * std::numbers::pi * i / n_slaves;
}

Vec3 Formation::formation_point(int i) const {
    const double a = std::numbers::pi / 3.0 * i;
    return master_pos + Vec3{std::cos(a), std::sin(a), 0.0} * hex_radius_m;
}

Vec3 slave_position(const Formation& f, int i, double t_s) {
    if (i < 0 || i >= f.n_slaves) throw std::out_of_range("slave index out of range");
    const double a = f.phase(i) + f.loiter_rate_rad_s * t_s;
    return f.formation_point(i) + Vec3{std::cos(a), std::sin(a), 0.0} * f.loiter_radius_m;
}

double range_to_master(const Formation& f, int i, double t_s) { return (slave_position(f, i, t_s) - f.master_pos).norm(); }

namespace {

double angle_between(const Vec3& a, const Vec3& b) {
    const double c = a.dot(b) / (a.norm() * b.norm());
    return std::acos(std::clamp(c, -1.0, 1.0));
}

} // namespace

double angular_separation(const Formation& f, int i, int j, double t_s) {
    if (i == j) throw std::invalid_argument("angular_separation needs two distinct slaves");
    return angle_between(slave_position(f, i, t_s) - f.master_pos, slave_position(f, j, t_s) - f.master_pos);
}

GeometrySnapshot::GeometrySnapshot(const Formation& f, double t_s) {
    const auto n = static_cast<std::size_t>(f.n_slaves);
    std::vector<Vec3> los(n);
    ranges_.resize(n);
    theta_.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        los[i] = slave_position(f, static_cast<int>(i), t_s) - f.master_pos;
        ranges_[i] = los[i].norm();
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double th = angle_between(los[i], los[j]);
            theta_[i * n + j] = th;
            theta_[j * n + i] = th;
        }
    }
}

} // namespace acisim
