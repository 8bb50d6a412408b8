#pragma once

#include <array>
#include <cmath>
#include <vector>

namespace acisim {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }
};

/// Master fixed above the ground station; slaves loiter on horizontal circles
/// around the vertices of a regular hexagon centred on the master, in the
/// master's horizontal plane.
struct Formation {
    int n_slaves = 6;
    Vec3 master_pos{0.0, 0.0, 500.0};
    double hex_radius_m = 250.0;
    double loiter_radius_m = 150.0;
    double loiter_rate_rad_s = 0.1;
    std::vector<double> phase_offsets;  // empty -> i * 2 pi / N

    void validate() const;
    double phase(int i) const;
    Vec3 formation_point(int i) const;
};

Vec3 slave_position(const Formation& f, int i, double t_s);
double range_to_master(const Formation& f, int i, double t_s);
/// 3D angle at the master between the lines of sight to slaves i and j, in [0, pi].
/// Throws std::invalid_argument for i == j.
double angular_separation(const Formation& f, int i, int j, double t_s);

/// All slave positions and the pairwise geometry at one instant.
class GeometrySnapshot {
public:
    GeometrySnapshot(const Formation& f, double t_s);

    int size() const { return static_cast<int>(ranges_.size()); }
    double range(int i) const { return ranges_[static_cast<std::size_t>(i)]; }
    /// Radians; 0 on the diagonal.
    double theta(int i, int j) const { return theta_[static_cast<std::size_t>(i * size() + j)]; }

private:
    std::vector<double> ranges_;
    std::vector<double> theta_;
};

} // namespace acisim
