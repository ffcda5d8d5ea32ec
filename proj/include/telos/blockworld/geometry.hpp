#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace telos {

inline constexpr std::size_t kNumObjects = 5;

using Vec3 = std::array<double, 3>;

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }

inline double norm(const Vec3& a) { return std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]); }
inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }
inline double horizontal_distance(const Vec3& a, const Vec3& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

// Scene scale shared by the simulator and the predicate/goal definitions.
// Units are meters; a "tick" is one simulator step.
struct WorldGeometry {
  double block_size = 0.05;
  double table_z = 0.4;
  double x_min = -0.25, x_max = 0.25;
  double y_min = -0.35, y_max = 0.35;
  double gripper_z_max = 0.75;

  double rest_z() const { return table_z + 0.5 * block_size; }
  double level_z(std::size_t level) const { return rest_z() + static_cast<double>(level) * block_size; }
};

}  // namespace telos
