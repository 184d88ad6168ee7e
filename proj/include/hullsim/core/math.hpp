#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <array>
#include <cmath>
#include <limits>

namespace hullsim {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

// World frame: right-handed, +Y up. Avatars and objects look down local +Z.
inline Vec3 world_up() { return Vec3::UnitY(); }

// Rigid transform of a body-local point into world space.
struct Pose {
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();

  Vec3 apply(const Vec3& local) const { return position + orientation * local; }
  Vec3 rotate(const Vec3& local) const { return orientation * local; }
  Vec3 inverse_apply(const Vec3& world) const {
    return orientation.conjugate() * (world - position);
  }

  bool operator==(const Pose& other) const {
    return position == other.position && orientation.coeffs() == other.orientation.coeffs();
  }
};

// Euler angles in degrees, applied yaw (Y) then pitch (X) then roll (Z).
inline Quat quat_from_euler_deg(const Vec3& euler_deg) {
  const Quat qy(Eigen::AngleAxisd(deg_to_rad(euler_deg.y()), Vec3::UnitY()));
  const Quat qx(Eigen::AngleAxisd(deg_to_rad(euler_deg.x()), Vec3::UnitX()));
  const Quat qz(Eigen::AngleAxisd(deg_to_rad(euler_deg.z()), Vec3::UnitZ()));
  return (qy * qx * qz).normalized();
}

// Orientation whose local +Z points along `forward` and whose local +Y stays
// as close to `up` as possible (zero roll). `forward` must be non-zero.
Quat look_rotation(const Vec3& forward, const Vec3& up = world_up());

// Deterministic orthonormal tangent pair for a unit normal.
void tangent_basis(const Vec3& n, Vec3& t1, Vec3& t2);

struct Aabb {
  Vec3 min = Vec3::Constant(kInf);
  Vec3 max = Vec3::Constant(-kInf);

  void extend(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  void extend(const Aabb& o) {
    min = min.cwiseMin(o.min);
    max = max.cwiseMax(o.max);
  }
  bool valid() const { return (min.array() <= max.array()).all(); }
  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 extent() const { return max - min; }
  bool overlaps(const Aabb& o) const {
    return (min.array() <= o.max.array()).all() && (o.min.array() <= max.array()).all();
  }
  bool contains(const Vec3& p, double tol = 0.0) const {
    return (p.array() >= min.array() - tol).all() && (p.array() <= max.array() + tol).all();
  }
  Aabb inflated(double r) const {
    return {(min.array() - r).matrix(), (max.array() + r).matrix()};
  }
};

// Slab test; returns entry distance or +inf on miss.
double ray_aabb(const Vec3& origin, const Vec3& dir, const Aabb& box, double t_max);

}  // namespace hullsim
