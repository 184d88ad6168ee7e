#include "hullsim/core/math.hpp"

#include <algorithm>

namespace hullsim {

Quat look_rotation(const Vec3& forward, const Vec3& up) {
  const Vec3 f = forward.normalized();
  Vec3 right = f.cross(up);
  if (right.squaredNorm() < 1e-18) {
    // Looking straight up or down: keep the camera's up on world +Z / -Z.
    right = f.cross(Vec3::UnitZ());
  }
  right.normalize();
  const Vec3 cam_up = right.cross(f);
  Mat3 rot;
  // Local +X is the camera's left in a right-handed, +Z-forward frame.
  rot.col(0) = -right;
  rot.col(1) = cam_up;
  rot.col(2) = f;
  return Quat(rot).normalized();
}

void tangent_basis(const Vec3& n, Vec3& t1, Vec3& t2) {
  if (std::abs(n.x()) >= 0.57735) {
    t1 = Vec3(n.y(), -n.x(), 0.0).normalized();
  } else {
    t1 = Vec3(0.0, n.z(), -n.y()).normalized();
  }
  t2 = n.cross(t1);
}

double ray_aabb(const Vec3& origin, const Vec3& dir, const Aabb& box, double t_max) {
  double t0 = 0.0;
  double t1 = t_max;
  for (int axis = 0; axis < 3; ++axis) {
    const double d = dir[axis];
    if (std::abs(d) < 1e-300) {
      if (origin[axis] < box.min[axis] || origin[axis] > box.max[axis]) return kInf;
      continue;
    }
    const double inv = 1.0 / d;
    double ta = (box.min[axis] - origin[axis]) * inv;
    double tb = (box.max[axis] - origin[axis]) * inv;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return kInf;
  }
  return t0;
}

}  // namespace hullsim
