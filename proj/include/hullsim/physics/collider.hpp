#pragma once

#include "hullsim/core/math.hpp"
#include "hullsim/physics/hull.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace hullsim::physics {

// One convex piece of a body, expressed in the body frame (origin at the
// center of mass). Spheres are analytic; everything else is a hull.
struct Collider {
  enum class Kind { hull, sphere };

  Kind kind = Kind::hull;
  std::shared_ptr<const ConvexHull> hull;
  Vec3 center = Vec3::Zero();  // sphere center
  double radius = 0.0;

  static Collider from_hull(ConvexHull h) {
    Collider c;
    c.kind = Kind::hull;
    c.hull = std::make_shared<const ConvexHull>(std::move(h));
    return c;
  }
  static Collider sphere(double r, const Vec3& center = Vec3::Zero()) {
    Collider c;
    c.kind = Kind::sphere;
    c.radius = r;
    c.center = center;
    return c;
  }

  Aabb local_bounds() const;
};

// World-space copy of a collider for one pose. Rebuilt once per step.
struct PosedCollider {
  Collider::Kind kind = Collider::Kind::hull;
  const ConvexHull* hull = nullptr;
  std::vector<Vec3> vertices;
  std::vector<Vec3> normals;
  std::vector<double> offsets;
  Vec3 center = Vec3::Zero();  // sphere center or hull centroid
  double radius = 0.0;
  Aabb bounds;

  PosedCollider() = default;
  PosedCollider(const Collider& collider, const Pose& pose) { update(collider, pose); }
  void update(const Collider& collider, const Pose& pose);

  int support_index(const Vec3& dir) const;
  double max_face_distance(const Vec3& p, int* face = nullptr) const;
};

struct ContactPoint {
  Vec3 point_a;  // on the surface of a
  Vec3 point_b;  // on the surface of b
  double separation = 0.0;  // negative when penetrating
};

// normal points from a to b; depth = max(0, -min separation).
struct ContactManifold {
  Vec3 normal = Vec3::UnitY();
  double depth = 0.0;
  std::vector<ContactPoint> points;  // at most four
};

inline constexpr double kContactTolerance = 1e-4;

// None iff the shapes are separated by more than `tolerance`.
std::optional<ContactManifold> detect_contacts(const PosedCollider& a, const PosedCollider& b,
                                               double tolerance = kContactTolerance);

struct RayHit {
  double t = kInf;
  Vec3 normal = Vec3::Zero();
};

// Front-face hit with t in [t_min, t_max]; rays starting inside miss.
std::optional<RayHit> raycast(const PosedCollider& shape, const Vec3& origin, const Vec3& dir,
                              double t_min, double t_max);

}  // namespace hullsim::physics
