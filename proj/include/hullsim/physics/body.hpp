#pragma once

#include "hullsim/core/math.hpp"
#include "hullsim/physics/collider.hpp"

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace hullsim::physics {

enum class BodyKind : std::uint8_t { object = 0, avatar = 1, environment = 2 };

// Stable identity of a body inside the solver; ordering fixes iteration order.
struct BodyRef {
  BodyKind kind = BodyKind::object;
  std::uint64_t id = 0;

  auto operator<=>(const BodyRef&) const = default;
};

struct StaticBody : std::logic_error {
  using std::logic_error::logic_error;
};

struct BodyState {
  double mass = 0.0;
  double inv_mass = 0.0;  // 0 for static bodies
  Mat3 inertia = Mat3::Zero();  // body frame, about the center of mass
  Mat3 inv_inertia = Mat3::Zero();
  Vec3 linear_velocity = Vec3::Zero();
  Vec3 angular_velocity = Vec3::Zero();
  double static_friction = 0.5;
  double dynamic_friction = 0.4;
  double bounciness = 0.0;

  bool is_static() const { return inv_mass == 0.0; }
};

struct RigidBody {
  BodyRef ref;
  Pose pose;  // position is the center of mass
  BodyState state;
  std::vector<Collider> colliders;
  int sleep_steps = 0;
  bool sleeping = false;

  // Sets mass and inertia; a non-positive or infinite mass makes the body static.
  void set_mass_properties(double mass, const Mat3& inertia);
  // Rescales mass, keeping the inertia shape.
  void set_mass(double mass);

  Mat3 world_inv_inertia() const;
  Aabb world_bounds() const;
  double kinetic_energy() const;
};

// Colliders re-expressed about the combined center of mass, plus the
// mass data. `com` is where the center of mass sits in the input frame.
struct BodyShape {
  std::vector<Collider> colliders;
  MassProperties mass;
  Vec3 com = Vec3::Zero();
};

BodyShape shape_from_hulls(std::span<const ConvexHull> hulls, double density);
BodyShape shape_from_sphere(double radius, double density, const Vec3& center = Vec3::Zero());

// dv = J/m; an application point adds dw = I^-1 ((point - com) x J).
void apply_impulse(RigidBody& body, const Vec3& impulse, const std::optional<Vec3>& point = std::nullopt);

}  // namespace hullsim::physics
